"""
Curve representations
=====================

:class:`ParametricCurve`
    A closed curve ``C(t)``, ``t in [0, period)``, that can report its
    position and first four derivatives.
:class:`PiecewiseCurve`
    A closed chain of smooth unit-speed segments (lines, circular arcs,
    helical arcs) with C^1 junctions.  Rounded polygons and the closed
    helix are built this way.
:class:`PolygonalCurve`
    A closed polygon, optionally remembering the curve parameters its
    vertices were inscribed at.
:class:`Tantrix`
    The curve of unit tangents on S^2.  For polygons this is the chain of
    edge directions joined by great-circle arcs.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .geometry import (ANTIPODAL_TOL, angle_between, geodesic_points,
                       segment_distances, unit)

MAX_ORDER = 4
CLOSURE_TOL = 1e-10


def _as_params(t):
    return np.atleast_1d(np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# Parametric curves
# ---------------------------------------------------------------------------

class ParametricCurve:
    """Closed curve with derivatives up to order four.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(t, order)`` with ``t`` a 1-D array inside
        ``[0, period)`` returns an array of shape ``(order + 1, len(t), 3)``
        holding ``C(t), C'(t), ..., C^(order)(t)``.
    period : float
        Parameter length of one loop.
    breakpoints : sequence of float
        Parameters in ``[0, period)`` where the curve is only as smooth as
        ``junction_smoothness``; it is C^inf (or at least C^4) elsewhere.
    smoothness : int
        Declared global smoothness class.
    analytic : bool
        False when derivatives come from finite differences.
    """

    def __init__(self, evaluator, period, breakpoints=(), smoothness=4,
                 analytic=True, name=None, spec=None):
        if not period > 0:
            raise DomainError("period must be positive")
        self._evaluator = evaluator
        self.period = float(period)
        self.breakpoints = tuple(sorted(float(b) % self.period
                                        for b in breakpoints))
        self.smoothness = int(smoothness)
        self.analytic = bool(analytic)
        self.name = name
        self.spec = spec

    def evaluate(self, t, order=1):
        """Stack of ``C, C', ..., C^(order)`` at ``t`` (wrapped mod period)."""
        if not 0 <= order <= MAX_ORDER:
            raise DomainError(f"derivative order must be in 0..{MAX_ORDER}")
        t = np.mod(_as_params(t), self.period)
        return self._evaluator(t, order)

    def __call__(self, t):
        return self.evaluate(t, 0)[0]

    def position(self, t):
        return self.evaluate(t, 0)[0]

    def derivative(self, t, k=1):
        return self.evaluate(t, k)[k]

    def tangent(self, t):
        return unit(self.derivative(t, 1))

    def tangent_derivative(self, t):
        """``dT/dt`` for the unit tangent ``T = C'/|C'|``."""
        d = self.evaluate(t, 2)
        c1, c2 = d[1], d[2]
        speed = np.linalg.norm(c1, axis=1, keepdims=True)
        tan = c1 / speed
        return (c2 - tan * np.sum(tan * c2, axis=1, keepdims=True)) / speed

    def smooth_intervals(self, min_pieces=1):
        """Parameter intervals between breakpoints (cyclic, starting at 0).

        Each interval is split evenly so there are at least ``min_pieces``.
        """
        cuts = sorted(set((0.0,) + self.breakpoints))
        ends = cuts[1:] + [self.period]
        spans = list(zip(cuts, ends))
        out = []
        total = self.period
        for a, b in spans:
            k = max(1, int(math.ceil(min_pieces * (b - a) / total - 1e-9)))
            edges = np.linspace(a, b, k + 1)
            out.extend(zip(edges[:-1], edges[1:]))
        return [(float(a), float(b)) for a, b in out]

    def arclength(self, a=0.0, b=None, nodes=16):
        """Arc length between parameters ``a <= b`` (not wrapped)."""
        if b is None:
            b = a + self.period
        cuts = [a] + [bp + k * self.period
                      for k in range(int(math.floor(a / self.period)),
                                     int(math.ceil(b / self.period)) + 1)
                      for bp in self.breakpoints + (0.0,)
                      if a < bp + k * self.period < b] + [b]
        cuts = sorted(set(cuts))
        x, w = np.polynomial.legendre.leggauss(nodes)
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            k = max(1, int(math.ceil((hi - lo) / (self.period / 64))))
            edges = np.linspace(lo, hi, k + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            ts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            speed = np.linalg.norm(self.derivative(ts, 1), axis=1)
            total += float(np.sum((half[:, None] * w[None, :]).ravel()
                                  * speed))
        return total

    def check_closed(self, order=None, tol=CLOSURE_TOL):
        """Raise unless ``C, ..., C^(order)`` agree at ``0`` and ``period``."""
        if order is None:
            order = min(self.smoothness, MAX_ORDER)
        start = self._evaluator(np.array([0.0]), order)
        end = self._evaluator(np.array([np.nextafter(self.period, 0)]), order)
        scale = max(1.0, float(np.max(np.abs(start))))
        gap = np.max(np.abs(start - end), axis=(1, 2))
        bad = np.flatnonzero(gap > tol * scale * 1e3)
        if bad.size:
            raise DomainError(f"curve not closed in derivative {int(bad[0])}"
                              f" (gap {gap[bad[0]]:.3g})")
        return gap

    def check_regular(self, samples=2048, min_speed=1.0):
        """Raise unless ``|C'(t)| >= min_speed`` at ``samples`` points."""
        t = np.linspace(0, self.period, samples, endpoint=False)
        speed = np.linalg.norm(self.derivative(t, 1), axis=1)
        i = int(np.argmin(speed))
        if speed[i] < min_speed * (1 - 1e-12):
            raise DomainError(f"|C'| = {speed[i]:.6g} < {min_speed} "
                              f"at t = {t[i]:.6g}")
        return float(speed[i])

    # -- derived curves -----------------------------------------------------

    def transformed(self, matrix=None, shift=None, scale=1.0):
        """Image under ``x -> scale * matrix @ x + shift``.

        ``matrix`` may be any orthogonal matrix, including reflections.
        """
        m = np.eye(3) if matrix is None else np.asarray(matrix, dtype=float)
        b = np.zeros(3) if shift is None else np.asarray(shift, dtype=float)
        base = self._evaluator

        def evaluator(t, order):
            d = scale * np.einsum("ij,kmj->kmi", m, base(t, order))
            d[0] += b
            return d

        return ParametricCurve(evaluator, self.period, self.breakpoints,
                               self.smoothness, self.analytic, self.name)

    def reversed(self):
        """Same point set traversed backwards: ``t -> period - t``."""
        base = self._evaluator
        p = self.period

        def evaluator(t, order):
            tt = np.mod(p - t, p)
            d = base(tt, order)
            signs = np.array([(-1.0) ** k for k in range(order + 1)])
            return d * signs[:, None, None]

        return ParametricCurve(evaluator, p, [(p - b) % p
                                              for b in self.breakpoints],
                               self.smoothness, self.analytic, self.name)

    def reparametrized(self, amplitude=0.3, harmonic=1):
        """Orientation-preserving reparametrization.

        ``t = g(u) = u + amplitude * P / (2 pi k) * sin(2 pi k u / P)``,
        which is a diffeomorphism of the circle for ``|amplitude| < 1``.
        Breakpoints are mapped back through ``g``.
        """
        if not abs(amplitude) < 1:
            raise DomainError("amplitude must satisfy |amplitude| < 1")
        base = self._evaluator
        p = self.period
        w = 2 * math.pi * harmonic / p
        a = amplitude / w

        def g(u, k):
            if k == 0:
                return u + a * np.sin(w * u)
            if k == 1:
                return 1 + a * w * np.cos(w * u)
            phase = [np.sin, np.cos, lambda x: -np.sin(x),
                     lambda x: -np.cos(x)][k % 4]
            return a * w ** k * phase(w * u)

        def evaluator(u, order):
            tt = np.mod(g(u, 0), p)
            c = base(tt, order)
            out = np.empty_like(c)
            out[0] = c[0]
            g1 = g(u, 1)[:, None]
            if order >= 1:
                out[1] = c[1] * g1
            if order >= 2:
                g2 = g(u, 2)[:, None]
                out[2] = c[2] * g1 ** 2 + c[1] * g2
            if order >= 3:
                g3 = g(u, 3)[:, None]
                out[3] = c[3] * g1 ** 3 + 3 * c[2] * g1 * g2 + c[1] * g3
            if order >= 4:
                g4 = g(u, 4)[:, None]
                out[4] = (c[4] * g1 ** 4 + 6 * c[3] * g1 ** 2 * g2
                          + c[2] * (3 * g2 ** 2 + 4 * g1 * g3) + c[1] * g4)
            return out

        inv = []
        for b in self.breakpoints:
            inv.append(brentq(lambda u: g(u, 0) - b, -p, 2 * p))
        return ParametricCurve(evaluator, p, [x % p for x in inv],
                               self.smoothness, self.analytic, self.name)

    @classmethod
    def from_position(cls, func, period, name=None, step=None):
        """Curve from a position-only callable, derivatives by differences.

        Central differences with step ``h = period * 1e-4`` are combined by
        one Richardson step (``h`` and ``h/2``).  Curves built this way carry
        ``analytic = False`` so downstream bounds are marked as estimated.
        """
        h = period * 1e-4 if step is None else step
        # Central difference stencils for derivatives 1..4 (offsets -2..2).
        stencils = {
            1: np.array([1, -8, 0, 8, -1]) / 12.0,
            2: np.array([-1, 16, -30, 16, -1]) / 12.0,
            3: np.array([-1, 2, 0, -2, 1]) / 2.0,
            4: np.array([1, -4, 6, -4, 1]),
        }
        offsets = np.arange(-2, 3)

        def fd(t, k, hh):
            vals = np.stack([np.asarray(func(t + o * hh), dtype=float)
                             for o in offsets])
            return np.tensordot(stencils[k], vals, axes=1) / hh ** k

        def evaluator(t, order):
            out = np.empty((order + 1, t.size, 3))
            out[0] = np.asarray(func(t), dtype=float)
            for k in range(1, order + 1):
                coarse, fine = fd(t, k, h), fd(t, k, h / 2)
                # Stencils 1, 2 are 4th order; 3, 4 are 2nd order.
                p = 4 if k <= 2 else 2
                out[k] = fine + (fine - coarse) / (2 ** p - 1)
            return out

        return cls(evaluator, period, analytic=False, name=name)


# ---------------------------------------------------------------------------
# Smooth unit-speed segments
# ---------------------------------------------------------------------------

class Segment:
    """Unit-speed smooth arc ``s -> X(s)``, ``s in [0, length]``."""

    kind = "segment"
    length = 0.0

    def evaluate(self, s, order):
        raise NotImplementedError

    @property
    def plane_normal(self):
        """Normal of a plane containing the segment, ``None`` if not planar.

        Lines lie in many planes and report their direction instead (see
        :attr:`is_line`).
        """
        return None

    is_line = False
    is_planar = False

    def sample_points(self, k=5):
        return self.evaluate(np.linspace(0, self.length, k), 0)[0]


@dataclass
class Line(Segment):
    start: np.ndarray
    direction: np.ndarray
    length: float
    kind: str = field(default="line", init=False)

    is_line = True
    is_planar = True

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.direction = unit(self.direction)
        if not self.length > 0:
            raise DomainError("line segment length must be positive")

    def evaluate(self, s, order):
        out = np.zeros((order + 1, s.size, 3))
        out[0] = self.start + s[:, None] * self.direction
        if order >= 1:
            out[1] = self.direction
        return out

    @property
    def end(self):
        return self.start + self.length * self.direction


@dataclass
class Arc(Segment):
    """Circular arc ``c + r (cos(a0 + s/r) e1 + sin(a0 + s/r) e2)``."""

    center: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    radius: float
    start_angle: float
    sweep: float
    kind: str = field(default="arc", init=False)

    is_planar = True

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.e1 = unit(self.e1)
        self.e2 = unit(np.asarray(self.e2, dtype=float)
                       - np.dot(self.e2, self.e1) * self.e1)
        if not (self.radius > 0 and self.sweep > 0):
            raise DomainError("arc radius and sweep must be positive")

    @property
    def length(self):
        return self.radius * self.sweep

    @property
    def plane_normal(self):
        return np.cross(self.e1, self.e2)

    def evaluate(self, s, order):
        r = self.radius
        ang = self.start_angle + s / r
        c, sn = np.cos(ang)[:, None], np.sin(ang)[:, None]
        out = np.empty((order + 1, s.size, 3))
        out[0] = self.center + r * (c * self.e1 + sn * self.e2)
        # d/ds rotates (cos, sin) -> (-sin, cos) and scales by 1/r.
        basis = [(c, sn), (-sn, c), (-c, -sn), (sn, -c)]
        for k in range(1, order + 1):
            a, b = basis[k % 4]
            out[k] = r ** (1 - k) * (a * self.e1 + b * self.e2)
        return out


@dataclass
class HelixArc(Segment):
    """Unit-speed circular helix about the z axis through ``(R, 0, z0)``.

    ``X(s) = (R cos ws, R sin ws, z0 + R tan(p) ws)`` with
    ``w = cos(p) / R``; ``p`` is the pitch angle between the tangent and
    the horizontal plane.
    """

    radius: float
    pitch_angle: float
    turns: float
    z0: float = 0.0
    kind: str = field(default="helix", init=False)

    @property
    def omega(self):
        return math.cos(self.pitch_angle) / self.radius

    @property
    def length(self):
        return 2 * math.pi * self.turns / self.omega

    def evaluate(self, s, order):
        r, w = self.radius, self.omega
        rise = r * math.tan(self.pitch_angle)
        ang = w * s
        c, sn = np.cos(ang), np.sin(ang)
        out = np.zeros((order + 1, s.size, 3))
        out[0] = np.stack([r * c, r * sn, self.z0 + rise * ang], axis=1)
        basis = [(c, sn), (-sn, c), (-c, -sn), (sn, -c)]
        for k in range(1, order + 1):
            a, b = basis[k % 4]
            out[k, :, 0] = r * w ** k * a
            out[k, :, 1] = r * w ** k * b
        if order >= 1:
            out[1, :, 2] = rise * w
        return out


# ---------------------------------------------------------------------------
# Piecewise curves
# ---------------------------------------------------------------------------

class PiecewiseCurve(ParametricCurve):
    """Closed chain of unit-speed segments, parametrized by arc length.

    Consecutive segments must meet with matching position and tangent
    (within ``1e-10``, relative to the curve's size); the result is C^1
    and C^inf away from the junctions.
    """

    def __init__(self, segments, name=None, spec=None, junction_tol=1e-10):
        self.segments = list(segments)
        if len(self.segments) < 2:
            raise DomainError("a piecewise curve needs at least two segments")
        lengths = np.array([seg.length for seg in self.segments])
        self.offsets = np.concatenate([[0.0], np.cumsum(lengths)])
        self._check_junctions(junction_tol)
        super().__init__(self._evaluate, float(self.offsets[-1]),
                         breakpoints=self.offsets[1:-1].tolist() + [0.0],
                         smoothness=1, analytic=True, name=name, spec=spec)

    def _check_junctions(self, tol):
        scale = max(1.0, max(float(np.max(np.abs(seg.sample_points(3))))
                             for seg in self.segments))
        nseg = len(self.segments)
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % nseg]
            end = seg.evaluate(np.array([seg.length]), 1)[:, 0]
            start = nxt.evaluate(np.array([0.0]), 1)[:, 0]
            if np.linalg.norm(end[0] - start[0]) > tol * scale:
                raise DomainError(f"segments {i} and {(i + 1) % nseg} "
                                  "do not meet")
            if np.linalg.norm(end[1] - start[1]) > tol:
                raise DomainError(f"tangent jumps between segments {i} and "
                                  f"{(i + 1) % nseg}")

    def segment_index(self, t):
        t = np.mod(_as_params(t), self.period)
        idx = np.searchsorted(self.offsets, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def _evaluate(self, t, order):
        out = np.empty((order + 1, t.size, 3))
        idx = self.segment_index(t)
        for i in np.unique(idx):
            mask = idx == i
            seg = self.segments[i]
            local = np.clip(t[mask] - self.offsets[i], 0.0, seg.length)
            out[:, mask] = seg.evaluate(local, order)
        return out

    def segment_interval(self, i):
        return float(self.offsets[i]), float(self.offsets[i + 1])


def closed_helix(turns=3, radius=1.0, pitch_angle=0.33, closure_radius=None):
    """Fuller's closed helix: a helix whose ends are joined by a planar loop.

    The helical part makes ``turns`` full turns about the z axis, starting
    at ``A = (R, 0, 0)`` and ending at ``B = (R, 0, H)``.  Both ends have the
    same unit tangent ``(0, cos p, sin p)``.  The closure lies in the plane
    ``x = R`` tangent to the helix cylinder along the line through A and B;
    that plane contains the end tangents, and it meets the helix only at
    the points ``(R, 0, 2 pi k R tan p)``.  The loop leaves B, turns through
    a full ``2 pi`` counterclockwise (arc, arc, vertical line, arc) and
    re-enters at A, so its tantrix is one full great circle.

    The curve is parametrized by arc length starting at A, so ``|C'| = 1``
    and on the helix ``|C''| = cos^2 p / R`` and ``|C'''| = cos^3 p / R^2``.
    It is C^1 at the two helix/closure junctions (the helix's curvature
    vector is normal to the closure plane there) and C^inf elsewhere.

    ``closure_radius`` (default ``3.8 R``) sets the radius of the closure's
    arcs; the default gives total length about 50.27 for the reference
    curve ``closed_helix(3, 1, 0.33)``.
    """
    if int(turns) != turns or turns < 1:
        raise DomainError("turns must be a positive integer")
    if not radius > 0:
        raise DomainError("radius must be positive")
    if not 0 < pitch_angle < math.pi / 2:
        raise DomainError("pitch_angle must lie in (0, pi/2)")
    rho = 3.8 * radius if closure_radius is None else float(closure_radius)
    if not rho > 0:
        raise DomainError("closure_radius must be positive")
    phi = float(pitch_angle)
    helix = HelixArc(radius, phi, int(turns))
    height = 2 * math.pi * turns * radius * math.tan(phi)

    ey, ez = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])

    def plane_point(y, z):
        return np.array([radius, y, z])

    def ccw_arc(start_yz, heading_from, heading_to):
        # Circle to the left of the heading; point(h) = c + rho (sin h, -cos h)
        center = (np.asarray(start_yz)
                  + rho * np.array([-math.sin(heading_from),
                                    math.cos(heading_from)]))
        arc = Arc(plane_point(*center), ey, ez, rho,
                  heading_from - math.pi / 2, heading_to - heading_from)
        end = center + rho * np.array([math.sin(heading_to),
                                       -math.cos(heading_to)])
        return arc, end

    top = np.array([0.0, height])
    arc1, p1 = ccw_arc(top, phi, math.pi)
    arc2, p2 = ccw_arc(p1, math.pi, 1.5 * math.pi)
    drop = Line(plane_point(*p2), -ez, height)
    p3 = p2 - np.array([0.0, height])
    arc3, _ = ccw_arc(p3, 1.5 * math.pi, 2 * math.pi + phi)
    spec = {"name": "closed-helix", "turns": int(turns), "radius": radius,
            "pitch": phi, "closure_radius": rho}
    curve = PiecewiseCurve([helix, arc1, arc2, drop, arc3],
                           name="closed-helix", spec=spec)
    curve.helix_interval = (0.0, helix.length)
    return curve


def closed_helix_writhe(turns, pitch_angle):
    """Exact writhe ``turns * (1 - sin(pitch_angle))`` of the closed helix."""
    return turns * (1.0 - math.sin(pitch_angle))


def circle(radius=1.0, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
           unit_speed=True):
    """Circle of given radius; unit speed (period ``2 pi r``) or angle."""
    n = unit(normal)
    e1 = unit(np.cross(n, [1.0, 0, 0]) if abs(n[0]) < 0.9
              else np.cross(n, [0, 1.0, 0]))
    e2 = np.cross(n, e1)
    c = np.asarray(center, dtype=float)
    w = 1.0 / radius if unit_speed else 1.0

    def evaluator(t, order):
        ang = w * t
        cs, sn = np.cos(ang)[:, None], np.sin(ang)[:, None]
        basis = [(cs, sn), (-sn, cs), (-cs, -sn), (sn, -cs)]
        out = np.empty((order + 1, t.size, 3))
        for k in range(order + 1):
            a, b = basis[k % 4]
            out[k] = radius * w ** k * (a * e1 + b * e2)
        out[0] += c
        return out

    period = 2 * math.pi * radius if unit_speed else 2 * math.pi
    return ParametricCurve(evaluator, period, name="circle",
                           spec={"name": "circle", "radius": radius})


def ellipse(a=2.0, b=1.0):
    """Planar ellipse ``(a cos t, b sin t, 0)``, ``t in [0, 2 pi)``.

    Scaled so ``|C'| >= 1`` requires ``min(a, b) >= 1``.
    """
    def evaluator(t, order):
        cs, sn = np.cos(t), np.sin(t)
        basis = [(cs, sn), (-sn, cs), (-cs, -sn), (sn, -cs)]
        out = np.zeros((order + 1, t.size, 3))
        for k in range(order + 1):
            p, q = basis[k % 4]
            out[k, :, 0] = a * p
            out[k, :, 1] = b * q
        return out

    return ParametricCurve(evaluator, 2 * math.pi, name="ellipse",
                           spec={"name": "ellipse", "a": a, "b": b})


def fourier_curve(coefficients, name="fourier"):
    """Trigonometric curve ``sum_k A_k cos(k t) + B_k sin(k t)``.

    ``coefficients`` has shape ``(K, 2, 3)``: ``[k-1, 0]`` is ``A_k`` and
    ``[k-1, 1]`` is ``B_k``.  Period ``2 pi``.
    """
    coef = np.asarray(coefficients, dtype=float)
    ks = np.arange(1, coef.shape[0] + 1)

    def evaluator(t, order):
        ang = np.outer(t, ks)
        cs, sn = np.cos(ang), np.sin(ang)
        out = np.empty((order + 1, t.size, 3))
        for d in range(order + 1):
            # d-th derivative of cos(kt), sin(kt)
            ca = [cs, -sn, -cs, sn][d % 4] * ks ** d
            sa = [sn, cs, -sn, -cs][d % 4] * ks ** d
            out[d] = ca @ coef[:, 0, :] + sa @ coef[:, 1, :]
        return out

    return ParametricCurve(evaluator, 2 * math.pi, name=name,
                           spec={"name": name, "coefficients": coef.tolist()})


def torus_knot(p=2, q=3, major=2.0, minor=1.0):
    """Torus knot on the torus with the given radii, period ``2 pi``."""
    def position(t):
        r = major + minor * np.cos(q * t)
        return np.stack([r * np.cos(p * t), r * np.sin(p * t),
                         minor * np.sin(q * t)], axis=-1)

    # Exact derivatives through the Fourier expansion of position.
    #   r cos(pt) = R cos(pt) + (m/2)[cos((p+q)t) + cos((p-q)t)]
    #   r sin(pt) = R sin(pt) + (m/2)[sin((p+q)t) + sin((p-q)t)]
    terms = [  # (frequency, x-cos, x-sin, y-cos, y-sin, z-cos, z-sin)
        (p, major, 0.0, 0.0, major, 0.0, 0.0),
        (p + q, minor / 2, 0.0, 0.0, minor / 2, 0.0, 0.0),
        (p - q, minor / 2, 0.0, 0.0, minor / 2, 0.0, 0.0),
        (q, 0.0, 0.0, 0.0, 0.0, 0.0, minor),
    ]

    def evaluator(t, order):
        out = np.zeros((order + 1, t.size, 3))
        for f, xc, xs, yc, ys, zc, zs in terms:
            ang = f * t
            cs, sn = np.cos(ang), np.sin(ang)
            for d in range(order + 1):
                ca = [cs, -sn, -cs, sn][d % 4] * f ** d
                sa = [sn, cs, -sn, -cs][d % 4] * f ** d
                out[d, :, 0] += xc * ca + xs * sa
                out[d, :, 1] += yc * ca + ys * sa
                out[d, :, 2] += zc * ca + zs * sa
        return out

    curve = ParametricCurve(evaluator, 2 * math.pi, name="torus-knot",
                            spec={"name": "torus-knot", "p": p, "q": q,
                                  "major": major, "minor": minor})
    curve.position_function = position
    return curve


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------

class PolygonalCurve:
    """Closed polygon through ``vertices`` (the last joins the first).

    Parameters
    ----------
    vertices : array-like
        ``(n, 3)``, ``n >= 3``.
    params : array-like, optional
        Curve parameters the vertices were inscribed at, strictly
        increasing within one period.
    source : ParametricCurve, optional
        The curve the polygon is inscribed in.
    """

    def __init__(self, vertices, params=None, source=None, meta=None):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise DomainError("a polygon needs an (n, 3) vertex array, n>=3")
        if not np.all(np.isfinite(v)):
            raise DomainError("polygon vertices must be finite")
        self.vertices = v
        self.vertices.setflags(write=False)
        lengths = self.edge_lengths()
        zero = np.flatnonzero(lengths == 0)
        if zero.size:
            raise DomainError(f"edge {int(zero[0])} has zero length")
        self.params = None if params is None else np.asarray(params, float)
        if self.params is not None and self.params.shape != (v.shape[0],):
            raise DomainError("params must have one entry per vertex")
        self.source = source
        self.meta = dict(meta or {})

    def __len__(self):
        return self.vertices.shape[0]

    @property
    def n(self):
        return self.vertices.shape[0]

    def edges(self):
        """``(n, 3)`` edge vectors ``v[i+1] - v[i]``."""
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def edge_lengths(self):
        return np.linalg.norm(self.edges(), axis=1)

    def edge_tangents(self):
        """Unit direction of edge ``i``, the tangent leaving vertex ``i``."""
        return unit(self.edges())

    def corner_angles(self):
        """Interior angle at each vertex (``pi`` for a straight vertex)."""
        t = self.edge_tangents()
        turning = angle_between(np.roll(t, 1, axis=0), t)
        return np.pi - turning

    def transformed(self, matrix=None, shift=None, scale=1.0):
        m = np.eye(3) if matrix is None else np.asarray(matrix, float)
        b = np.zeros(3) if shift is None else np.asarray(shift, float)
        return PolygonalCurve(scale * self.vertices @ m.T + b, self.params,
                              None, self.meta)

    def reversed(self):
        return PolygonalCurve(self.vertices[::-1].copy())

    def intersecting_pairs(self, rel_tol=1e-12, first_only=False):
        """Non-adjacent edge pairs closer than ``rel_tol`` times the
        longest edge (O(n^2) segment-distance test)."""
        n = self.n
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        tol = rel_tol * float(np.max(self.edge_lengths()))
        found = []
        for i in range(n - 2):
            j = np.arange(i + 2, n if i > 0 else n - 1)
            if j.size == 0:
                continue
            d = segment_distances(np.broadcast_to(v[i], (j.size, 3)),
                                  np.broadcast_to(w[i], (j.size, 3)),
                                  v[j], w[j])
            hit = j[d <= tol]
            for jj in hit:
                found.append((i, int(jj)))
                if first_only:
                    return found
        return found

    def check_simple(self, rel_tol=1e-12):
        """Raise :class:`DomainError` naming an intersecting edge pair."""
        bad = self.intersecting_pairs(rel_tol, first_only=True)
        if bad:
            i, j = bad[0]
            raise DomainError(f"polygon self-intersects: edges {i} and {j}")

    def min_nonadjacent_distance(self):
        n = self.n
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        best = np.inf
        for i in range(n - 2):
            j = np.arange(i + 2, n if i > 0 else n - 1)
            if j.size:
                d = segment_distances(np.broadcast_to(v[i], (j.size, 3)),
                                      np.broadcast_to(w[i], (j.size, 3)),
                                      v[j], w[j])
                best = min(best, float(np.min(d)))
        return best


def max_edge_length(p):
    """Longest edge of a polygon."""
    return float(np.max(p.edge_lengths()))


def inscribe(c, params=None, n=None):
    """Polygon with vertices ``c(t_i)``.

    Give either ``params`` (strictly increasing, spanning less than one
    period) or ``n`` for equispaced parameters ``t_i = i * period / n``.
    """
    if (params is None) == (n is None):
        raise DomainError("give exactly one of params or n")
    if params is None:
        if int(n) != n or n < 3:
            raise DomainError("n must be an integer >= 3")
        params = np.arange(int(n)) * (c.period / int(n))
    t = np.asarray(params, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise DomainError("need at least 3 parameters")
    if np.any(np.diff(t) <= 0):
        raise DomainError("parameters must be strictly increasing")
    if t[-1] - t[0] >= c.period:
        raise DomainError("parameters must lie within one period")
    verts = c.position(t)
    return PolygonalCurve(verts, params=t, source=c,
                          meta={"generator": c.spec} if c.spec else None)


def inscribe_with_max_edge(c, n, x, anchor=None):
    """Inscribe ``n`` vertices so the longest edge is exactly ``x``.

    ``c`` must be parametrized by arc length (:class:`PiecewiseCurve`).
    ``n - 1`` edges span equal arc lengths ``sigma``; the remaining edge is
    stretched so its chord is ``x``.  The stretched edge is centred on
    parameter ``anchor`` (default: middle of the longest straight segment,
    where chord equals arc length).

    Raises
    ------
    DomainError
        If no ``sigma`` makes the stretched edge longest, i.e. when ``x`` is
        below the mean edge length ``period / n``.
    """
    length = c.period
    if anchor is None:
        lines = [i for i, seg in enumerate(getattr(c, "segments", []))
                 if seg.is_line]
        if lines:
            i = max(lines, key=lambda k: c.segments[k].length)
            a, b = c.segment_interval(i)
            anchor = 0.5 * (a + b)
        else:
            anchor = 0.0

    def layout(sigma):
        long_arc = length - (n - 1) * sigma
        start = anchor + 0.5 * long_arc
        return np.mod(start + sigma * np.arange(n), length)

    def chords(sigma):
        t = layout(sigma)
        order = np.argsort(t)
        pts = c.position(t[order])
        e = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        return t[order], pts, e

    def long_chord(sigma):
        t = layout(sigma)
        last, first = c.position(np.array([t[-1], t[0]]))
        return float(np.linalg.norm(first - last))

    lo, hi = (length - 2.5 * x) / (n - 1), length / n
    if long_chord(hi) > x:
        raise DomainError(f"max edge {x} is below the mean edge length")
    sigma = brentq(lambda s: long_chord(s) - x, max(lo, 1e-12), hi,
                   xtol=1e-15, rtol=1e-15)
    t, _, e = chords(sigma)
    if np.max(e) > x * (1 + 1e-9):
        raise DomainError("regular edges exceed the requested max edge")
    # Rotate so the vertex list starts at the smallest parameter.
    return inscribe(c, params=t)


# ---------------------------------------------------------------------------
# Corner rounding
# ---------------------------------------------------------------------------

def round_corners(p, radius):
    """Replace each corner of ``p`` by a circular arc tangent to both edges.

    Each arc lies in the plane of its two edges and starts ``radius`` before
    the corner along the incoming edge and ends ``radius`` after it along
    the outgoing edge; outside those neighbourhoods the curve equals ``p``.
    The tantrix of the result is the great-circle chain of ``p``.

    Raises
    ------
    DomainError
        If ``radius`` is not below half of every edge, or some corner angle
        is not positive.
    """
    lengths = p.edge_lengths()
    if not 0 < radius < 0.5 * float(np.min(lengths)):
        raise DomainError("radius must be positive and below half the "
                          "shortest edge")
    tangents = p.edge_tangents()
    n = p.n
    segments = []
    v = p.vertices
    for i in range(n):
        d_in, d_out = tangents[i - 1], tangents[i]
        beta = float(angle_between(d_in, d_out))
        if beta > math.pi - 1e-9:
            raise DomainError(f"corner {i} has zero angle")
        if beta > 1e-12:
            rho = radius / math.tan(beta / 2)
            normal_in = unit(d_out - np.dot(d_out, d_in) * d_in)
            p_in = v[i] - radius * d_in
            center = p_in + rho * normal_in
            segments.append(Arc(center, -normal_in, d_in, rho, 0.0, beta))
        start = v[i] + radius * d_out if beta > 1e-12 else v[i]
        end_trim = radius if abs(_turning(tangents, i + 1)) > 1e-12 else 0.0
        seg_len = lengths[i] - (radius if beta > 1e-12 else 0.0) - end_trim
        segments.append(Line(start, d_out, seg_len))
    # Start the parametrization at the first straight piece.
    curve = PiecewiseCurve(segments, name="rounded-polygon")
    curve.corner_radius = radius
    return curve


def _turning(tangents, i):
    n = tangents.shape[0]
    return float(angle_between(tangents[(i - 1) % n], tangents[i % n]))


# ---------------------------------------------------------------------------
# Tantrix
# ---------------------------------------------------------------------------

@dataclass
class Tantrix:
    """Tangent indicatrix.

    ``kind == "smooth"``: ``points[k] = T(params[k])`` sampled along a
    smooth curve.  ``kind == "polygonal"``: ``points`` are the edge
    tangents, implicitly joined by minor great-circle arcs.
    """

    points: np.ndarray
    kind: str
    params: np.ndarray = None

    def loop(self, arc_samples=8):
        """Closed spherical polygon tracing the tantrix.

        For polygons each connecting arc is densified with ``arc_samples``
        points (endpoints shared).
        """
        if self.kind == "smooth":
            return np.asarray(self.points)
        pts = np.asarray(self.points)
        chain = []
        for i in range(pts.shape[0]):
            arc = geodesic_points(pts[i], pts[(i + 1) % pts.shape[0]],
                                  max(arc_samples, 2))
            chain.append(arc[:-1])
        return np.concatenate(chain)


def tantrix(c, samples=4096):
    """Tantrix of a parametric curve (sampled) or polygon (geodesic chain).

    Smooth samples include every breakpoint of the curve.

    Raises
    ------
    DomainError
        Zero derivative at a sample, or antipodal consecutive edge tangents
        (a corner of angle zero) for polygons.
    """
    if isinstance(c, PolygonalCurve):
        t = c.edge_tangents()
        gap = np.linalg.norm(t + np.roll(t, -1, axis=0), axis=1)
        bad = np.flatnonzero(gap < ANTIPODAL_TOL)
        if bad.size:
            raise DomainError(f"edges {int(bad[0])} and {int(bad[0]) + 1} "
                              "reverse direction")
        return Tantrix(t, "polygonal")
    ts = np.linspace(0, c.period, samples, endpoint=False)
    ts = np.unique(np.concatenate([ts, np.asarray(c.breakpoints)]))
    d1 = c.derivative(ts, 1)
    if np.any(np.linalg.norm(d1, axis=1) == 0):
        raise DomainError("zero derivative on the curve")
    return Tantrix(unit(d1), "smooth", ts)


# ---------------------------------------------------------------------------
# Named generators
# ---------------------------------------------------------------------------

def _closed_helix_from(turns=3, radius=1.0, pitch=0.33, closure_radius=None):
    return closed_helix(int(turns), float(radius), float(pitch),
                        None if closure_radius is None
                        else float(closure_radius))


GENERATORS = {
    "closed-helix": (_closed_helix_from,
                     {"turns": 3, "radius": 1.0, "pitch": 0.33}),
    "circle": (lambda radius=1.0: circle(float(radius)), {"radius": 1.0}),
    "ellipse": (lambda a=2.0, b=1.0: ellipse(float(a), float(b)),
                {"a": 2.0, "b": 1.0}),
    "torus-knot": (lambda p=2, q=3, major=2.0, minor=1.0:
                   torus_knot(int(p), int(q), float(major), float(minor)),
                   {"p": 2, "q": 3, "major": 2.0, "minor": 1.0}),
}


def parse_generator_spec(text):
    """Split ``"name:key=value,key=value"`` into ``(name, params)``."""
    name, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DomainError(f"bad generator parameter {item!r}")
        params[key.strip().replace("-", "_")] = float(value)
    return name.strip(), params


def format_generator_spec(name, params):
    body = ",".join(f"{k}={params[k]!r}" for k in sorted(params))
    return f"{name}:{body}" if body else name


def make_curve(name, params=None):
    """Build a named curve; ``name`` may carry ``:key=value`` parameters.

    Known names: ``closed-helix`` (turns, radius, pitch, closure_radius),
    ``circle`` (radius), ``ellipse`` (a, b), ``torus-knot`` (p, q, major,
    minor).
    """
    extra = {}
    if ":" in name:
        name, extra = parse_generator_spec(name)
    if name not in GENERATORS:
        raise DomainError(f"unknown generator {name!r}; known: "
                          + ", ".join(sorted(GENERATORS)))
    factory, defaults = GENERATORS[name]
    merged = dict(defaults)
    merged.update(extra)
    merged.update(params or {})
    try:
        curve = factory(**merged)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from None
    curve.generator = format_generator_spec(name, merged)
    return curve


def default_derivative_bounds(c):
    """Bounds known in closed form for a generated curve, else ``None``.

    Closed helix (arc-length parametrized): the suprema over the smooth
    pieces, ``max(cos^k(p) / R^(k-1), 1/rho^(k-1))`` for the ``k``-th
    derivative, each rounded up to 1.  Circle: ``1/r^(k-1)`` similarly.
    Returned as a plain tuple ``(B1, B2, B3, B4)``.
    """
    spec = getattr(c, "spec", None) or {}
    if spec.get("name") == "closed-helix":
        cp = math.cos(spec["pitch"])
        r, rho = spec["radius"], spec["closure_radius"]
        vals = [1.0] + [max(1.0, cp ** k / r ** (k - 1), 1 / rho ** (k - 1))
                        for k in (2, 3, 4)]
        return tuple(vals)
    if spec.get("name") == "circle":
        r = spec["radius"]
        return tuple([1.0] + [max(1.0, 1 / r ** (k - 1)) for k in (2, 3, 4)])
    return None


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def _header(meta):
    lines = []
    for key, value in meta.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple, np.ndarray)):
            value = " ".join(repr(float(v)) for v in value)
        lines.append(f"# {key}: {value}")
    return lines


def write_polygon(path, p, generator=None, extra=None):
    """Write ``p`` as ``x y z`` lines under a ``# key: value`` header.

    Coordinates are written with ``repr`` so reading back is bit-exact.
    Recorded inscription parameters are stored as ``# params:``.
    """
    meta = {"format": "polygon", "n": p.n}
    if generator is not None:
        meta["generator"] = generator
    meta.update(extra or {})
    if p.params is not None:
        meta["params"] = p.params
    lines = _header(meta)
    lines.extend(" ".join(repr(float(x)) for x in row) for row in p.vertices)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_table(path):
    meta, rows = {}, []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            try:
                rows.append([float(x) for x in line.split()])
            except ValueError:
                raise DomainError(f"{path}:{lineno}: not a list of numbers")
    return meta, rows


def read_polygon(path):
    """Read a polygon file; returns ``(polygon, metadata dict)``."""
    meta, rows = _read_table(path)
    if not rows or any(len(r) != 3 for r in rows):
        raise DomainError(f"{path}: expected lines of three numbers")
    params = None
    if "params" in meta:
        params = np.array([float(x) for x in meta["params"].split()])
    return PolygonalCurve(np.array(rows), params=params, meta=meta), meta


def write_samples(path, c, samples=1000, generator=None):
    """Write ``t x y z`` samples of a parametric curve."""
    t = np.linspace(0, c.period, samples, endpoint=False)
    pos = c.position(t)
    meta = {"format": "samples", "generator": generator,
            "period": repr(c.period),
            "derivatives": "analytic" if c.analytic else "estimated"}
    lines = _header(meta)
    lines.extend(" ".join(repr(float(x)) for x in (ti, *row))
                 for ti, row in zip(t, pos))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_samples(path):
    """Read a sampled-curve file; returns ``(t, positions, metadata)``."""
    meta, rows = _read_table(path)
    if not rows or any(len(r) != 4 for r in rows):
        raise DomainError(f"{path}: expected lines of four numbers")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1:], meta
