"""
Writhe differences from the tantrix (Fuller's formula and its polygonal
extension).

If two closed curves ``X0`` and ``X1`` can be deformed into each other so
that the tangents never become antipodal to those of ``X1``, then

    Wr(X1) - Wr(X0) = 1/(2 pi) \\oint (T0 x T1) / (1 + T0 . T1) . (T0' + T1') dt,

the integral being the signed area of the ribbon swept on the sphere
between the two tantrices.  For an inscribed polygon ``X1`` the ribbon
breaks into one region per edge (bounded by the smooth tantrix arc over
the edge and the two geodesics to the edge direction) plus one geodesic
triangle per corner.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds as _bounds
from .errors import DomainError, HypothesisError
from .geometry import (ANTIPODAL_TOL, angle_between, compensated_sum,
                       signed_polygon_area, triangle_areas)

#: Consecutive homotopy tangents closer than this to antipodal fail.
HOMOTOPY_ANTIPODAL_TOL = 1e-6


@dataclass
class RibbonSampling:
    """Two tantrix curves sampled at shared parameters.

    Attributes
    ----------
    params : ndarray
        ``(m,)`` parameter values.
    T0, T1 : ndarray
        ``(m, 3)`` unit tangents.
    dT0, dT1 : ndarray, optional
        Their parameter derivatives; estimated by differences when missing.
    weights : ndarray, optional
        Quadrature weights for the samples.  Without them the trapezoidal
        rule is used, closing the loop when ``period`` is set.
    period : float, optional
        Set for closed ribbons sampled over one period.
    """

    params: np.ndarray
    T0: np.ndarray
    T1: np.ndarray
    dT0: np.ndarray = None
    dT1: np.ndarray = None
    weights: np.ndarray = None
    period: float = None

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.T0 = np.atleast_2d(np.asarray(self.T0, dtype=float))
        self.T1 = np.atleast_2d(np.asarray(self.T1, dtype=float))
        m = self.params.size
        if self.T0.shape != (m, 3) or self.T1.shape != (m, 3):
            raise DomainError("T0, T1 must be (m, 3) with m parameters")
        for name in ("dT0", "dT1"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val, dtype=float)
                if val.shape != (m, 3):
                    raise DomainError(f"{name} must have shape (m, 3)")
                setattr(self, name, val)
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (m,):
                raise DomainError("weights must have one entry per sample")
        for name in ("T0", "T1"):
            norm = np.linalg.norm(getattr(self, name), axis=1)
            if np.max(np.abs(norm - 1)) > 1e-12:
                raise DomainError(f"{name} samples must be unit vectors")
        gap = np.linalg.norm(self.T0 + self.T1, axis=1)
        bad = np.flatnonzero(gap < ANTIPODAL_TOL)
        if bad.size:
            raise DomainError("T0 and T1 antipodal at parameter "
                              f"{self.params[bad[0]]:.12g}")

    @classmethod
    def from_functions(cls, f0, f1, params, weights=None, period=None):
        """Sample ``f(t) -> (T, T')`` pairs at ``params``."""
        t = np.asarray(params, dtype=float)
        T0, dT0 = f0(t)
        T1, dT1 = f1(t)
        return cls(t, T0, T1, dT0, dT1, weights, period)

    @classmethod
    def periodic(cls, f0, f1, period, m):
        """``m`` equispaced samples over one period (trapezoidal weights)."""
        t = np.arange(m) * (period / m)
        return cls.from_functions(f0, f1, t, np.full(m, period / m), period)

    @classmethod
    def gauss(cls, f0, f1, a, b, m):
        """``m`` Gauss-Legendre samples on ``[a, b]``."""
        x, w = np.polynomial.legendre.leggauss(m)
        t = 0.5 * (a + b) + 0.5 * (b - a) * x
        return cls.from_functions(f0, f1, t, 0.5 * (b - a) * w)

    def derivatives(self):
        if self.dT0 is not None and self.dT1 is not None:
            return self.dT0, self.dT1
        return _difference(self.params, self.T0, self.period), \
            _difference(self.params, self.T1, self.period)

    def quadrature_weights(self):
        if self.weights is not None:
            return self.weights
        t = self.params
        if self.period is not None:
            ext = np.concatenate([[t[-1] - self.period], t,
                                  [t[0] + self.period]])
            return 0.5 * (ext[2:] - ext[:-2])
        w = np.zeros_like(t)
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w


def _difference(t, y, period):
    """Second-order differences of samples ``y`` at parameters ``t``."""
    if period is not None:
        tp = np.concatenate([[t[-1] - period], t, [t[0] + period]])
        yp = np.concatenate([y[-1:], y, y[:1]])
        h0 = (tp[1:-1] - tp[:-2])[:, None]
        h1 = (tp[2:] - tp[1:-1])[:, None]
        return (h0 ** 2 * yp[2:] - h1 ** 2 * yp[:-2]
                + (h1 ** 2 - h0 ** 2) * yp[1:-1]) / (h0 * h1 * (h0 + h1))
    return np.gradient(y, t, axis=0, edge_order=2)


def ribbon_integrand(T0, T1, dT0, dT1):
    """``(T0 x T1) / (1 + T0 . T1) . (T0' + T1')`` rowwise."""
    cross = np.cross(T0, T1)
    return (np.sum(cross * (dT0 + dT1), axis=1)
            / (1.0 + np.sum(T0 * T1, axis=1)))


def ribbon_area(r):
    """Signed area of the spherical ribbon between ``r.T0`` and ``r.T1``.

    Quadrature of :func:`ribbon_integrand` with the sampling's weights.
    For two latitude circles at polar angles ``theta0, theta1`` traversed
    eastward this is ``2 pi (cos theta0 - cos theta1)``.  Swapping the two
    curves negates the result.
    """
    d0, d1 = r.derivatives()
    vals = ribbon_integrand(r.T0, r.T1, d0, d1)
    return compensated_sum(vals * r.quadrature_weights())


# ---------------------------------------------------------------------------
# Smooth curves
# ---------------------------------------------------------------------------

def _aligned_maps(x0, x1):
    """Piecewise-linear parameter maps from ``[0, 1)`` onto both curves.

    Breakpoints of the two curves are matched in order, so each smooth
    piece of ``x0`` is paired with the corresponding piece of ``x1``.
    """
    b0 = sorted(set((0.0,) + x0.breakpoints))
    b1 = sorted(set((0.0,) + x1.breakpoints))
    if len(b0) != len(b1):
        raise DomainError("curves have different numbers of smooth pieces")
    k0 = np.array(b0 + [x0.period])
    k1 = np.array(b1 + [x1.period])
    if len(b0) == 1:
        knots = np.array([0.0, 1.0])
    else:
        # Common knots: average of the two relative breakpoint positions.
        knots = 0.5 * (k0 / x0.period + k1 / x1.period)
    return knots, k0, k1


def _tantrix_on_common(x, knots, k, tau):
    """Tangent and its ``tau``-derivative of ``x`` under the aligned map."""
    i = np.clip(np.searchsorted(knots, tau, side="right") - 1, 0,
                knots.size - 2)
    slope = (k[i + 1] - k[i]) / (knots[i + 1] - knots[i])
    t = k[i] + slope * (tau - knots[i])
    d = x.evaluate(t, 2)
    speed = np.linalg.norm(d[1], axis=1, keepdims=True)
    T = d[1] / speed
    dT = (d[2] - T * np.sum(T * d[2], axis=1, keepdims=True)) / speed
    return T, dT * slope[:, None], d[1] * slope[:, None]


@dataclass
class HomotopyCheck:
    """Sampled check of the straight-line homotopy between two curves."""

    passed: bool
    min_gap: float
    min_speed: float
    worst: tuple
    message: str = ""
    certified: bool = False


def check_homotopy(x0, x1, samples=512, levels=64, min_speed=1e-6):
    """Sample ``X_lambda = (1 - lambda) X0 + lambda X1`` on a grid.

    Checks that ``|X_lambda'|`` stays above ``min_speed`` (relative to the
    mean speed) and that ``T_lambda`` never approaches ``-T1``.  Only a
    sampled check; simplicity of the intermediate curves is not tested.
    """
    knots, k0, k1 = _aligned_maps(x0, x1)
    tau = np.linspace(0, 1, samples, endpoint=False)
    tau = np.unique(np.concatenate([tau, knots[:-1] + 1e-12,
                                    knots[1:] - 1e-12]))
    tau = tau[(tau >= 0) & (tau < 1)]
    _, _, v0 = _tantrix_on_common(x0, knots, k0, tau)
    T1, _, v1 = _tantrix_on_common(x1, knots, k1, tau)
    scale = 0.5 * (np.mean(np.linalg.norm(v0, axis=1))
                   + np.mean(np.linalg.norm(v1, axis=1)))
    best_gap, best_speed, worst = math.inf, math.inf, (None, None)
    for lam in np.linspace(0, 1, levels):
        v = (1 - lam) * v0 + lam * v1
        speed = np.linalg.norm(v, axis=1)
        j = int(np.argmin(speed))
        if speed[j] < best_speed:
            best_speed = float(speed[j])
        if speed[j] < min_speed * scale:
            return HomotopyCheck(False, best_gap, best_speed,
                                 (float(tau[j]), float(lam)),
                                 "homotopy curve not regular")
        gap = np.linalg.norm(v / speed[:, None] + T1, axis=1)
        j = int(np.argmin(gap))
        if gap[j] < best_gap:
            best_gap, worst = float(gap[j]), (float(tau[j]), float(lam))
        if gap[j] < HOMOTOPY_ANTIPODAL_TOL:
            return HomotopyCheck(False, best_gap, best_speed, worst,
                                 "homotopy tangent antipodal to T1")
    return HomotopyCheck(True, best_gap, best_speed, worst, "sampled-pass")


def delta_writhe_smooth(x0, x1, samples=4096, levels=64, check=True):
    """``Wr(x1) - Wr(x0)`` from the ribbon between the two tantrices.

    The curves are put on a common parameter ``tau in [0, 1)`` that matches
    their breakpoints, and the ribbon integrand is integrated with
    Gauss-Legendre rules on every smooth piece (``samples`` nodes in
    total).

    Raises
    ------
    HypothesisError
        If the sampled homotopy check fails (antipodal tangents or a
        non-regular intermediate curve).
    """
    if check:
        report = check_homotopy(x0, x1, levels=levels)
        if not report.passed:
            raise HypothesisError(f"{report.message} at (t, lambda) = "
                                  f"{report.worst}")
    knots, k0, k1 = _aligned_maps(x0, x1)
    total = []
    for a, b in zip(knots[:-1], knots[1:]):
        m = max(16, int(math.ceil(samples * (b - a))))
        # Split long pieces so each rule stays well resolved.
        nsub = max(1, m // 64)
        edges = np.linspace(a, b, nsub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            def f0(t):
                T, dT, _ = _tantrix_on_common(x0, knots, k0, t)
                return T, dT

            def f1(t):
                T, dT, _ = _tantrix_on_common(x1, knots, k1, t)
                return T, dT

            r = RibbonSampling.gauss(f0, f1, lo, hi, max(8, m // nsub))
            total.append(ribbon_area(r))
    return compensated_sum(total) / (2 * math.pi)


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------

@dataclass
class CornerDecomposition:
    """Per-corner summands of the polygonal writhe difference.

    ``region[i]`` is the signed area of the region between the smooth
    tantrix over ``[t_i, t_i+1]`` and the edge direction ``T1(t_i)``;
    ``triangle[i]`` the geodesic triangle ``T0(t_i), T1(t_i-1), T1(t_i)``.
    """

    region: np.ndarray
    triangle: np.ndarray

    @property
    def terms(self):
        return self.region + self.triangle

    def total(self):
        return compensated_sum(np.concatenate([self.region, self.triangle])) \
            / (2 * math.pi)


@dataclass
class PolygonalDelta:
    decomposition: CornerDecomposition
    total: float
    hypotheses: "HypothesisReport" = None


def _span_params(c, a, b, k):
    """``k + 1`` parameters from ``a`` to ``b`` plus interior breakpoints."""
    base = np.linspace(a, b, k + 1)
    per = c.period
    extra = []
    for bp in c.breakpoints:
        for shift in (0.0, per, -per):
            x = bp + shift
            if a < x < b:
                extra.append(x)
    if extra:
        base = np.unique(np.concatenate([base, extra]))
    return base


def delta_writhe_polygonal(x0, x1, samples_per_span=32, check=True,
                           tube_radius=None):
    """``Wr(x1) - Wr(x0)`` for a polygon ``x1`` inscribed in ``x0``.

    For each edge ``i`` (from ``x1(t_i)`` to ``x1(t_i+1)``) the region term
    is the signed area of the spherical polygon with vertices ``T1(t_i)``
    followed by ``T0`` sampled from ``t_i+1`` back to ``t_i``
    (``samples_per_span`` segments, breakpoints added); the triangle term
    is the area of ``T0(t_i), T1(t_i-1), T1(t_i)``.  The total is the sum
    of all terms over ``2 pi``.

    Raises
    ------
    HypothesisError
        With ``check``: a corner angle of ``x1`` is not above ``pi/2``, the
        angle between ``T0(t)`` and the edge direction reaches ``pi/2``, or
        the ribbon heuristic fails (against ``tube_radius``, estimated from
        ``x0`` when not given).
    """
    if x1.params is None:
        raise DomainError("polygon carries no inscription parameters")
    rep = None
    if check:
        rep = check_hypotheses(x0, x1, grid=samples_per_span,
                               tube_radius=tube_radius)
        failed = [h for h in rep.theorem_hypotheses() if not h.passed]
        if failed:
            raise HypothesisError("; ".join(f"{h.name}: {h.note}"
                                            for h in failed))
    t = x1.params
    n = x1.n
    nxt = np.concatenate([t[1:], [t[0] + x0.period]])
    edge_t = x1.edge_tangents()
    regions = np.empty(n)
    for i in range(n):
        ts = _span_params(x0, t[i], nxt[i], samples_per_span)
        arc = x0.tangent(ts[::-1])
        loop = np.vstack([edge_t[i][None, :], arc])
        regions[i] = signed_polygon_area(loop)
    t0_at = x0.tangent(t)
    tri = triangle_areas(t0_at, np.roll(edge_t, 1, axis=0), edge_t)
    dec = CornerDecomposition(regions, tri)
    return PolygonalDelta(dec, dec.total(), rep)


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------

@dataclass
class HypothesisItem:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""
    sampled: bool = False


@dataclass
class HypothesisReport:
    """Hypotheses for the polygonal writhe difference and the error bound."""

    min_corner_angle: float
    min_corner_index: int
    max_tangent_angle: float
    max_tangent_parameter: float
    items: list = field(default_factory=list)
    ribbon: object = None
    lemma_tangent: object = None
    certificate: object = None

    @property
    def passed(self):
        return all(item.passed for item in self.items)

    def theorem_hypotheses(self):
        names = ("corner angles > pi/2", "tangent angle < pi/2",
                 "ribbon embedded")
        return [i for i in self.items if i.name in names]

    def item(self, name):
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)


def tangent_angles(x0, x1, grid=16):
    """Angles between ``T0(t)`` and the direction of the edge over ``t``."""
    t = x1.params
    nxt = np.concatenate([t[1:], [t[0] + x0.period]])
    frac = np.linspace(0, 1, grid + 1)
    ts = t[:, None] + (nxt - t)[:, None] * frac[None, :]
    tan = x0.tangent(ts.ravel()).reshape(x1.n, -1, 3)
    ang = angle_between(tan, x1.edge_tangents()[:, None, :])
    return ts, ang


def check_hypotheses(x0, x1, grid=16, bounds=None, tube_radius=None):
    """Report on every hypothesis used for the polygonal writhe difference
    and the error bound of ``x1`` against ``x0``.

    Always returns a report.  ``bounds`` (:class:`DerivativeBounds`)
    defaults to sampled estimates; ``tube_radius`` to a sampled estimate
    of the curve's thickness.
    """
    if x1.params is None:
        raise DomainError("polygon carries no inscription parameters")
    corner = x1.corner_angles()
    ci = int(np.argmin(corner))
    ts, ang = tangent_angles(x0, x1, grid)
    k = np.unravel_index(int(np.argmax(ang)), ang.shape)
    amax = float(ang[k])
    items = [
        HypothesisItem("corner angles > pi/2", bool(corner[ci] > math.pi / 2),
                       float(corner[ci]), math.pi / 2,
                       f"smallest at corner {ci}"),
        HypothesisItem("tangent angle < pi/2", amax < math.pi / 2, amax,
                       math.pi / 2,
                       f"largest at t = {float(ts[k]) % x0.period:.6g}",
                       sampled=True),
    ]
    if bounds is None:
        bounds = _bounds.estimate_derivative_bounds(x0)
    if tube_radius is None:
        tube_radius = _bounds.estimate_tube_radius(x0)
    ribbon = _bounds.ribbon_embedded_heuristic(x0, x1, tube_radius, grid)
    items.append(HypothesisItem("ribbon embedded", ribbon.passed,
                                ribbon.max_deviation, tube_radius,
                                "max |C_n(t) - C(t)| vs tube radius",
                                sampled=True))
    x = float(np.max(x1.edge_lengths()))
    cert = _bounds.error_bound(x1.n, x, bounds)
    items.append(HypothesisItem("1/x > 5*B2", cert.valid, 1.0 / x,
                                5 * bounds.B2, "edge-length condition"))
    K = _bounds.arclength_bounds(bounds).K
    lemma = _bounds.lemma_tangent_angle(x0, x1, K, samples_per_edge=grid)
    items.append(HypothesisItem("tangent angle < 0.51005*K*x", lemma.passed,
                                lemma.max_value, lemma.bound,
                                lemma.regime, sampled=True))
    return HypothesisReport(float(corner[ci]), ci, amax,
                            float(ts[k]) % x0.period, items, ribbon, lemma,
                            cert)


__all__ = ["RibbonSampling", "ribbon_area", "ribbon_integrand",
           "delta_writhe_smooth", "check_homotopy", "HomotopyCheck",
           "CornerDecomposition", "PolygonalDelta", "delta_writhe_polygonal",
           "check_hypotheses", "HypothesisReport", "HypothesisItem",
           "tangent_angles"]
