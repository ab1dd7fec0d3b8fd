"""
Writhe, linking number and twist.

The writhe of a closed curve ``C`` is the Gauss double integral

    Wr(C) = 1/(4 pi) \\iint (C'(s) x C'(t)) . (C(s) - C(t)) / |C(s) - C(t)|^3 ds dt.

For polygons the integral over one pair of edges is the signed area of the
image of the pair under the Gauss map ``(p, q) -> (q - p)/|q - p|``, a
geodesic quadrilateral, so the polygonal writhe is an exact finite sum.
Smooth and piecewise-smooth curves are integrated adaptively.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _quadrature as quad
from .curves import PiecewiseCurve, PolygonalCurve, Tantrix
from .errors import ConvergenceError, DomainError, NumericalIntegrityError
from .geometry import (compensated_sum, edge_pair_solid_angles, fan_apex,
                       segment_distances, signed_polygon_area)

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the adaptive writhe quadrature.

    Attributes
    ----------
    rel_tol : float
        Target error on the writhe.  Writhe is dimensionless and of order
        one, so this is both the absolute and the relative accuracy.
    max_subdivisions : int
        Number of block splits allowed before giving up.
    diagonal_halfwidth : float
        Leave out pairs with ``|s - t| < halfwidth`` (cyclically).  Zero
        keeps the whole domain; the integrand is bounded there anyway.
    order : int
        Gauss-Legendre points per direction in each block.
    min_pieces : int
        Minimum number of parameter pieces the period is cut into.
    """

    rel_tol: float = 1e-9
    max_subdivisions: int = 200_000
    diagonal_halfwidth: float = 0.0
    order: int = 10
    min_pieces: int = 16

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("tolerance must be positive")
        if not self.diagonal_halfwidth >= 0:
            raise DomainError("diagonal half-width must be non-negative")
        if self.max_subdivisions < 1 or self.order < 2:
            raise DomainError("need max_subdivisions >= 1 and order >= 2")
        if self.min_pieces < 8:
            raise DomainError("min_pieces must be at least 8")

    def tightened(self, factor=10.0):
        return QuadratureSpec(self.rel_tol / factor, self.max_subdivisions * 4,
                              self.diagonal_halfwidth, self.order,
                              self.min_pieces)


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------

def _pair_rows(vertices, rows):
    """Solid angles of edge ``i`` against edges ``j > i + 1`` (cyclic)."""
    v = vertices
    w = np.roll(v, -1, axis=0)
    n = v.shape[0]
    out = []
    for i in rows:
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        out.append(edge_pair_solid_angles(
            np.broadcast_to(v[i], (j.size, 3)),
            np.broadcast_to(w[i], (j.size, 3)), v[j], w[j]))
    return np.concatenate(out) if out else np.zeros(0)


def writhe_polygonal(p, check=True):
    """Exact writhe of a closed polygon.

    Twice the solid angle of each unordered pair of non-adjacent edges,
    summed with correctly rounded (order-independent) summation and divided
    by ``4 pi``.  Adjacent edges are coplanar and contribute nothing.

    Parameters
    ----------
    p : PolygonalCurve
    check : bool
        Verify that ``p`` is simple first (O(n^2)).

    Raises
    ------
    DomainError
        If ``p`` self-intersects; the message names an offending edge pair.
    """
    if check:
        p.check_simple()
    # Translating to the centroid keeps the differences q - p well scaled.
    v = p.vertices - p.vertices.mean(axis=0)
    terms = _pair_rows(v, range(p.n))
    return 2.0 * compensated_sum(terms) / FOUR_PI


def _polygon_integrand(vertices):
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    n = v.shape[0]

    def evaluate(s):
        i = np.clip(np.floor(s).astype(int), 0, n - 1)
        u = (s - i)[:, None]
        return v[i] + u * e[i], e[i]

    def integrand(s, t, diag):
        x, dx = evaluate(s)
        y, dy = evaluate(t)
        r = x - y
        num = np.sum(np.cross(dx, dy) * r, axis=1)
        return num / np.linalg.norm(r, axis=1) ** 3

    return integrand


def writhe_polygonal_oracle(p, tol=1e-11, order=10):
    """Writhe of a polygon by brute-force adaptive quadrature.

    Integrates the Gauss integrand directly over every pair of non-adjacent
    edges; independent of the solid-angle formula and used to check it.
    """
    v = p.vertices - p.vertices.mean(axis=0)
    n = p.n
    blocks = [quad.rect(i, i + 1, j, j + 1) for i in range(n)
              for j in range(i + 2, n if i > 0 else n - 1)]
    res = quad.integrate(blocks, _polygon_integrand(v), tol * 2 * math.pi,
                         order=order, max_subdivisions=1_000_000)
    return res.value / (2 * math.pi)


def _check_disjoint(a, b):
    va, wa = a.vertices, np.roll(a.vertices, -1, axis=0)
    vb, wb = b.vertices, np.roll(b.vertices, -1, axis=0)
    scale = max(np.max(a.edge_lengths()), np.max(b.edge_lengths()))
    for i in range(a.n):
        d = segment_distances(np.broadcast_to(va[i], vb.shape),
                              np.broadcast_to(wa[i], vb.shape), vb, wb)
        j = int(np.argmin(d))
        if d[j] <= 1e-12 * scale:
            raise DomainError(f"curves intersect: edge {i} of the first and "
                              f"edge {j} of the second")


@dataclass(frozen=True)
class LinkingNumber:
    """Integer linking number with the raw Gauss sum it was rounded from."""

    value: int
    raw: float

    @property
    def residual(self):
        return self.raw - self.value

    def __int__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, LinkingNumber):
            return self.value == other.value
        return self.value == other

    def __hash__(self):
        return hash(self.value)


def linking_number(a, b, check=True, guard=0.1):
    """Gauss linking number of two disjoint closed polygons.

    Raises
    ------
    DomainError
        If the polygons touch.
    NumericalIntegrityError
        If the raw sum is farther than ``guard`` from an integer.
    """
    if check:
        _check_disjoint(a, b)
    center = np.vstack([a.vertices, b.vertices]).mean(axis=0)
    va = a.vertices - center
    vb = b.vertices - center
    wa, wb = np.roll(va, -1, axis=0), np.roll(vb, -1, axis=0)
    terms = [edge_pair_solid_angles(np.broadcast_to(va[i], vb.shape),
                                    np.broadcast_to(wa[i], vb.shape), vb, wb)
             for i in range(a.n)]
    raw = compensated_sum(np.concatenate(terms)) / FOUR_PI
    value = int(round(raw))
    if abs(raw - value) > guard:
        raise NumericalIntegrityError(
            f"linking sum {raw:.6f} is not close to an integer")
    return LinkingNumber(value, raw)


# ---------------------------------------------------------------------------
# Smooth and piecewise-smooth curves
# ---------------------------------------------------------------------------

def _pieces(c, min_pieces):
    return c.smooth_intervals(min_pieces=min_pieces)


def _coplanar_pairs(c, pieces, samples=7, rel_tol=1e-12):
    """Boolean matrix: pieces ``i`` and ``j`` lie in one common plane."""
    pts = []
    for a, b in pieces:
        # Interior samples only; endpoints belong to neighbouring pieces too.
        ts = a + (b - a) * (np.arange(samples) + 0.5) / samples
        pts.append(c.position(ts))
    pts = np.array(pts)
    m = len(pieces)
    scale = float(np.max(np.ptp(pts.reshape(-1, 3), axis=0)))
    ii, jj = np.triu_indices(m)
    both = np.concatenate([pts[ii], pts[jj]], axis=1)
    both = both - both.mean(axis=1, keepdims=True)
    sv = np.linalg.svd(both, compute_uv=False)
    flat = sv[:, -1] <= rel_tol * max(scale, 1e-300) * math.sqrt(2 * samples)
    out = np.zeros((m, m), dtype=bool)
    out[ii, jj] = flat
    out[jj, ii] = flat
    return out


def _build_blocks(c, pieces, skip):
    """Blocks covering ``{s < t}`` (mod period) for the given pieces."""
    m = len(pieces)
    period = c.period
    blocks = []
    for i in range(m):
        a_i, b_i = pieces[i]
        for j in range(i, m):
            if skip[i, j]:
                continue
            a_j, b_j = pieces[j]
            if i == j:
                blocks.append(quad.triangle(a_i, b_i, tag=(i, j)))
            elif j == i + 1:
                blocks.extend(quad.corner(b_i, a_j, b_i - a_i, b_j - a_j,
                                          -1.0, 1.0, tag=(i, j)))
            elif i == 0 and j == m - 1:
                # Wrap-around neighbours meet at s = 0, t = period.
                blocks.extend(quad.corner(a_i, period, b_i - a_i,
                                          b_j - a_j, 1.0, -1.0, tag=(i, j)))
            else:
                blocks.append(quad.rect(a_i, b_i, a_j, b_j, tag=(i, j)))
    return blocks


def _smooth_integrand(c):
    """Integrand of the writhe double integral with error estimates.

    Returns ``integrand(s, t, diag) -> (values, errors)``.  Near the
    diagonal the direct formula cancels badly: its error grows like
    ``eps |C'|^2 R / (rho^2 l)`` (chord ``rho``, extent ``R``, curvature
    length scale ``l``), while the Taylor expansion about ``s`` is off by
    about ``|C'|^2 rho^3 / l^5``.  Each point uses whichever is smaller,
    the Taylor form only when no breakpoint separates ``s`` and ``t``.
    """
    period = c.period
    sample_t = np.linspace(0, period, 1024, endpoint=False)
    d = c.evaluate(sample_t, 2)
    speed = np.linalg.norm(d[1], axis=1)
    kappa = np.linalg.norm(np.cross(d[1], d[2]), axis=1) / speed ** 3
    ell = min(1.0 / max(float(np.max(kappa)), 1e-300),
              float(np.mean(speed)) * period / (2 * math.pi))
    extent = float(np.max(np.linalg.norm(d[0], axis=1)))
    eps = np.finfo(float).eps
    cut = ell * (4 * eps * extent / ell) ** 0.2
    bps = np.asarray(c.breakpoints, dtype=float)

    def integrand(s, t, diag):
        ds = c.evaluate(s, 1)
        dt = c.evaluate(t, 1)
        r = ds[0] - dt[0]
        rho = np.linalg.norm(r, axis=1)
        num = np.sum(np.cross(ds[1], dt[1]) * r, axis=1)
        sa = np.linalg.norm(ds[1], axis=1)
        a2 = sa * np.linalg.norm(dt[1], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / rho ** 3
            err = 4 * eps * a2 * extent / (rho ** 2 * ell)
        # Signed cyclic gap from s to t.
        h = np.mod(t - s + 0.5 * period, period) - 0.5 * period
        near = np.abs(h) * sa < cut
        if bps.size and np.any(near):
            lo = np.where(h < 0, s + h, s)[near]
            width = np.abs(h[near])
            gap = np.mod(bps[None, :] - lo[:, None], period)
            near[near] = ~np.any(gap <= width[:, None], axis=1)
        if np.any(near):
            out[near] = _taylor_integrand(c, s[near], h[near])
            rn = np.abs(h[near]) * sa[near]
            err[near] = a2[near] * rn ** 3 / ell ** 5
        return out, err

    return integrand


def _strip_integral(c, integrand, halfwidth, pieces, order=20):
    """Integral of the integrand over pairs at cyclic distance below
    ``halfwidth``: ``int_0^P ds int_0^w f(s, s + h) dh``."""
    x, w = quad.gauss_legendre_01(order)
    xh, wh = quad.gauss_legendre_01(10)
    parts = []
    for a, b in pieces:
        s = np.repeat(a + (b - a) * x, xh.size)
        h = np.tile(halfwidth * xh, x.size)
        vals, _ = integrand(s, s + h, np.ones(s.size, dtype=bool))
        wt = np.repeat((b - a) * w, xh.size) * np.tile(halfwidth * wh, x.size)
        parts.append(wt * vals)
    return compensated_sum(np.concatenate(parts))


def _taylor_integrand(c, s, h):
    """Integrand at ``(s, s + h)`` from the Taylor expansion about ``s``.

    With ``a, b, c, d`` the first four derivatives at ``s``::

        num = h^4/12 [a, b, c] + h^5/24 [a, b, d]
        C(s + h) - C(s) = h a + h^2/2 b + h^3/6 c + h^4/24 d

    and the integrand is ``num / |C(s + h) - C(s)|^3``.
    """
    d = c.evaluate(s, 4)
    a, b, cc, dd = d[1], d[2], d[3], d[4]
    hh = h[:, None]
    ab = np.cross(a, b)
    num = (h ** 4 / 12 * np.sum(ab * cc, axis=1)
           + h ** 5 / 24 * np.sum(ab * dd, axis=1))
    chord = hh * a + hh ** 2 / 2 * b + hh ** 3 / 6 * cc + hh ** 4 / 24 * dd
    return num / np.linalg.norm(chord, axis=1) ** 3


@dataclass
class WritheQuadrature:
    """Writhe with diagnostics from the adaptive quadrature."""

    value: float
    error: float
    evaluations: int
    subdivisions: int
    blocks: int
    skipped_pairs: int


def _writhe_blocks(c, q, skip_planar):
    pieces = _pieces(c, q.min_pieces)
    m = len(pieces)
    if skip_planar:
        skip = _coplanar_pairs(c, pieces)
    else:
        skip = np.zeros((m, m), dtype=bool)
    blocks = _build_blocks(c, pieces, skip)
    integrand = _smooth_integrand(c)
    tol = q.rel_tol * 2 * math.pi
    try:
        res = quad.integrate(blocks, integrand, tol, order=q.order,
                             max_subdivisions=q.max_subdivisions)
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), exc.estimate / (2 * math.pi),
                               exc.error / (2 * math.pi)) from None
    value = res.value
    if q.diagonal_halfwidth > 0:
        # Excluding the strip inside the blocks would put a jump in every
        # diagonal block; integrate it separately and subtract instead.
        value -= _strip_integral(c, integrand, q.diagonal_halfwidth,
                                 c.smooth_intervals(min_pieces=64))
    nskip = int(np.count_nonzero(np.triu(skip)))
    return WritheQuadrature(value / (2 * math.pi),
                            res.error / (2 * math.pi), res.evaluations,
                            res.subdivisions, len(blocks), nskip)


def writhe_smooth_quadrature(c, q=None, details=False):
    """Writhe of a smooth closed curve by adaptive 2-D quadrature.

    The symmetric integrand is integrated over ``s < t`` only (and doubled).
    The period is cut into at least ``q.min_pieces`` pieces, always at the
    curve's breakpoints.  Same-piece blocks are triangles along the
    diagonal, where the integrand vanishes; blocks of neighbouring pieces
    use a Duffy split at the corner they share with the diagonal.  Block
    pairs whose pieces are coplanar are skipped, since the integrand
    vanishes identically there.

    Parameters
    ----------
    c : ParametricCurve
    q : QuadratureSpec, optional
    details : bool
        Return a :class:`WritheQuadrature` instead of the value.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``q.max_subdivisions`` splits;
        carries the best estimate and its error indicator.
    """
    q = QuadratureSpec() if q is None else q
    res = _writhe_blocks(c, q, skip_planar=True)
    return res if details else res.value


def writhe_piecewise_quadrature(c, q=None, details=False):
    """Writhe of a piecewise-smooth curve (e.g. a rounded polygon).

    Blocks follow the segment decomposition of ``c`` so that no block
    straddles a junction; blocks whose two segments are coplanar (a line and
    the corner arc in its plane, for instance) contribute zero and are not
    integrated.
    """
    if not isinstance(c, PiecewiseCurve):
        raise DomainError("writhe_piecewise_quadrature needs a PiecewiseCurve")
    q = QuadratureSpec() if q is None else q
    res = _writhe_blocks(c, q, skip_planar=True)
    return res if details else res.value


# ---------------------------------------------------------------------------
# Tantrix area
# ---------------------------------------------------------------------------

def tantrix_area(t, arc_samples=8):
    """Signed spherical area enclosed by a tantrix, defined mod ``4 pi``."""
    loop = t.loop(arc_samples) if isinstance(t, Tantrix) else np.asarray(t)
    apex = fan_apex(loop)
    return signed_polygon_area(loop, apex=apex)


def writhe_mod2_from_tantrix(t, arc_samples=8):
    """``Wr mod 2`` from the area ``A`` enclosed by the tantrix.

    Uses ``1 + Wr = A / (2 pi) mod 2`` with ``A`` the signed, winding
    weighted area of the (densified) tantrix loop, oriented by the
    right-hand rule as in :func:`signed_polygon_area`.
    """
    area = tantrix_area(t, arc_samples)
    return float(np.mod(area / (2 * math.pi) - 1.0, 2.0))


# ---------------------------------------------------------------------------
# Framed curves and twist
# ---------------------------------------------------------------------------

class FramedCurve:
    """Curve with a unit normal field ``V(t)`` perpendicular to ``T(t)``.

    Parameters
    ----------
    base : ParametricCurve
    frame : callable
        ``frame(t) -> (V, V')`` as two ``(m, 3)`` arrays.
    """

    def __init__(self, base, frame, check_samples=512, tol=1e-10):
        self.base = base
        self._frame = frame
        t = np.linspace(0, base.period, check_samples, endpoint=False)
        t = np.concatenate([t, np.asarray(base.breakpoints)])
        v, _ = self.frame(t)
        tan = base.tangent(t)
        if np.max(np.abs(np.linalg.norm(v, axis=1) - 1)) > tol:
            raise DomainError("frame vectors are not unit length")
        if np.max(np.abs(np.sum(v * tan, axis=1))) > tol:
            raise DomainError("frame is not perpendicular to the tangent")
        v0, _ = frame(np.array([0.0]))
        v1, _ = frame(np.array([np.nextafter(base.period, 0)]))
        if np.linalg.norm(v0 - v1) > 1e3 * tol:
            raise DomainError("frame is not closed over the period")

    def frame(self, t):
        t = np.mod(np.atleast_1d(np.asarray(t, dtype=float)),
                   self.base.period)
        return self._frame(t)

    def normal(self, t):
        return self.frame(t)[0]

    def pushoff(self, eps):
        """Position of ``C + eps V`` as a parametric-curve evaluator."""
        base = self.base

        def position(t):
            return base.position(t) + eps * self.frame(t)[0]

        return position

    @classmethod
    def from_reference(cls, base, ref=(1.0, 0.0, 0.0), turns=0):
        """Normalized projection of a fixed vector onto the normal planes.

        ``V = unit(ref - (ref . T) T)``, rotated about ``T`` by
        ``2 pi turns t / period`` when ``turns`` is nonzero.  Fails where
        ``T`` is parallel to ``ref``.
        """
        r = np.asarray(ref, dtype=float)
        period = base.period
        rate = 2 * math.pi * turns / period

        def frame(t):
            tan = base.tangent(t)
            dtan = base.tangent_derivative(t)
            rt = tan @ r
            w = r - rt[:, None] * tan
            wn = np.linalg.norm(w, axis=1, keepdims=True)
            if np.any(wn < 1e-8):
                raise DomainError("tangent parallel to the reference vector")
            v = w / wn
            dw = -(dtan @ r)[:, None] * tan - rt[:, None] * dtan
            dv = (dw - np.sum(v * dw, axis=1, keepdims=True) * v) / wn
            if turns == 0:
                return v, dv
            th = rate * t
            cs, sn = np.cos(th)[:, None], np.sin(th)[:, None]
            tv = np.cross(tan, v)
            dtv = np.cross(dtan, v) + np.cross(tan, dv)
            vr = cs * v + sn * tv
            dvr = cs * dv + sn * dtv + rate * (-sn * v + cs * tv)
            return vr, dvr

        return cls(base, frame)


def _twist_sum(f, pieces, order=16):
    # Composite Gauss-Legendre, ``order`` nodes on each of ``pieces`` pieces.
    c = f.base
    x, w = quad.gauss_legendre_01(order)
    parts = []
    for a, b in c.smooth_intervals(min_pieces=pieces):
        t = a + (b - a) * x
        v, dv = f.frame(t)
        tan = c.tangent(t)
        parts.append((b - a) * w * np.sum(dv * np.cross(tan, v), axis=1))
    return compensated_sum(np.concatenate(parts)) / (2 * math.pi)


def twist(f, samples=2048, tol=1e-9):
    """Total twist ``(1/2 pi) \\oint V' . (T x V) dt`` of a framed curve.

    Gauss-Legendre on each smooth piece with about ``samples`` nodes in
    total, checked against a run with twice as many nodes (whose value is
    returned).

    Raises
    ------
    ConvergenceError
        If the two runs differ by more than ``tol``.
    """
    pieces = max(1, math.ceil(samples / 16))
    coarse = _twist_sum(f, pieces)
    fine = _twist_sum(f, 2 * pieces)
    if abs(fine - coarse) > tol:
        raise ConvergenceError(
            f"twist quadrature unresolved (Richardson difference "
            f"{abs(fine - coarse):.3g}); increase samples", fine,
            abs(fine - coarse))
    return fine


def pushoff_linking(f, eps, n):
    """``Lk(C, C + eps V)`` from inscribed polygons with ``n`` vertices.

    Both curves are sampled at the same ``n`` parameters (breakpoints
    included), which pairs the two polygons vertex by vertex.
    """
    c = f.base
    t = np.linspace(0, c.period, n, endpoint=False)
    t = np.unique(np.concatenate([t, np.asarray(c.breakpoints)]))
    a = PolygonalCurve(c.position(t))
    b = PolygonalCurve(c.position(t) + eps * f.frame(t)[0])
    return linking_number(a, b)


__all__ = ["QuadratureSpec", "writhe_polygonal", "writhe_polygonal_oracle",
           "linking_number", "LinkingNumber", "writhe_smooth_quadrature",
           "writhe_piecewise_quadrature", "WritheQuadrature", "tantrix_area",
           "writhe_mod2_from_tantrix", "FramedCurve", "twist",
           "pushoff_linking"]
