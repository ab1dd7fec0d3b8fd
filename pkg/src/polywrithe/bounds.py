"""
A-priori error bounds for inscribed polygons.

Let ``C`` be parametrized with ``|C'(t)| >= 1`` and let ``B1, ..., B4``
bound ``|C'|, ..., |C''''|``.  For an inscribed polygon with ``n`` edges of
length at most ``x`` and ``1/x > 5 B2``,

    |Wr(C) - Wr(C_n)| < alpha n x^3 + n O(x^4),  alpha = B2 (5 B2^2 + B3).

The ``n O(x^4)`` term has no known constant; certificates carry it as an
unquantified tail next to the leading-order number.

Arc-length derivative bounds
----------------------------
Write ``sigma = |C'|``, ``T = C'/sigma`` and ``D = sigma^-1 d/dt``.  Then
``|sigma'| <= B2``, ``|T'| <= B2``, ``|sigma''| <= B2^2 + B3`` and
``|sigma'''| <= 3 B2^3 + 4 B2 B3 + B4``.  Expanding ``D^k C`` and using
``sigma >= 1`` term by term gives

    |C_ss|   <= K   = 2 B2
    |C_sss|  <= T   = 2 B3 + 10 B2^2   (the expansion gives 2 B3 + 7 B2^2)
    |C_ssss| <= B4' = 2 B4 + 24 B2 B3 + 47 B2^3

where the fourth-order expansion is

    sigma^5 C_ssss = C'''' - 6 C''' sigma' - 4 C'' sigma'' + 15 C'' sigma'^2
                     - C' sigma''' + 10 C' sigma' sigma'' - 15 C' sigma'^3

up to positive powers of ``1/sigma`` on the individual terms.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import angle_between

#: Constant of the tangent-angle lemma: angle(T(s), T_n(s)) < LEMMA2 * K * x.
LEMMA2_CONSTANT = 0.51005


@dataclass(frozen=True)
class DerivativeBounds:
    """Bounds on ``|C'|, ..., |C''''|`` for a parametrization with
    ``|C'| >= 1``.  ``provenance`` is ``"analytic"`` or ``"estimated"``."""

    B1: float
    B2: float
    B3: float
    B4: float
    provenance: str = "analytic"

    def __post_init__(self):
        vals = (self.B1, self.B2, self.B3, self.B4)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise DomainError("derivative bounds must be finite and positive")
        if self.B1 < 1:
            raise DomainError("B1 must be at least 1 since |C'| >= 1")
        if self.provenance not in ("analytic", "estimated"):
            raise DomainError("provenance must be 'analytic' or 'estimated'")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ArclengthBounds:
    """Bounds on the second to fourth arc-length derivatives."""

    K: float
    T: float
    B4p: float


def arclength_bounds(b):
    """``K = 2 B2``, ``T = 2 B3 + 10 B2^2``, ``B4' = 2 B4 + 24 B2 B3 + 47 B2^3``.

    See the module docstring for the derivation of ``B4'``.
    """
    return ArclengthBounds(K=2 * b.B2, T=2 * b.B3 + 10 * b.B2 ** 2,
                           B4p=2 * b.B4 + 24 * b.B2 * b.B3 + 47 * b.B2 ** 3)


def alpha_constant(b):
    return b.B2 * (5 * b.B2 ** 2 + b.B3)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class HypothesisResult:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass
class Region:
    """Part of a polygon for a regional bound.

    ``planar`` regions (see :func:`detect_planar_runs`) contribute nothing
    and need no derivative bounds.
    """

    n: int
    x: float
    bounds: DerivativeBounds = None
    planar: bool = False
    label: str = ""


@dataclass
class RegionBound:
    label: str
    n: int
    x: float
    B2: float
    B3: float
    alpha: float
    bound: float
    planar: bool
    hypothesis: HypothesisResult


@dataclass
class ErrorCertificate:
    """Leading-order error bound ``alpha n x^3`` with its hypotheses.

    ``valid`` is False when any hypothesis failed; the numbers are still
    filled in so users can see how far from admissible the input is.
    """

    n: int
    x: float
    alpha: float
    bound: float
    valid: bool
    hypotheses: list
    bounds: DerivativeBounds = None
    arclength: ArclengthBounds = None
    regions: list = field(default_factory=list)
    leading_order: bool = True
    tail: str = "n*O(x^4), constant unknown (not included in bound)"

    def to_dict(self):
        return {
            "n": self.n, "x": self.x, "alpha": self.alpha,
            "bound": self.bound, "valid": self.valid,
            "hypotheses": [asdict(h) for h in self.hypotheses],
            "bounds": None if self.bounds is None else asdict(self.bounds),
            "arclength": (None if self.arclength is None
                          else asdict(self.arclength)),
            "regions": [asdict(r) for r in self.regions],
            "leading_order": self.leading_order,
            "tail": self.tail,
        }

    @classmethod
    def from_dict(cls, d):
        regions = []
        for r in d.get("regions", []):
            r = dict(r)
            r["hypothesis"] = HypothesisResult(**r["hypothesis"])
            regions.append(RegionBound(**r))
        return cls(
            n=d["n"], x=d["x"], alpha=d["alpha"], bound=d["bound"],
            valid=d["valid"],
            hypotheses=[HypothesisResult(**h) for h in d["hypotheses"]],
            bounds=(None if d.get("bounds") is None
                    else DerivativeBounds(**d["bounds"])),
            arclength=(None if d.get("arclength") is None
                       else ArclengthBounds(**d["arclength"])),
            regions=regions, leading_order=d.get("leading_order", True),
            tail=d.get("tail", ""))


def _edge_hypothesis(x, b2):
    value = math.inf if x == 0 else 1.0 / x
    return HypothesisResult("1/x > 5*B2", value, 5 * b2, value > 5 * b2)


def error_bound(n, x, b):
    """Certificate ``alpha n x^3`` with ``alpha = B2 (5 B2^2 + B3)``.

    Never raises on a failed hypothesis: the certificate comes back with
    ``valid = False`` instead.
    """
    if n < 3 or not x > 0:
        raise DomainError("need n >= 3 and x > 0")
    alpha = alpha_constant(b)
    hyp = _edge_hypothesis(x, b.B2)
    return ErrorCertificate(n=int(n), x=float(x), alpha=alpha,
                            bound=alpha * n * x ** 3, valid=hyp.passed,
                            hypotheses=[hyp], bounds=b,
                            arclength=arclength_bounds(b))


def regional_error_bound(regions):
    """Sum of per-region bounds ``alpha_i n_i x_i^3``.

    Planar regions contribute zero.  The certificate is valid only if every
    non-planar region satisfies ``1/x_i > 5 B2_i``.
    """
    parts = []
    hyps = []
    for k, reg in enumerate(regions):
        label = reg.label or f"region {k}"
        if reg.planar:
            hyp = HypothesisResult(f"{label}: planar", 0.0, 0.0, True,
                                   "planar region contributes nothing")
            parts.append(RegionBound(label, reg.n, reg.x, 0.0, 0.0, 0.0, 0.0,
                                     True, hyp))
        else:
            if reg.bounds is None:
                raise DomainError(f"{label} needs derivative bounds")
            b = reg.bounds
            alpha = alpha_constant(b)
            hyp = _edge_hypothesis(reg.x, b.B2)
            hyp.name = f"{label}: {hyp.name}"
            parts.append(RegionBound(label, reg.n, reg.x, b.B2, b.B3, alpha,
                                     alpha * reg.n * reg.x ** 3, False, hyp))
        hyps.append(hyp)
    total = math.fsum(p.bound for p in parts)
    n = sum(r.n for r in regions)
    x = max(r.x for r in regions)
    curved = [p for p in parts if not p.planar]
    alpha = max((p.alpha for p in curved), default=0.0)
    return ErrorCertificate(n=n, x=x, alpha=alpha, bound=total,
                            valid=all(h.passed for h in hyps),
                            hypotheses=hyps, regions=parts)


# ---------------------------------------------------------------------------
# Planar runs
# ---------------------------------------------------------------------------

@dataclass
class PlanarRun:
    """Vertices ``start, start+1, ..., stop`` (cyclic) lie in one plane.

    ``interior_edges`` are the edges between two edges of the run; they
    contribute nothing to the error bound.
    """

    start: int
    stop: int
    length: int
    interior_edges: list


def _coplanar(points, tol):
    centered = points - points.mean(axis=0)
    diameter = 2 * float(np.max(np.linalg.norm(centered, axis=1)))
    if diameter == 0:
        return True
    if centered.shape[0] < 3:
        return True
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    resid = np.abs(centered @ vt[-1])
    return float(np.max(resid)) <= tol * diameter


def detect_planar_runs(p, tolerance=1e-9, min_vertices=4):
    """Maximal runs of consecutive coplanar vertices.

    A run is coplanar when every vertex lies within ``tolerance`` times
    the run's diameter of the least-squares plane.  Runs are grown greedily
    from each vertex; a run is reported when it is not contained in the
    run grown from the previous vertex.  Runs shorter than
    ``min_vertices`` (three points are always coplanar) are dropped.
    """
    v = p.vertices
    n = p.n
    if _coplanar(v, tolerance):
        return [PlanarRun(0, n - 1, n, list(range(n)))]
    idx = lambda i, k: (i + np.arange(k)) % n  # noqa: E731
    # ext[i]: number of vertices in the longest coplanar run starting at i.
    ext = np.zeros(n, dtype=int)
    length = 3
    for i in range(n):
        length = max(3, length - 1) if i else 3
        while length < n and _coplanar(v[idx(i, length + 1)], tolerance):
            length += 1
        ext[i] = length
    runs = []
    for i in range(n):
        prev = (i - 1) % n
        if ext[i] < min_vertices:
            continue
        # Contained in the run from the previous vertex?
        if ext[prev] >= ext[i] + 1:
            continue
        stop = (i + ext[i] - 1) % n
        interior = [int(k) for k in (i + 1 + np.arange(ext[i] - 3)) % n]
        runs.append(PlanarRun(i, int(stop), int(ext[i]), interior))
    return runs


def planar_regions(p, bounds, tolerance=1e-9):
    """Split ``p`` into planar and curved regions for a regional bound.

    Interior edges of planar runs form planar regions; every other edge
    goes to one curved region with the given derivative bounds.
    """
    lengths = p.edge_lengths()
    flat = np.zeros(p.n, dtype=bool)
    for run in detect_planar_runs(p, tolerance):
        flat[run.interior_edges] = True
    regions = []
    if np.any(flat):
        regions.append(Region(int(np.sum(flat)), float(np.max(lengths[flat])),
                              planar=True, label="planar"))
    if np.any(~flat):
        regions.append(Region(int(np.sum(~flat)),
                              float(np.max(lengths[~flat])), bounds,
                              label="curved"))
    return regions


# ---------------------------------------------------------------------------
# Lemma checks
# ---------------------------------------------------------------------------

@dataclass
class LemmaReport:
    name: str
    max_value: float
    bound: float
    margin: float
    passed: bool
    regime_ok: bool
    regime: str
    details: dict = field(default_factory=dict)


def _regime(span, K):
    ok = (1.0 / span) > 2.5 * K if span > 0 else True
    return ok, f"1/x = {1.0 / span:.6g} vs (5/2)K = {2.5 * K:.6g}"


def chord_deficit_bound(s, K):
    s = np.abs(s)
    return K ** 2 / 24 * s ** 3 + s ** 5 / 120


def lemma_chord_bounds(c, span, K, polygon=None, base_points=512,
                       span_samples=16, strict=False):
    """Compare arc-length minus chord against ``K^2 s^3/24 + s^5/120``.

    Arc lengths ``s`` up to ``span`` are sampled from ``base_points``
    starting points on ``c``; with ``polygon`` (inscribed, parameters
    recorded) every edge is checked as well, and the largest edge arc
    length relative to the longest chord is reported.

    ``c`` is assumed parametrized by arc length.  The lemma needs
    ``1/span > (5/2) K``; outside that regime the report says so, and
    ``strict=True`` turns it into a :class:`DomainError`.
    """
    ok, text = _regime(span, K)
    if strict and not ok:
        raise DomainError("outside the regime of the chord lemma: " + text)
    # Sampled along the curve.
    t0 = np.linspace(0, c.period, base_points, endpoint=False)
    s = span * np.arange(1, span_samples + 1) / span_samples
    start = c.position(t0)
    deficits, bounds = [], []
    for sk in s:
        chord = np.linalg.norm(c.position(t0 + sk) - start, axis=1)
        deficits.append(np.abs(sk - chord))
        bounds.append(np.full(t0.size, chord_deficit_bound(sk, K)))
    details = {}
    if polygon is not None:
        if polygon.params is None:
            raise DomainError("polygon carries no inscription parameters")
        t = polygon.params
        arcs = np.diff(np.concatenate([t, [t[0] + c.period]]))
        chords = polygon.edge_lengths()
        deficits.append(np.abs(arcs - chords))
        bounds.append(chord_deficit_bound(arcs, K))
        details["max_arc_over_x"] = float(np.max(arcs) / np.max(chords))
    dev = np.concatenate(deficits)
    bnd = np.concatenate(bounds)
    slack = bnd - dev
    i = int(np.argmin(slack))
    details["worst_ratio"] = float(np.max(dev / np.maximum(bnd, 1e-300)))
    return LemmaReport("chord deficit", float(np.max(dev)), float(bnd[i]),
                       float(slack[i]), bool(slack[i] > 0), ok, text, details)


def lemma_tangent_angle(c, p, K, samples_per_edge=16, strict=False):
    """Largest angle between ``T(s)`` and the tangent of the edge over it.

    Compared with ``0.51005 K x`` where ``x`` is the longest edge.
    """
    if p.params is None:
        raise DomainError("polygon carries no inscription parameters")
    x = float(np.max(p.edge_lengths()))
    ok, text = _regime(x, K)
    if strict and not ok:
        raise DomainError("outside the regime of the tangent lemma: " + text)
    t = p.params
    nxt = np.concatenate([t[1:], [t[0] + c.period]])
    frac = np.linspace(0, 1, samples_per_edge + 1)
    ts = t[:, None] + (nxt - t)[:, None] * frac[None, :]
    edge_t = p.edge_tangents()
    tan = c.tangent(ts.ravel()).reshape(p.n, -1, 3)
    ang = angle_between(tan, edge_t[:, None, :])
    amax = float(np.max(ang))
    bound = LEMMA2_CONSTANT * K * x
    per_edge = np.max(ang, axis=1)
    worst = int(np.argmax(per_edge))
    return LemmaReport("tangent angle", amax, bound, bound - amax,
                       amax < bound, ok, text,
                       {"worst_edge": worst, "x": x,
                        "edge_angles": per_edge.tolist()})


# ---------------------------------------------------------------------------
# Ribbon embedding and tube radius
# ---------------------------------------------------------------------------

@dataclass
class RibbonVerdict:
    passed: bool
    max_deviation: float
    tube_radius: float
    worst_parameter: float


def polygon_point(c, p, t):
    """Point of the polygon ``p`` paired with parameter ``t`` of ``c``.

    Parameters between two inscription parameters map linearly onto the
    edge joining the corresponding vertices.
    """
    tp = p.params
    period = c.period
    t = np.mod(np.atleast_1d(np.asarray(t, dtype=float)) - tp[0], period)
    rel = tp - tp[0]
    i = np.clip(np.searchsorted(rel, t, side="right") - 1, 0, p.n - 1)
    nxt = np.where(i + 1 < p.n, rel[np.minimum(i + 1, p.n - 1)], period)
    frac = (t - rel[i]) / (nxt - rel[i])
    v = p.vertices
    w = np.roll(v, -1, axis=0)
    return v[i] + frac[:, None] * (w[i] - v[i])


def ribbon_embedded_heuristic(c, p, tube_radius, grid=8):
    """Pass when ``|C_n(t) - C(t)| < tube_radius`` at every sampled ``t``.

    ``grid`` samples are taken per edge.  This only approximates the
    embeddedness of the ribbon joining ``C_n(t)`` to ``C(t)``: a polygon
    inside an embedded tube around ``C`` cannot make the ribbon cross
    itself.
    """
    if p.params is None:
        raise DomainError("polygon carries no inscription parameters")
    t = p.params
    nxt = np.concatenate([t[1:], [t[0] + c.period]])
    frac = (np.arange(grid) + 0.5) / grid
    ts = (t[:, None] + (nxt - t)[:, None] * frac[None, :]).ravel()
    dev = np.linalg.norm(polygon_point(c, p, ts) - c.position(ts), axis=1)
    k = int(np.argmax(dev))
    return RibbonVerdict(bool(dev[k] < tube_radius), float(dev[k]),
                         float(tube_radius), float(ts[k] % c.period))


def estimate_tube_radius(c, samples=2048):
    """Sampled estimate of the radius of an embedded tube around ``c``.

    The smaller of the minimum radius of curvature and half the least
    distance between points more than ``pi`` radii of curvature apart
    along the curve.  A heuristic, not a certified thickness.
    """
    t = np.linspace(0, c.period, samples, endpoint=False)
    d = c.evaluate(t, 2)
    speed = np.linalg.norm(d[1], axis=1)
    kappa = np.linalg.norm(np.cross(d[1], d[2]), axis=1) / speed ** 3
    rmin = 1.0 / max(float(np.max(kappa)), 1e-300)
    # Cumulative arc length for the "non-local" pair selection.
    seg = np.linalg.norm(np.roll(d[0], -1, axis=0) - d[0], axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    total = float(np.sum(seg))
    gap = math.pi * rmin
    best = math.inf
    for lo in range(0, samples, 256):
        hi = min(samples, lo + 256)
        dist = np.linalg.norm(d[0][lo:hi, None, :] - d[0][None, :, :],
                              axis=2)
        sep = np.abs(s[lo:hi, None] - s[None, :])
        sep = np.minimum(sep, total - sep)
        far = sep > gap
        if np.any(far):
            best = min(best, float(np.min(dist[far])))
    return min(rmin, 0.5 * best)


# ---------------------------------------------------------------------------
# Derivative bounds
# ---------------------------------------------------------------------------

def estimate_derivative_bounds(c, grid=4096, interval=None, safety=1.05):
    """Sampled derivative bounds, inflated by ``safety``.

    ``B2``, ``B3`` and ``B4`` are the grid maxima of ``|C''|, |C'''|,
    |C''''|`` times ``safety``.  ``B1`` is the sampled maximum speed (not
    inflated, and at least 1; it does not enter the bound).  ``interval``
    restricts sampling to a parameter range, e.g. one smooth region.

    Raises
    ------
    DomainError
        If a derivative sample is not finite, or ``|C'| < 1`` somewhere.
    """
    if interval is None:
        a, b = 0.0, c.period
        t = np.linspace(a, b, grid, endpoint=False)
    else:
        a, b = interval
        # Stay off the end points, where one-sided derivatives may jump.
        t = np.linspace(a, b, grid + 2)[1:-1]
    d = c.evaluate(t, 4)
    if not np.all(np.isfinite(d)):
        raise DomainError("non-finite derivative sample")
    norms = np.linalg.norm(d[1:], axis=2).max(axis=1)
    if float(np.min(np.linalg.norm(d[1], axis=1))) < 1 - 1e-12:
        raise DomainError("|C'| < 1 somewhere; rescale the parameter")
    floor = 1e-300
    return DerivativeBounds(
        B1=max(1.0, float(norms[0])),
        B2=max(floor, safety * float(norms[1])),
        B3=max(floor, safety * float(norms[2])),
        B4=max(floor, safety * float(norms[3])),
        provenance="estimated")


__all__ = ["DerivativeBounds", "ArclengthBounds", "arclength_bounds",
           "ErrorCertificate", "HypothesisResult", "Region", "RegionBound",
           "error_bound", "regional_error_bound", "PlanarRun",
           "detect_planar_runs", "planar_regions", "LemmaReport",
           "lemma_chord_bounds", "lemma_tangent_angle", "RibbonVerdict",
           "ribbon_embedded_heuristic", "estimate_tube_radius",
           "estimate_derivative_bounds", "polygon_point", "LEMMA2_CONSTANT",
           "chord_deficit_bound", "alpha_constant"]
