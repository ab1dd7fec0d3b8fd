"""
Euclidean and spherical primitives
==================================

Points of R^3 and of the unit sphere are plain ``numpy`` arrays of shape
``(3,)`` (or ``(m, 3)`` for batches).  Unit vectors play two roles here:
tangent directions of curves and points of S^2.

Signed spherical areas follow the right-hand convention: the geodesic
triangle ``abc`` is positive when ``a . (b x c) > 0``, i.e. when the
vertices run counterclockwise seen from outside the sphere.
"""

import math

import numpy as np

from .errors import DomainError

#: Two unit vectors closer than this to antipodal (``|a + b|``, which is
#: the angular distance from antipodality to first order) are rejected.
ANTIPODAL_TOL = 1e-9


def unit(v):
    """Normalize a vector (or each row of an ``(m, 3)`` array)."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise DomainError("cannot normalize a zero or non-finite vector")
    return v / norm


def compensated_sum(values):
    """Correctly rounded sum of an iterable of floats.

    The result does not depend on the order of ``values``, so reductions of
    independently computed pieces are deterministic.
    """
    return math.fsum(np.asarray(values, dtype=float).ravel())


def angle_between(a, b):
    """Angle in ``[0, pi]`` between two vectors (rowwise for arrays).

    Uses ``atan2(|a x b|, a . b)``, which stays accurate for nearly
    parallel and nearly antipodal inputs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)


def _check_not_antipodal(pairs):
    for name, u, v in pairs:
        gap = np.linalg.norm(np.atleast_2d(u) + np.atleast_2d(v), axis=-1)
        bad = np.flatnonzero(gap < ANTIPODAL_TOL)
        if bad.size:
            raise DomainError(
                f"vertices {name} are antipodal (index {int(bad[0])})")


def triangle_areas(a, b, c, check=True):
    """Vectorized signed areas of geodesic triangles.

    Parameters
    ----------
    a, b, c : array-like
        ``(m, 3)`` arrays of unit vectors.
    check : bool
        Raise :class:`DomainError` if any pair of vertices is antipodal.

    Returns
    -------
    ndarray
        ``(m,)`` signed areas, each in ``(-2 pi, 2 pi)``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if check:
        _check_not_antipodal((("a,b", a, b), ("b,c", b, c), ("c,a", c, a)))
    # a.((b-a)x(c-a)) equals a.(bxc) but keeps its relative accuracy for
    # slim triangles whose vertices nearly coincide.
    triple = np.sum(a * np.cross(b - a, c - a), axis=-1)
    denom = (1.0 + np.sum(a * b, axis=-1) + np.sum(b * c, axis=-1)
             + np.sum(c * a, axis=-1))
    return 2.0 * np.arctan2(triple, denom)


def signed_triangle_area(a, b, c):
    """Signed area (steradians) of the geodesic triangle ``abc``.

    Computed with the half-angle tangent form of the spherical excess,
    ``tan(E/2) = a.(b x c) / (1 + a.b + b.c + c.a)``, so slim triangles
    keep full relative accuracy.  The sign is that of ``a.(b x c)``.

    Raises
    ------
    DomainError
        If two of the vertices are antipodal.
    """
    return float(triangle_areas(a, b, c)[0])


def signed_polygon_area(vertices, apex=None):
    """Signed area of a closed geodesic polygon on S^2.

    The polygon is split into the fan of triangles ``(apex, v_k, v_k+1)``;
    by default the apex is the first vertex.  Points of the sphere are
    weighted by their winding number, normalized so that the antipode of
    the apex has winding number zero.  Reversing the vertex order negates
    the result.

    Parameters
    ----------
    vertices : array-like
        ``(k, 3)`` unit vectors, ``k >= 3``; the last vertex connects back
        to the first.
    apex : array-like, optional
        Unit vector used as the common fan vertex.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[0] < 3:
        raise DomainError("a spherical polygon needs at least 3 vertices")
    nxt = np.roll(v, -1, axis=0)
    _check_not_antipodal((("v_k,v_k+1", v, nxt),))
    if apex is None:
        # Fan from vertex 0: the two triangles touching it are degenerate.
        return compensated_sum(triangle_areas(
            np.broadcast_to(v[0], v[1:-1].shape), v[1:-1], v[2:]))
    apex = unit(apex)
    return compensated_sum(triangle_areas(
        np.broadcast_to(apex, v.shape), v, nxt))


def fan_apex(vertices, candidates=None):
    """Pick a fan apex whose antipode stays far from every vertex."""
    v = np.asarray(vertices, dtype=float)
    if candidates is None:
        golden = np.pi * (3.0 - np.sqrt(5.0))
        k = np.arange(64)
        z = 1.0 - 2.0 * (k + 0.5) / 64
        r = np.sqrt(1.0 - z * z)
        candidates = np.stack([r * np.cos(golden * k),
                               r * np.sin(golden * k), z], axis=1)
    # Largest min-distance from -apex to the vertex set.
    gaps = [np.min(np.linalg.norm(v + cand, axis=1)) for cand in candidates]
    return np.asarray(candidates[int(np.argmax(gaps))], dtype=float)


def geodesic_points(a, b, k):
    """``k`` points equally spaced in angle on the minor arc from a to b.

    Both endpoints are included.  ``a == b`` yields ``k`` copies of ``a``.
    """
    if k < 2:
        raise DomainError("geodesic_points needs k >= 2")
    a = unit(a)
    b = unit(b)
    _check_not_antipodal((("a,b", a, b),))
    theta = float(angle_between(a, b))
    s = np.linspace(0.0, 1.0, k)
    if theta < 1e-12:
        return unit(a[None, :] * (1 - s[:, None]) + b[None, :] * s[:, None])
    w0 = np.sin((1 - s) * theta) / np.sin(theta)
    w1 = np.sin(s * theta) / np.sin(theta)
    pts = w0[:, None] * a[None, :] + w1[:, None] * b[None, :]
    pts[0], pts[-1] = a, b
    return unit(pts)


def segment_distances(p1, p2, q1, q2):
    """Minimum distances between segments ``p1p2`` and ``q1q2`` (rowwise).

    All arguments are ``(m, 3)`` arrays; degenerate (zero-length) segments
    are handled.
    """
    p1, p2, q1, q2 = (np.atleast_2d(np.asarray(x, dtype=float))
                      for x in (p1, p2, q1, q2))
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = np.sum(d1 * d1, axis=1)
    e = np.sum(d2 * d2, axis=1)
    f = np.sum(d2 * r, axis=1)
    c = np.sum(d1 * r, axis=1)
    b = np.sum(d1 * d2, axis=1)
    denom = a * e - b * b
    tiny = 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-14 * a * e,
                     np.clip((b * f - c * e) / np.maximum(denom, tiny), 0, 1),
                     0.0)
        t = (b * s + f) / np.maximum(e, tiny)
        s = np.where(t < 0, np.clip(-c / np.maximum(a, tiny), 0, 1), s)
        s = np.where(t > 1, np.clip((b - c) / np.maximum(a, tiny), 0, 1), s)
        t = np.clip(t, 0, 1)
    closest = (p1 + s[:, None] * d1) - (q1 + t[:, None] * d2)
    return np.linalg.norm(closest, axis=1)


def edge_pair_solid_angles(p1, p2, q1, q2):
    """Vectorized :func:`edge_pair_solid_angle` without domain checks."""
    p1, p2, q1, q2 = (np.atleast_2d(np.asarray(x, dtype=float))
                      for x in (p1, p2, q1, q2))
    w_a = unit(q1 - p1)
    w_b = unit(q1 - p2)
    w_c = unit(q2 - p2)
    w_d = unit(q2 - p1)
    # Fixed diagonal w_a -- w_c.
    return (triangle_areas(w_a, w_b, w_c, check=False)
            + triangle_areas(w_a, w_c, w_d, check=False))


def edge_pair_solid_angle(p1, p2, q1, q2):
    """Signed area of the Gauss image of a pair of segments.

    The image of ``[p1, p2] x [q1, q2]`` under ``(p, q) -> (q - p)/|q - p|``
    is the geodesic quadrilateral with vertices ``q1-p1, q1-p2, q2-p2,
    q2-p1`` (normalized).  Its signed area equals the integral of the
    writhe / Gauss linking integrand over the two segments, so it is
    ``4 pi`` times the contribution of this ordered edge pair.

    Raises
    ------
    DomainError
        If the segments share an endpoint or intersect.
    """
    pts = [np.asarray(x, dtype=float).reshape(1, 3) for x in (p1, p2, q1, q2)]
    scale = max(np.linalg.norm(pts[1] - pts[0]),
                np.linalg.norm(pts[3] - pts[2]))
    if segment_distances(*pts)[0] <= 1e-12 * max(scale, 1e-300):
        raise DomainError("segments touch or intersect")
    return float(edge_pair_solid_angles(*pts)[0])


def rotation_matrix(axis, angle):
    """Rotation by ``angle`` about ``axis`` (Rodrigues)."""
    k = unit(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * kx @ kx
