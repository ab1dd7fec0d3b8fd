"""
Adaptive 2-D quadrature over blocks of the (s, t) parameter square.

Each macro block is the image of the unit square ``(u, v) in [0, 1]^2``
under one of four maps:

``RECT``
    ``s = cs + L1 u``, ``t = ct + L2 v``.
``TRI``
    The triangle ``cs < s < t < cs + L1`` above the diagonal:
    ``s = cs + L1 u``, ``t = s + L1 (1 - u) v``.  The integrand is smooth
    on the closed triangle even though it is only Lipschitz across the
    diagonal.
``CORNER_A``, ``CORNER_B``
    Duffy halves of a rectangle ``[0, L1] x [0, L2]`` in local coordinates
    ``(X, Y)`` measured from a corner that touches the diagonal:
    ``s = cs + ss X``, ``t = ct + st Y`` with ``ss, st = +-1``.  Half A uses
    ``X = L1 u, Y = L2 u v``, half B ``X = L1 u v, Y = L2 u``.

Sub-blocks are squares of the ``(u, v)`` domain.  A sub-block is accepted
when a tensor Gauss-Legendre estimate and the sum over its four children
agree to within its share (by area) of the absolute tolerance, or to within
the rounding noise of the block's own values; otherwise it is split.  All
live sub-blocks are processed together in numpy batches.

An integrand may return ``(values, errors)``, with ``errors`` a pointwise
bound on the evaluation error.  That noise enters the acceptance floor:
splitting cannot resolve differences smaller than the values' own error.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .geometry import compensated_sum

RECT, TRI, CORNER_A, CORNER_B = 0, 1, 2, 3

_BATCH_POINTS = 400_000
_NOISE = 64 * np.finfo(float).eps


@dataclass
class Block:
    kind: int
    cs: float
    ct: float
    l1: float
    l2: float
    ss: float = 1.0
    st: float = 1.0
    tag: object = None


def rect(s0, s1, t0, t1, tag=None):
    return Block(RECT, s0, t0, s1 - s0, t1 - t0, tag=tag)


def triangle(a, b, tag=None):
    return Block(TRI, a, a, b - a, b - a, tag=tag)


def corner(cs, ct, l1, l2, ss, st, tag=None):
    """Both Duffy halves of a rectangle with a diagonal-touching corner."""
    return [Block(CORNER_A, cs, ct, l1, l2, ss, st, tag),
            Block(CORNER_B, cs, ct, l1, l2, ss, st, tag)]


def _nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


class _Batch:
    """Parameters of the macro blocks, gathered per sub-block."""

    def __init__(self, blocks):
        self.kind = np.array([b.kind for b in blocks])
        self.cs = np.array([b.cs for b in blocks], dtype=float)
        self.ct = np.array([b.ct for b in blocks], dtype=float)
        self.l1 = np.array([b.l1 for b in blocks], dtype=float)
        self.l2 = np.array([b.l2 for b in blocks], dtype=float)
        self.ss = np.array([b.ss for b in blocks], dtype=float)
        self.st = np.array([b.st for b in blocks], dtype=float)


def _map(batch, macro, u, v):
    """(s, t, jacobian) for sub-block points; ``macro`` indexes blocks."""
    kind = batch.kind[macro][:, None]
    cs, ct = batch.cs[macro][:, None], batch.ct[macro][:, None]
    l1, l2 = batch.l1[macro][:, None], batch.l2[macro][:, None]
    ss, st = batch.ss[macro][:, None], batch.st[macro][:, None]

    s = np.empty_like(u)
    t = np.empty_like(u)
    jac = np.empty_like(u)

    m = np.broadcast_to(kind == RECT, u.shape)
    s = np.where(m, cs + l1 * u, s)
    t = np.where(m, ct + l2 * v, t)
    jac = np.where(m, l1 * l2, jac)

    m = np.broadcast_to(kind == TRI, u.shape)
    s_tri = cs + l1 * u
    s = np.where(m, s_tri, s)
    t = np.where(m, s_tri + l1 * (1 - u) * v, t)
    jac = np.where(m, l1 * l1 * (1 - u), jac)

    for k, (xa, ya) in ((CORNER_A, (u, u * v)), (CORNER_B, (u * v, u))):
        m = np.broadcast_to(kind == k, u.shape)
        s = np.where(m, cs + ss * l1 * xa, s)
        t = np.where(m, ct + st * l2 * ya, t)
        jac = np.where(m, l1 * l2 * u, jac)
    return s, t, jac


def _evaluate(integrand, s, t, diag):
    out = integrand(s, t, diag)
    if isinstance(out, tuple):
        vals, err = out
        return vals, np.abs(err)
    return out, None


def _estimate(batch, macro, box, integrand, xq, wq):
    """Gauss-Legendre integral, (s, t)-area and rounding-noise level of
    each sub-block."""
    m = box.shape[0]
    q = xq.size
    out = np.empty(m)
    area = np.empty(m)
    mag = np.empty(m)
    step = max(1, _BATCH_POINTS // (q * q))
    wt = np.outer(wq, wq).ravel()
    for lo in range(0, m, step):
        hi = min(m, lo + step)
        b = box[lo:hi]
        du = (b[:, 1] - b[:, 0])[:, None]
        dv = (b[:, 3] - b[:, 2])[:, None]
        uu = b[:, 0][:, None] + du * np.repeat(xq, q)[None, :]
        vv = b[:, 2][:, None] + dv * np.tile(xq, q)[None, :]
        s, t, jac = _map(batch, macro[lo:hi], uu, vv)
        kind = np.broadcast_to(batch.kind[macro[lo:hi]][:, None], s.shape)
        vals, err = _evaluate(integrand, s.ravel(), t.ravel(),
                              (kind == TRI).ravel())
        vals = vals.reshape(s.shape)
        w = wt[None, :] * du * dv * jac
        aw = np.abs(w)
        out[lo:hi] = np.sum(w * vals, axis=1)
        area[lo:hi] = np.sum(aw, axis=1)
        noise = _NOISE * np.abs(vals)
        if err is not None:
            noise = np.maximum(noise, err.reshape(s.shape))
        mag[lo:hi] = np.sum(aw * noise, axis=1)
    return out, area, mag


def _split(box):
    u0, u1, v0, v1 = box.T
    um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
    kids = np.stack([
        np.stack([u0, um, v0, vm], axis=1),
        np.stack([um, u1, v0, vm], axis=1),
        np.stack([u0, um, vm, v1], axis=1),
        np.stack([um, u1, vm, v1], axis=1),
    ], axis=1)
    return kids.reshape(-1, 4)


@dataclass
class QuadratureResult:
    value: float
    error: float
    evaluations: int
    subdivisions: int
    per_block: np.ndarray


def integrate(blocks, integrand, tol, order=10, max_subdivisions=50_000,
              min_level=0):
    """Adaptively integrate ``integrand`` over the union of ``blocks``.

    Parameters
    ----------
    blocks : list of Block
    integrand : callable
        ``integrand(s, t, diag)`` on flat arrays; ``diag`` marks points of
        ``TRI`` blocks (where ``t - s`` may be tiny).  Returns the values,
        or ``(values, errors)`` with pointwise evaluation-error bounds.
    tol : float
        Absolute tolerance on the total.
    min_level : int
        Number of uniform splits applied before adaptivity starts.

    Raises
    ------
    ConvergenceError
        When more than ``max_subdivisions`` sub-blocks were split.
    """
    if not blocks:
        return QuadratureResult(0.0, 0.0, 0, 0, np.zeros(0))
    xq, wq = _nodes(order)
    batch = _Batch(blocks)
    macro = np.arange(len(blocks))
    box = np.tile([0.0, 1.0, 0.0, 1.0], (len(blocks), 1))
    for _ in range(min_level):
        box = _split(box)
        macro = np.repeat(macro, 4)
    est, area, _ = _estimate(batch, macro, box, integrand, xq, wq)
    total_area = float(np.sum(area))
    evals = est.size * order * order
    accepted, errors = [], []
    per_block = np.zeros(len(blocks))
    splits = 0
    while macro.size:
        kids = _split(box)
        kmacro = np.repeat(macro, 4)
        kest, karea, kmag = _estimate(batch, kmacro, kids, integrand, xq, wq)
        evals += kest.size * order * order
        ksum = kest.reshape(-1, 4).sum(axis=1)
        err = np.abs(ksum - est)
        local = tol * area / max(total_area, 1e-300)
        # A difference at the rounding level of the block's own terms cannot
        # be reduced by splitting further.
        noise = kmag.reshape(-1, 4).sum(axis=1)
        ok = (err <= local) | (err <= noise)
        accepted.append(ksum[ok])
        errors.append(err[ok])
        per_block += np.bincount(macro[ok], weights=ksum[ok],
                                 minlength=len(blocks))
        bad = np.flatnonzero(~ok)
        splits += bad.size
        if splits > max_subdivisions:
            estimate = compensated_sum(np.concatenate(accepted + [ksum[bad]]))
            error = float(np.sum(np.concatenate(errors + [err[bad]])))
            raise ConvergenceError(
                f"quadrature did not converge within {max_subdivisions} "
                f"subdivisions (error indicator {error:.3g})",
                estimate, error)
        sel = (bad[:, None] * 4 + np.arange(4)[None, :]).ravel()
        box = kids[sel]
        macro = kmacro[sel]
        est = kest[sel]
        area = karea[sel]
    value = compensated_sum(np.concatenate(accepted))
    error = float(np.sum(np.concatenate(errors)))
    return QuadratureResult(value, error, evals, splits, per_block)


def gauss_legendre_01(order):
    """Nodes and weights of Gauss-Legendre on ``[0, 1]``."""
    return _nodes(order)


__all__ = ["Block", "rect", "triangle", "corner", "integrate",
           "QuadratureResult", "RECT", "TRI", "CORNER_A", "CORNER_B",
           "gauss_legendre_01"]
