"""Multidimensional convolution, convolution powers, series reciprocals and
determinants over the convolution ring.

All lattices are dense numpy arrays whose entry at multi-index k is the
coefficient of t^k. Convolutions are linear (non-cyclic) and truncated to a
requested output shape.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import MemoryBudgetError, SeriesError

MEMORY_BUDGET = 4 * 2**30   # bytes of Fourier-domain scratch per call
TILT_MAX = 10.0


def _full_shape(*arrays) -> tuple:
    return tuple(sum(a.shape[d] - 1 for a in arrays) + 1 for d in range(arrays[0].ndim))


def _check_dims(*arrays):
    d = arrays[0].ndim
    if any(a.ndim != d for a in arrays):
        raise SeriesError("dimension mismatch", code="dimension_mismatch")


def _crop(x: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=x.dtype)
    sl = tuple(slice(0, min(a, b)) for a, b in zip(x.shape, shape))
    out[sl] = x[sl]
    return out


def check_budget(shape, arrays: int = 4, budget: int | None = None):
    need = 16 * arrays * math.prod(shape)
    budget = MEMORY_BUDGET if budget is None else budget
    if need > budget:
        raise MemoryBudgetError(
            f"transform of shape {tuple(shape)} needs ~{need / 2**20:.0f} MiB "
            f"(budget {budget / 2**20:.0f} MiB)")


def convolve(f, g, out_shape=None) -> np.ndarray:
    """Linear convolution via real FFTs, truncated to ``out_shape``."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    _check_dims(f, g)
    full = _full_shape(f, g)
    out_shape = full if out_shape is None else tuple(out_shape)
    need = tuple(min(a, b) for a, b in zip(full, out_shape))
    # truncating inputs first is exact for the retained window
    fc = f[tuple(slice(0, n) for n in need)]
    gc = g[tuple(slice(0, n) for n in need)]
    fshape = [sfft.next_fast_len(a + b - 1, real=True) for a, b in zip(fc.shape, gc.shape)]
    check_budget(fshape, 3)
    y = sfft.irfftn(sfft.rfftn(fc, fshape) * sfft.rfftn(gc, fshape), fshape)
    return _crop(y[tuple(slice(0, n) for n in need)], out_shape)


def direct_convolve(f, g, out_shape=None) -> np.ndarray:
    """Reference convolution by explicit summation over the support of f."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    _check_dims(f, g)
    full = _full_shape(f, g)
    out_shape = full if out_shape is None else tuple(out_shape)
    out = np.zeros(out_shape)
    for idx in zip(*np.nonzero(f)):
        lo = idx
        span = tuple(max(0, min(g.shape[d], out_shape[d] - lo[d])) for d in range(f.ndim))
        if 0 in span:
            continue
        dst = tuple(slice(lo[d], lo[d] + span[d]) for d in range(f.ndim))
        out[dst] += f[idx] * g[tuple(slice(0, s) for s in span)]
    return out


def delta(shape) -> np.ndarray:
    d = np.zeros(shape)
    d[(0,) * len(shape)] = 1.0
    return d


# ---------------------------------------------------------------- tilting

def log_tilt(f: np.ndarray, theta) -> tuple[np.ndarray, float]:
    """Return (h, c) with f(k) exp(theta.k) = h(k) exp(c) and sum |h| = 1."""
    theta = np.asarray(theta, float)
    expo = np.zeros(f.shape)
    for d, t in enumerate(theta):
        sh = [1] * f.ndim
        sh[d] = -1
        expo = expo + t * np.arange(f.shape[d]).reshape(sh)
    nz = f != 0
    if not nz.any():
        return np.zeros_like(f), 0.0
    c = float(logsumexp(expo[nz] + np.log(np.abs(f[nz]))))
    h = np.zeros_like(f, dtype=float)
    h[nz] = f[nz] * np.exp(expo[nz] - c)
    return h, c


def log_mgf(f: np.ndarray, theta) -> float:
    return log_tilt(f, theta)[1]


def chernoff_length(factors: Sequence[np.ndarray], count: int, extra: np.ndarray | None,
                    axis: int, log_tol: float) -> int:
    """Smallest L with P(sum of ``count`` draws + extra draw >= L) <= exp(log_tol).

    Draws come from any of the (normalized, nonnegative) ``factors``; the bound
    uses the worst factor for every s, so it holds for every mix of factors.
    """
    s = np.logspace(-4, math.log10(8.0), 1500)
    worst = np.full(s.shape, -np.inf)
    for f in factors:
        m = np.abs(f).sum(axis=tuple(a for a in range(f.ndim) if a != axis))
        nz = m > 0
        k = np.arange(len(m))[nz]
        lam = logsumexp(np.outer(s, k) + np.log(m[nz] / m.sum()), axis=1)
        worst = np.maximum(worst, lam)
    total = count * worst
    if extra is not None:
        m = np.abs(extra).sum(axis=tuple(a for a in range(extra.ndim) if a != axis))
        nz = m > 0
        if nz.any():
            total = total + logsumexp(np.outer(s, np.arange(len(m))[nz]) + np.log(m[nz] / m.sum()),
                                      axis=1)
    return int(math.ceil(np.min((total - log_tol) / s)))


def _solve_tilt(f: np.ndarray, n: int, target: np.ndarray) -> np.ndarray:
    """Tilt theta making the mean of the n-fold sum equal ``target`` (per axis)."""
    d = f.ndim
    t = np.asarray(target, float) / max(n, 1)

    def obj(th):
        return log_mgf(f, th) - th @ t

    hi = np.array([f.shape[a] - 1 for a in range(d)], float)
    th0 = np.zeros(d)
    # targets on or beyond the support edge drive theta to the box boundary
    res = minimize(obj, th0, method="L-BFGS-B", bounds=[(-TILT_MAX, TILT_MAX)] * d)
    th = res.x
    th[t >= hi] = TILT_MAX
    th[t <= 0] = -TILT_MAX
    return th


def convolution_power(f, n: int, window=None, *, log_scale: bool = False, tilt: bool | None = None,
                      tol: float = 1e-12, budget: int | None = None):
    """Values of the n-fold convolution power of f on ``window``.

    ``window`` is a sequence of (start, stop) pairs, one per axis; by default
    the whole reachable support. The power is taken pointwise in the Fourier
    domain on an exponentially tilted copy of f, with a cyclic length chosen by
    a Chernoff bound so that the wrapped-around mass stays below ``tol`` of the
    total. Tilting is applied by default only to single-point windows, where it
    keeps relative accuracy for deep tails; on wide windows it would amplify
    round-off away from the centre. With ``log_scale=True`` the result is (mantissa, log_factor) with
    values = mantissa * exp(log_factor).
    """
    f = np.asarray(f, float)
    if n < 0:
        raise SeriesError("negative convolution power")
    reach = tuple(n * (s - 1) + 1 for s in f.shape)
    if window is None:
        window = [(0, r) for r in reach]
    window = [(int(a), int(b)) for a, b in window]
    wshape = tuple(max(0, b - a) for a, b in window)
    if n == 0:
        out = _crop(delta(f.shape)[tuple(slice(a, None) for a, _ in window)], wshape) \
            if all(a == 0 for a, _ in window) else np.zeros(wshape)
        return (out, 0.0) if log_scale else out
    if tilt is None:
        tilt = all(w <= 1 for w in wshape)
    if np.any(f < 0):
        tilt = False
    lo = np.array([a for a, _ in window], float)
    hi = np.array([b - 1 for _, b in window], float)
    centre = 0.5 * (lo + hi)
    theta = _solve_tilt(f, n, centre) if tilt else np.zeros(f.ndim)
    h, c = log_tilt(f, theta)
    L = []
    for ax in range(f.ndim):
        need = int(min(reach[ax], window[ax][1]))
        cl = chernoff_length([h], n, None, ax, math.log(tol) - 2.0)
        L.append(sfft.next_fast_len(max(need, min(reach[ax], cl + 1)), real=True))
    check_budget(L, 2, budget)
    hh = h
    if any(hh.shape[a] > L[a] for a in range(f.ndim)):
        # only possible when the power can never reach beyond the kept range
        hh = hh[tuple(slice(0, L[a]) for a in range(f.ndim))]
    spec = sfft.rfftn(hh, L)
    y = sfft.irfftn(spec**n, L)
    out = np.zeros(wshape)
    src = tuple(slice(a, min(b, L[i])) for i, (a, b) in enumerate(window))
    val = y[src]
    out[tuple(slice(0, s) for s in val.shape)] = val
    # undo the tilt: value(k) = mantissa(k) * exp(n c - theta.k)
    expo = np.zeros(wshape)
    for ax, (a, b) in enumerate(window):
        sh = [1] * f.ndim
        sh[ax] = -1
        expo = expo - theta[ax] * (np.arange(a, b) - centre[ax]).reshape(sh)
    mant = out * np.exp(expo)
    logf = n * c - float(theta @ centre)
    if log_scale:
        return mant, logf
    return mant * math.exp(logf) if logf > -745 else mant * np.exp(np.float64(logf))


def reciprocal(f, out_shape=None) -> np.ndarray:
    """Truncated formal power-series reciprocal g with (f * g)(m) = delta(m).

    Solved exactly by forward substitution in lexicographic index order, so
    every coefficient is a finite sum of products (no transform round-off).
    """
    f = np.asarray(f, float)
    out_shape = f.shape if out_shape is None else tuple(out_shape)
    zero = (0,) * f.ndim
    f0 = f[zero]
    if f0 == 0:
        raise SeriesError("series not invertible (zero constant term)", code="not_invertible")
    fc = _crop(f, out_shape)
    g = np.zeros(out_shape)
    for m in np.ndindex(*out_shape):
        # sum over s <= m, s != 0 of f(s) g(m - s)
        fs = fc[tuple(slice(0, k + 1) for k in m)]
        gs = g[tuple(slice(k, None, -1) if k > 0 else slice(0, 1) for k in m)]
        acc = float(np.sum(fs * gs)) - f0 * g[m]
        g[m] = ((1.0 if m == zero else 0.0) - acc) / f0
    return g


def conv_determinant(M, out_shape=None) -> np.ndarray:
    """Determinant of a square matrix of lattices with convolution as product."""
    n = len(M)
    if any(len(row) != n for row in M):
        raise SeriesError("conv_determinant needs a square matrix", code="not_square")
    if n == 0:
        raise SeriesError("empty matrix", code="not_square")
    entries = [[np.asarray(x, float) for x in row] for row in M]
    _check_dims(*[x for row in entries for x in row])
    d = entries[0][0].ndim
    span = [max(x.shape[a] for row in entries for x in row) - 1 for a in range(d)]
    full = tuple(n * s + 1 for s in span)
    out_shape = full if out_shape is None else tuple(out_shape)
    need = tuple(min(a, b) for a, b in zip(full, out_shape))
    L = [sfft.next_fast_len(s, real=True) for s in need]
    check_budget(L, n * n + 1)
    hat = [[sfft.rfftn(x[tuple(slice(0, s) for s in need)], L) for x in row] for row in entries]
    stack = np.stack([np.stack(row, axis=-1) for row in hat], axis=-2)
    det = np.linalg.det(stack)
    y = sfft.irfftn(det, L)
    return _crop(y[tuple(slice(0, s) for s in need)], out_shape)
