"""Diagonal coefficient sums of multivariate Lagrange-Good type.

For a numerator lattice F and N nonnegative lattices R_1..R_N (R_i paired with
axis i) this module evaluates

    S(p) = sum over |q| = p of [t^(q+1)] F * R_1^{*q_1} * ... * R_N^{*q_N}

for a range of p. In the Fourier domain the inner sum over q is the complete
homogeneous polynomial h_p(alpha_1, ..., alpha_N) of the transformed R_i, so
each step of p costs O(N) pointwise operations on the grid.

Two numerical safeguards make the sums reliable for large p:

* exponential tilting: all lattices are multiplied by exp(theta.k) where theta
  minimizes max_i [log R_i(e^theta) - theta_i]. The resulting rate rho bounds
  every |alpha_i| by one, and S(p) is returned as mantissa * exp(log scale),
  so nothing underflows;
* grid sizing by a Chernoff bound on the tilted laws, which limits the
  wrapped-around mass of the cyclic convolution to a fixed tolerance while
  keeping the grid length O(p) per axis.

The coefficient tables of component-size problems are then assembled by
``component_sizes`` from one such problem per face of the positive orthant.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np
import scipy.fft as sfft
from scipy.optimize import minimize

from .convolution import (check_budget, chernoff_length, conv_determinant,
                          direct_convolve, log_tilt)
from .degree import index_weight

LOG_TOL = math.log(1e-17)
TILT_BOX = 25.0
CHUNK = 4096


def set_threads(n: int | None = None):
    """Cap numba parallelism (defaults to the NETCOMP_THREADS variable)."""
    if n is None:
        env = os.environ.get("NETCOMP_THREADS")
        if not env:
            return
        n = int(env)
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


set_threads()


@numba.njit(cache=True, parallel=True, fastmath=True)
def _homogeneous_sums(gr, gi, ar, ai, h0r, h0i, steps, chunk):
    # out[k] = Re sum_m g[m] h_{k0+k}(alpha[:, m]); the state h_j(alpha_0..alpha_r)
    # for every prefix r is advanced with h_j^(r) = h_j^(r-1) + alpha_r h_{j-1}^(r).
    # Values below 1e-250 are flushed to zero: subnormal arithmetic is very slow and
    # |h| <= p + 1 at every grid point, so the dropped part is far below round-off.
    N, M = ar.shape
    nch = (M + chunk - 1) // chunk
    part = np.zeros((nch, steps))
    for c in numba.prange(nch):
        c0 = c * chunk
        C = min(M, c0 + chunk) - c0
        hr = np.empty((N, C))
        hi = np.empty((N, C))
        for r in range(N):
            for m in range(C):
                hr[r, m] = h0r[r, c0 + m]
                hi[r, m] = h0i[r, c0 + m]
        for k in range(steps):
            if k > 0:
                for m in range(C):
                    xr = hr[0, m]
                    xi = hi[0, m]
                    a = ar[0, c0 + m]
                    b = ai[0, c0 + m]
                    yr = xr * a - xi * b
                    yi = xr * b + xi * a
                    hr[0, m] = yr if abs(yr) > 1e-250 else 0.0
                    hi[0, m] = yi if abs(yi) > 1e-250 else 0.0
                for r in range(1, N):
                    for m in range(C):
                        xr = hr[r, m]
                        xi = hi[r, m]
                        a = ar[r, c0 + m]
                        b = ai[r, c0 + m]
                        yr = hr[r - 1, m] + xr * a - xi * b
                        yi = hi[r - 1, m] + xr * b + xi * a
                        hr[r, m] = yr if abs(yr) > 1e-250 else 0.0
                        hi[r, m] = yi if abs(yi) > 1e-250 else 0.0
            s = 0.0
            for m in range(C):
                s += gr[c0 + m] * hr[N - 1, m] - gi[c0 + m] * hi[N - 1, m]
            part[c, k] = s
    out = np.zeros(steps)
    for c in range(nch):
        for k in range(steps):
            out[k] += part[c, k]
    return out


def _log1p(z):
    u = 1.0 + z
    small = np.abs(z) < 1e-6
    safe = np.where(small, 2.0, u)
    series = z * (1.0 - z * (0.5 - z / 3.0))
    return np.where(small, series, np.log(safe) * z / (safe - 1.0))


def _expm1(z):
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    return re + 1j * np.exp(x) * np.sin(y)


def complete_homogeneous(alpha: np.ndarray, p: int) -> np.ndarray:
    """h_p of one or two variables per grid point, in closed form.

    For two variables h_p(a, b) = big^p (1 - t^(p+1)) / (1 - t) with
    t = small/big; near t = 1 the ratio is evaluated through log1p/expm1.
    """
    if alpha.shape[0] == 1:
        return alpha[0] ** p
    if alpha.shape[0] != 2:
        raise ValueError("closed form only for one or two variables")
    a, b = alpha
    swap = np.abs(a) < np.abs(b)
    big = np.where(swap, b, a)
    small = np.where(swap, a, b)
    zero = np.abs(big) < 1e-250     # flushed like the kernel; h_p(0, 0) = 0 for p > 0
    t = small / np.where(zero, 1.0, big)
    d = t - 1.0
    near = np.abs(d) < 0.5
    exact = d == 0
    dn = np.where(near & ~exact, d, -0.5)   # placeholder keeps the masked branch finite
    geo_near = np.where(exact, p + 1.0, _expm1((p + 1) * _log1p(dn)) / dn)
    df = np.where(near, -1.0, d)
    geo_far = (t ** (p + 1) - 1.0) / df
    geo = np.where(near, geo_near, geo_far)
    out = big ** p * geo
    if p == 0:
        return np.ones_like(out)
    return np.where(zero, 0.0, out)


class LogMgf:
    """theta -> log sum_k |f(k)| exp(theta.k), prepared for repeated calls."""

    def __init__(self, f: np.ndarray):
        nz = np.nonzero(f)
        self.k = np.stack(nz, axis=1).astype(float)
        self.logf = np.log(np.abs(f[nz]))

    def __call__(self, theta) -> float:
        if len(self.logf) == 0:
            return -math.inf
        x = self.k @ theta + self.logf
        top = x.max()
        return float(top + math.log(np.exp(x - top).sum()))


def find_tilt(R: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
    """theta minimizing max_i [log R_i(e^theta) - theta_i] and the rate log rho."""
    N = len(R)
    mgf = [LogMgf(r) for r in R]

    def obj(th):
        th = np.clip(th, -TILT_BOX, TILT_BOX)
        return max(m(th) - th[i] for i, m in enumerate(mgf))

    if N == 1:
        from scipy.optimize import minimize_scalar
        res = minimize_scalar(lambda x: obj(np.array([x])), bounds=(-TILT_BOX, TILT_BOX),
                              method="bounded", options={"xatol": 1e-12})
        theta = np.array([res.x])
    else:
        best = None
        for start in (np.zeros(N), np.full(N, -0.5)):
            res = minimize(obj, start, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400 * N})
            if best is None or res.fun < best.fun:
                best = res
        theta = np.clip(best.x, -TILT_BOX, TILT_BOX)
    # rho from the final theta guarantees |alpha_i| <= 1 regardless of optimizer accuracy
    logrho = max(log_tilt(r, theta)[1] - theta[i] for i, r in enumerate(R))
    return theta, float(logrho)


@dataclass
class Tilt:
    """Lattices multiplied by exp(theta.k), with their log normalizers."""
    theta: np.ndarray
    Ft: np.ndarray
    Rt: list
    alpha_log: np.ndarray
    log_base: float
    logrho: float


class DiagonalProblem:
    """Prepared evaluation of S(p) for fixed F and R (see module docstring).

    Every S(p) is bounded by exp(log_base(theta) + p logrho(theta)) for any
    tilt theta, and the round-off of the transform is relative to that bound.
    The asymptotic tilt minimizes logrho; for small p the numerator F matters
    as well, so ranges of p are evaluated with the tilt that minimizes the
    bound at a representative p of the range.
    """

    def __init__(self, F: np.ndarray, R: Sequence[np.ndarray], log_tol: float = LOG_TOL):
        self.F = np.asarray(F, float)
        self.R = [np.asarray(r, float) for r in R]
        self.N = len(self.R)
        if self.F.ndim != self.N or any(r.ndim != self.N for r in self.R):
            raise ValueError("F and every R_i must have one axis per R_i")
        if any(np.any(r < 0) for r in self.R):
            raise ValueError("R_i must be nonnegative")
        self.log_tol = log_tol
        self.zero = not np.any(self.F)
        self.theta, self.logrho = find_tilt(self.R)
        self._tilts: dict = {}

    def tilt(self, theta) -> Tilt:
        theta = np.asarray(theta, float)
        Ft, cF = log_tilt(self.F, theta)
        tilted = [log_tilt(r, theta) for r in self.R]
        logrho = max(c - theta[i] for i, (_, c) in enumerate(tilted))
        alpha_log = np.array([c - theta[i] - logrho for i, (_, c) in enumerate(tilted)])
        return Tilt(theta, Ft, [t[0] for t in tilted], alpha_log,
                    cF - float(theta.sum()), float(logrho))

    def tilt_for(self, p: float) -> Tilt:
        """Tilt minimizing the bound log_base + p logrho on S(p)."""
        key = round(float(p), 6)
        if key in self._tilts:
            return self._tilts[key]
        if self.zero:
            t = self.tilt(self.theta)
        else:
            fm = LogMgf(self.F)
            rm = [LogMgf(r) for r in self.R]

            def obj(th):
                th = np.clip(th, -TILT_BOX, TILT_BOX)
                rho = max(m(th) - th[i] for i, m in enumerate(rm))
                return fm(th) - th.sum() + p * rho

            if self.N == 1:
                from scipy.optimize import minimize_scalar
                res = minimize_scalar(lambda x: obj(np.array([x])), bounds=(-TILT_BOX, TILT_BOX),
                                      method="bounded", options={"xatol": 1e-8})
                th = np.array([res.x])
            else:
                best = None
                for start in (np.clip(self.theta, -TILT_BOX, TILT_BOX), np.zeros(self.N)):
                    res = minimize(obj, start, method="Nelder-Mead",
                                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 200 * self.N})
                    if best is None or res.fun < best.fun:
                        best = res
                th = best.x
            t = self.tilt(np.clip(th, -TILT_BOX, TILT_BOX))
        self._tilts[key] = t
        return t

    # grid ---------------------------------------------------------------
    def grid(self, count: int, tilt: Tilt | None = None) -> list[int]:
        tilt = tilt or self.tilt_for(count)
        L = []
        for a in range(self.N):
            reach = self.F.shape[a] + count * max(r.shape[a] - 1 for r in self.R)
            need = count + 2
            cl = chernoff_length(tilt.Rt, count, tilt.Ft, a, self.log_tol)
            L.append(sfft.next_fast_len(max(need, min(reach, cl + 1)), real=True))
        return L

    def _transforms(self, L, tilt: Tilt):
        check_budget([*L[:-1], L[-1] // 2 + 1], 2 * self.N + 4)
        N = self.N
        Fh = sfft.rfftn(self._fit(tilt.Ft, L), L)
        shp = Fh.shape
        phase_all = np.ones(shp, complex)
        alpha = np.empty((N,) + shp, complex)
        phases = []
        for a in range(N):
            m = np.arange(shp[a]) if a == N - 1 else np.fft.fftfreq(L[a]) * L[a]
            ph = np.exp(2j * np.pi * m / L[a]).reshape([-1 if b == a else 1 for b in range(N)])
            phases.append(ph)
            phase_all = phase_all * ph
        for i in range(N):
            alpha[i] = sfft.rfftn(self._fit(tilt.Rt[i], L), L) * phases[i] * math.exp(tilt.alpha_log[i])
        w = np.full(shp, 2.0)
        w[..., 0] = 1.0
        if L[-1] % 2 == 0:
            w[..., -1] = 1.0
        g = Fh * phase_all * w / math.prod(L)
        return g.ravel(), alpha.reshape(N, -1)

    @staticmethod
    def _fit(x, L):
        # wrap any support beyond the grid (only happens when its mass is negligible)
        if all(s <= l for s, l in zip(x.shape, L)):
            return x
        y = np.zeros(L)
        for idx in np.ndindex(*x.shape):
            y[tuple(i % l for i, l in zip(idx, L))] += x[idx]
        return y

    # evaluation -----------------------------------------------------------
    def _run(self, g, alpha, k0, steps):
        if k0 == 0:
            h0 = np.ones_like(alpha)
        else:
            h0 = np.empty_like(alpha)
            for r in range(self.N):
                h0[r] = complete_homogeneous(alpha[: r + 1], k0)
        return _homogeneous_sums(g.real.copy(), g.imag.copy(),
                                 np.ascontiguousarray(alpha.real), np.ascontiguousarray(alpha.imag),
                                 np.ascontiguousarray(h0.real), np.ascontiguousarray(h0.imag),
                                 steps, CHUNK)

    @staticmethod
    def segment_edges(kmin: int, kmax: int, segments: int | None = None) -> list[int]:
        """Doubling ranges from kmin, then equal ranges of ``segments`` pieces."""
        stop = kmax + 1
        span = stop - kmin
        if segments is None:
            segments = int(min(8, max(1, span // 64)))
        step = max(1, -(-span // segments))
        edges = {kmin, stop}
        e = kmin
        while True:
            e = 2 * e if e > 0 else 1
            if e - kmin >= step or e >= stop:
                break
            edges.add(e)
        edges.update(range(kmin + step, stop, step))
        return sorted(edges)

    @staticmethod
    def _reference(a: int, b: int) -> float:
        # p at which one tilt serves the range [a, b) best on a log scale
        return 0.0 if a == 0 else math.sqrt(a * (b - 1))

    def sums(self, kmax: int, kmin: int = 0, segments: int | None = None):
        """(mantissa, log_scale) arrays for p = kmin..kmax."""
        ks = np.arange(kmin, kmax + 1)
        if kmax < kmin:
            return np.zeros(0), np.zeros(0)
        if self.zero:
            return np.zeros(len(ks)), np.zeros(len(ks))
        out = np.empty(len(ks))
        logs = np.empty(len(ks))
        edges = self.segment_edges(kmin, kmax, segments)
        for a, b in zip(edges[:-1], edges[1:]):
            t = self.tilt_for(self._reference(a, b))
            g, alpha = self._transforms(self.grid(int(b - 1), t), t)
            if self.N <= 2:
                vals = self._run(g, alpha, int(a), int(b - a))
            else:
                # no closed form for h_a of three or more variables: start at zero
                vals = self._run(g, alpha, 0, int(b))[a:]
            out[a - kmin: b - kmin] = vals
            logs[a - kmin: b - kmin] = t.log_base + np.arange(a, b) * t.logrho
        return out, logs

    def sum_at(self, p: int) -> tuple[float, float]:
        """Single S(p) in O(grid) work for one or two variables."""
        t = self.tilt_for(p)
        log_scale = t.log_base + p * t.logrho
        if self.zero:
            return 0.0, log_scale
        g, alpha = self._transforms(self.grid(p, t), t)
        if self.N <= 2:
            return float(np.real(np.sum(g * complete_homogeneous(alpha, p)))), log_scale
        return float(self._run(g, alpha, 0, p + 1)[-1]), log_scale

    def cells(self, kmax: int) -> np.ndarray:
        """Table T[q] = [t^(q+1)] F prod R_i^{q_i} for |q| <= kmax (one or two axes)."""
        if self.N not in (1, 2):
            raise ValueError("cell tables are provided for one or two axes")
        shape = (kmax + 1,) * self.N
        out = np.zeros(shape)
        if self.zero:
            return out
        q = np.indices(shape).sum(axis=0)
        edges = self.segment_edges(0, kmax)
        for a, b in zip(edges[:-1], edges[1:]):
            t = self.tilt_for(self._reference(a, b))
            part = self._cells_with(t, kmax)
            sel = (q >= a) & (q < b)
            out[sel] = part[sel]
        return out

    def _cells_with(self, t: Tilt, kmax: int) -> np.ndarray:
        g, alpha = self._transforms(self.grid(kmax, t), t)
        if self.N == 1:
            out = np.zeros(kmax + 1)
            h = g.copy()
            for q in range(kmax + 1):
                out[q] = np.real(h.sum())
                h *= alpha[0]
            return out * np.exp(t.log_base + np.arange(kmax + 1) * t.logrho)
        out = np.zeros((kmax + 1, kmax + 1))
        row = g.copy()
        for q0 in range(kmax + 1):
            h = row.copy()
            for q1 in range(kmax + 1 - q0):
                out[q0, q1] = np.real(h.sum())
                h *= alpha[1]
            row *= alpha[0]
        q = np.add.outer(np.arange(kmax + 1), np.arange(kmax + 1))
        with np.errstate(over="ignore", under="ignore"):
            return np.where(q <= kmax, out * np.exp(t.log_base + q * t.logrho), 0.0)


# ------------------------------------------------------------------ assembly

def clearing_matrix(R: Sequence[np.ndarray]) -> list[list[np.ndarray]]:
    """Entries delta_ij R_i - k_j R_i of the denominator-cleared Jacobian."""
    N = len(R)
    return [[(R[i] if i == j else 0.0) - index_weight(R[i], j) for j in range(N)] for i in range(N)]


def explicit_numerator_2(R0: np.ndarray, R1: np.ndarray) -> np.ndarray:
    """d = (R0 - k R0) * (R1 - l R1) - (l R0) * (k R1) by direct convolution."""
    a = R0 - index_weight(R0, 0)
    b = R1 - index_weight(R1, 1)
    return direct_convolve(a, b) - direct_convolve(index_weight(R0, 1), index_weight(R1, 0))


def face_numerator(U: np.ndarray, R: Sequence[np.ndarray], method: str) -> np.ndarray:
    N = len(R)
    if method == "explicit":
        if N == 1:
            d = R[0] - index_weight(R[0], 0)
        elif N == 2:
            d = explicit_numerator_2(R[0], R[1])
        else:
            d = conv_determinant(clearing_matrix(R))
        return direct_convolve(U, d)
    if method == "fourier":
        return direct_convolve(U, conv_determinant(clearing_matrix(R)))
    raise ValueError(f"unknown numerator method {method!r}")


@dataclass
class Face:
    axes: tuple
    problem: DiagonalProblem


def faces(U: np.ndarray, R: Sequence[np.ndarray], method: str = "explicit") -> list[Face]:
    """One diagonal problem per nonempty set of active axes.

    Cells whose index vanishes on some axes are coefficients of the slice of
    the problem at t = 0 on those axes. There the Jacobian rows of the inactive
    axes are unit rows, so the cell is given by the same cleared formula in
    the active axes alone and no series reciprocal is needed.
    """
    N = len(R)
    out = []
    for size in range(1, N + 1):
        for T in itertools.combinations(range(N), size):
            sl = tuple(slice(None) if a in T else 0 for a in range(N))
            UT = U[sl]
            RT = [R[i][sl] for i in T]
            if not np.any(UT):
                F = np.zeros(UT.shape)
            else:
                F = face_numerator(UT, RT, method)
            out.append(Face(T, DiagonalProblem(F, RT)))
    return out


def component_sizes(U: np.ndarray, R: Sequence[np.ndarray], nmax: int, method: str = "explicit"):
    """w(n), n = 1..nmax, as (mantissa, log_scale) arrays.

    w(1) = U(0); for n > 1, w(n) = sum over faces T of S_T(n - 1 - |T|).
    """
    U = np.asarray(U, float)
    mant = np.zeros(nmax)
    logs = np.zeros(nmax)
    mant[0] = U[(0,) * U.ndim]
    if nmax == 1:
        return mant, logs
    parts = []
    for face in faces(U, R, method):
        p0 = len(face.axes)
        kmax = nmax - 1 - p0
        if kmax < 0:
            continue
        m, lg = face.problem.sums(kmax)
        parts.append((p0 + 1, m, lg))      # entry p corresponds to n = p + |T| + 1
    for n in range(2, nmax + 1):
        terms = [(m[n - s], lg[n - s]) for s, m, lg in parts if 0 <= n - s < len(m)]
        if not terms:
            continue
        ref = max(lg for _, lg in terms)
        mant[n - 1] = sum(v * math.exp(lg - ref) for v, lg in terms)
        logs[n - 1] = ref
    return mant, logs


def component_size_at(U: np.ndarray, R: Sequence[np.ndarray], n: int, method: str = "explicit",
                      prepared: list[Face] | None = None) -> tuple[float, float]:
    """Single w(n) without the rest of the curve."""
    U = np.asarray(U, float)
    if n == 1:
        return float(U[(0,) * U.ndim]), 0.0
    terms = []
    for face in prepared if prepared is not None else faces(U, R, method):
        p = n - 1 - len(face.axes)
        if p >= 0:
            terms.append(face.problem.sum_at(p))
    if not terms:
        return 0.0, 0.0
    ref = max(lg for _, lg in terms)
    return sum(v * math.exp(lg - ref) for v, lg in terms), ref
