"""Exact in-, out- and weak-component size distributions of directed
configuration networks."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .convolution import direct_convolve
from .degree import DegreeDistribution, excess, marginal_excess
from .errors import ComponentError
from .inversion import DiagonalProblem, component_size_at, component_sizes, faces

log = logging.getLogger(__name__)

CLAMP_WARN = 1e-12
CLAMP_FAIL = 1e-8
SUM_TOL = 1e-9


@dataclass(frozen=True)
class SizeDistribution:
    """w(n) for n = 1..n_max stored as mantissa * exp(log_scale)."""
    kind: str
    mantissa: np.ndarray
    log_scale: np.ndarray
    clamped: int = 0
    most_negative: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.mantissa)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)

    @property
    def values(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return self.mantissa * np.exp(self.log_scale)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.values)

    @property
    def deficit(self) -> float:
        return float(1.0 - self.values.sum())

    @property
    def uses_log_scale(self) -> bool:
        """True when some value is only representable as mantissa * exp(log_scale)."""
        with np.errstate(divide="ignore"):
            mag = np.log(np.abs(self.mantissa)) + self.log_scale
        return bool(np.any((self.mantissa != 0) & (mag < -708.0)))

    def __getitem__(self, n: int) -> float:
        return float(self.values[n - 1])


def finalize(kind: str, mant: np.ndarray, logs: np.ndarray) -> SizeDistribution:
    """Clamp round-off negatives and check the partial-sum bound."""
    mant = np.array(mant, float)
    logs = np.array(logs, float)
    with np.errstate(under="ignore", over="ignore"):
        vals = mant * np.exp(logs)
    neg = vals < 0
    worst = float(vals[neg].min()) if neg.any() else 0.0
    if worst < -CLAMP_FAIL:
        raise ComponentError(f"negative size probability {worst:.3e} exceeds round-off bound",
                             code="negative_mass")
    n_clamp = int(np.sum(vals < -CLAMP_WARN))
    if n_clamp:
        warnings.warn(f"clamped {n_clamp} negative values (most negative {worst:.3e})")
        log.warning("clamped %d negative values, most negative %.3e", n_clamp, worst)
    mant[neg] = 0.0
    total = float(np.sum(mant * np.exp(logs)))
    if total > 1 + SUM_TOL:
        raise ComponentError(f"partial sum {total!r} exceeds one", code="mass_excess")
    return SizeDistribution(kind, mant, logs, n_clamp, worst)


@dataclass(frozen=True)
class LatticeTable:
    """a[i, j] for i + j <= n_max - 1 (zero elsewhere)."""
    a: np.ndarray
    n_max: int

    def diagonal_sums(self) -> np.ndarray:
        n = self.n_max
        out = np.zeros(n)
        for s in range(n):
            i = np.arange(s + 1)
            out[s] = self.a[i, s - i].sum()
        return out    # entry s is w(s + 1)


def _require_directed(u: DegreeDistribution):
    if u.kind != "directed" or u.dims != 2:
        raise ComponentError("a directed (in, out) distribution is required", code="wrong_kind")


def _mean(u: DegreeDistribution) -> float:
    return u.mean(0)


def in_out_laws(u: DegreeDistribution, side: str) -> tuple[np.ndarray, np.ndarray]:
    """(root, branch) univariate laws for the out- or in-component search.

    For out-components (nodes reachable from the root) the root term is the
    out-marginal excess law and a branch is the out-degree of a node reached
    through one of its in-stubs. The in-side is the mirror image.
    """
    root = marginal_excess(u, side)
    other = "in" if side == "out" else "out"
    e = excess(u, other)
    branch = e.mass.sum(axis=e.coord)
    return root, branch


def in_out_components(u: DegreeDistribution, side: str, n_max: int) -> SizeDistribution:
    """h(n) = mu/(n-1) [root * branch^{*(n-1)}](n-2) for n > 1, h(1) = P(degree on side = 0).

    When the branch law equals the marginal excess law (for example
    independent Poisson in- and out-degrees) this is mu/(n-1) ũ^{*n}(n-2).
    """
    _require_directed(u)
    if side not in ("in", "out"):
        raise ComponentError(f"side must be 'in' or 'out', got {side!r}")
    if n_max < 1:
        raise ComponentError("n_max must be at least 1")
    mant = np.zeros(n_max)
    logs = np.zeros(n_max)
    ax = 1 if side == "out" else 0
    mant[0] = u.mass.take(0, axis=ax).sum()
    mu = _mean(u)
    if n_max > 1:
        if mu <= 0:
            raise ComponentError("no edges: mean degree is zero", code="no_edges")
        root, branch = in_out_laws(u, side)
        mant[1] = mu * root[0] * branch[0]
        if n_max > 2:
            F = direct_convolve(direct_convolve(root, branch), branch)
            m, lg = DiagonalProblem(F, [branch]).sums(n_max - 3)
            n = np.arange(3, n_max + 1)
            mant[2:] = m * mu / (n - 1)
            logs[2:] = lg
    return finalize(side, mant, logs)


def weak_factors(u: DegreeDistribution) -> list[np.ndarray]:
    """R = (u_out, u_in), paired with the in- and out-axes respectively."""
    return [excess(u, "out").mass, excess(u, "in").mass]


def weak_lattice(u: DegreeDistribution, n_max: int) -> LatticeTable:
    """Table of a(i, j), i + j <= n_max - 1, cell by cell."""
    _require_directed(u)
    return _lattice(u.mass, weak_factors(u), n_max)


def _lattice(U: np.ndarray, R: list, n_max: int) -> LatticeTable:
    a = np.zeros((n_max, n_max))
    a[0, 0] = U[0, 0]
    for face in faces(U, R):
        kmax = n_max - 1 - len(face.axes)
        if kmax < 0:
            continue
        cells = face.problem.cells(kmax)
        if face.axes == (0,):
            a[1:kmax + 2, 0] = cells
        elif face.axes == (1,):
            a[0, 1:kmax + 2] = cells
        else:
            a[1:kmax + 2, 1:kmax + 2] = cells
    return LatticeTable(a, n_max)


def weak_components(u: DegreeDistribution, n_max: int) -> SizeDistribution:
    """w(n) as the diagonal sums of a(i, j); w(1) = u(0,0)."""
    _require_directed(u)
    if n_max < 1:
        raise ComponentError("n_max must be at least 1")
    if n_max > 1 and _mean(u) <= 0:
        mant = np.zeros(n_max)
        mant[0] = 1.0
        return finalize("weak", mant, np.zeros(n_max))
    mant, logs = component_sizes(u.mass, weak_factors(u) if n_max > 1 else [], n_max)
    return finalize("weak", mant, logs)


class WeakEvaluator:
    """Single values w(n) with the n-independent preparation done once."""

    def __init__(self, u: DegreeDistribution, method: str = "explicit"):
        _require_directed(u)
        self.u = u
        self.faces = faces(u.mass, weak_factors(u), method)

    def __call__(self, n: int) -> float:
        m, lg = component_size_at(self.u.mass, None, n, prepared=self.faces)
        return m * math.exp(lg)


def weak_component_at(u: DegreeDistribution, n: int) -> float:
    """w(n) alone, in O(n^2 log n) work."""
    return WeakEvaluator(u)(n)
