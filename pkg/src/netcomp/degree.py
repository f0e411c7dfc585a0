"""Truncated multivariate degree distributions, their moments and excess laws.

Axis convention: for directed networks axis 0 counts incoming edges and
axis 1 counts outgoing edges. For multiplex networks axis i counts edges in
layer i.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DistributionError

log = logging.getLogger(__name__)

KINDS = ("directed", "multiplex")
MASS_TOL = 1e-9
BALANCE_TOL = 1e-6
AUTO_TAIL = 1e-10


@dataclass(frozen=True)
class DegreeDistribution:
    mass: np.ndarray
    kind: str = "directed"
    renorm_factor: float = 1.0
    tail_mass: float = 0.0

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        if m.ndim < 1:
            raise DistributionError("degree tensor needs at least one dimension")
        if self.kind not in KINDS:
            raise DistributionError(f"unknown kind {self.kind!r}")
        if not np.all(np.isfinite(m)):
            raise DistributionError("degree tensor has non-finite entries")
        if np.any(m < 0):
            raise DistributionError("degree tensor has negative entries")
        total = m.sum()
        if total == 0:
            raise DistributionError("degree tensor is identically zero")
        if abs(total - 1.0) > MASS_TOL:
            raise DistributionError(f"total mass {total!r} is not 1; renormalize explicitly")
        if self.kind == "directed":
            if m.ndim != 2:
                raise DistributionError("directed distributions are bivariate (in, out)")
            mu_in = axis_mean(m, 0)
            mu_out = axis_mean(m, 1)
            if abs(mu_in - mu_out) > BALANCE_TOL:
                raise DistributionError(
                    f"directed balance violated: mean in-degree {mu_in:.10g} "
                    f"vs mean out-degree {mu_out:.10g}",
                    code="unbalanced",
                )
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def dims(self) -> int:
        return self.mass.ndim

    @property
    def cutoffs(self) -> tuple:
        return tuple(s - 1 for s in self.mass.shape)

    def mean(self, axis: int) -> float:
        return axis_mean(self.mass, axis)

    def transpose(self, order: Sequence[int] | None = None) -> "DegreeDistribution":
        """Permute coordinates; for directed graphs this reverses every edge."""
        if order is None:
            order = tuple(reversed(range(self.dims)))
        return DegreeDistribution(np.transpose(self.mass, order).copy(), self.kind,
                                  self.renorm_factor, self.tail_mass)


@dataclass(frozen=True)
class ExcessDistribution:
    mass: np.ndarray
    coord: int
    mean: float   # mean of the source coordinate in the parent distribution


def axis_mean(m: np.ndarray, axis: int) -> float:
    k = np.arange(m.shape[axis]).reshape([-1 if a == axis else 1 for a in range(m.ndim)])
    return float((k * m).sum())


def index_weight(m: np.ndarray, axis: int) -> np.ndarray:
    """Multiply every coefficient by its index along ``axis``."""
    k = np.arange(m.shape[axis]).reshape([-1 if a == axis else 1 for a in range(m.ndim)])
    return m * k


def _coord(u: DegreeDistribution, coord) -> int:
    if isinstance(coord, str):
        if u.kind != "directed":
            raise DistributionError("named coordinates apply to directed distributions")
        try:
            return {"in": 0, "out": 1}[coord]
        except KeyError:
            raise DistributionError(f"unknown coordinate {coord!r}") from None
    coord = int(coord)
    if not 0 <= coord < u.dims:
        raise DistributionError(f"coordinate {coord} out of range")
    return coord


def excess(u: DegreeDistribution, coord) -> ExcessDistribution:
    """Size-biased, shifted law: e(.., k, ..) = (k+1) u(.., k+1, ..) / mean."""
    ax = _coord(u, coord)
    m = u.mass
    mu = axis_mean(m, ax)
    if mu <= 0:
        raise DistributionError(f"no edges along coordinate {ax}", code="no_edges")
    e = np.zeros_like(m)
    src = [slice(None)] * m.ndim
    dst = [slice(None)] * m.ndim
    src[ax] = slice(1, None)
    dst[ax] = slice(0, -1)
    e[tuple(dst)] = index_weight(m, ax)[tuple(src)] / mu
    return ExcessDistribution(e, ax, mu)


def marginal_excess(u: DegreeDistribution, side: str) -> np.ndarray:
    """Univariate excess law along one side of a directed distribution."""
    e = excess(u, side)
    other = 1 - e.coord
    return e.mass.sum(axis=other)


# ---------------------------------------------------------------- moments

@dataclass(frozen=True)
class MomentSet:
    """Partial moments up to total order 3 plus the derived mean/covariance shorthands.

    ``means[i]`` and ``covs[i]`` describe the law k_i u(k) / mu_i (size-biased
    along axis i); ``mu0``/``Sigma0`` describe u itself.
    """
    mu: Mapping[tuple, float]
    mu0: np.ndarray
    Sigma0: np.ndarray
    means: tuple = field(default=())
    covs: tuple = field(default=())

    @property
    def dims(self) -> int:
        return len(self.mu0)

    @property
    def mu1(self):
        return self.means[0]

    @property
    def mu2(self):
        return self.means[1]

    @property
    def Sigma1(self):
        return self.covs[0]

    @property
    def Sigma2(self):
        return self.covs[1]

    def __getitem__(self, idx):
        return self.mu[tuple(idx)]

    @classmethod
    def from_raw(cls, mu: Mapping[tuple, float]) -> "MomentSet":
        """Build the shorthands from raw moments keyed by multi-index."""
        mu = {tuple(int(x) for x in k): float(v) for k, v in mu.items()}
        d = len(next(iter(mu)))

        def unit(*axes):
            e = [0] * d
            for a in axes:
                e[a] += 1
            return tuple(e)

        def get(*axes):
            return mu.get(unit(*axes), 0.0)

        mu0 = np.array([get(i) for i in range(d)])
        S0 = np.array([[get(i, j) - mu0[i] * mu0[j] for j in range(d)] for i in range(d)])
        means, covs = [], []
        for s in range(d):
            ms = mu0[s]
            if ms > 0:
                m = np.array([get(s, i) for i in range(d)]) / ms
                c = np.array([[get(s, i, j) * ms - get(s, i) * get(s, j) for j in range(d)]
                              for i in range(d)]) / ms**2
            else:
                m = np.full(d, np.nan)
                c = np.full((d, d), np.nan)
            means.append(m)
            covs.append(c)
        return cls(mu, mu0, S0, tuple(means), tuple(covs))


def moments(u: DegreeDistribution | np.ndarray, order: int = 3) -> MomentSet:
    m = u.mass if isinstance(u, DegreeDistribution) else np.asarray(u, float)
    d = m.ndim
    grids = np.meshgrid(*[np.arange(s, dtype=float) for s in m.shape], indexing="ij")
    mu = {}
    for idx in itertools.product(range(order + 1), repeat=d):
        if sum(idx) > order:
            continue
        w = m
        for g, p in zip(grids, idx):
            if p:
                w = w * g**p
        mu[idx] = float(w.sum())
    ms = MomentSet.from_raw(mu)
    for S in (ms.Sigma0,) + tuple(ms.covs):
        if np.all(np.isfinite(S)) and np.any(np.diag(S) < -1e-12):
            raise DistributionError("negative variance in moment set")
    return ms


# ---------------------------------------------------------------- construction

def from_table(mass, kind: str = "directed", renormalize: bool = True,
               tail_mass: float = 0.0) -> DegreeDistribution:
    m = np.array(mass, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1)
    if np.any(m < 0):
        raise DistributionError("degree tensor has negative entries")
    total = m.sum()
    if not total > 0:
        raise DistributionError("degree tensor is identically zero")
    factor = 1.0
    if renormalize and total != 1.0:
        factor = 1.0 / total
        if abs(factor - 1) > MASS_TOL:
            log.info("renormalized degree tensor by factor %.17g", factor)
        m = m * factor
    return DegreeDistribution(m, kind, factor, tail_mass)


def _term_values(term: Mapping, grids: list, dims: int) -> np.ndarray:
    weight = float(term.get("weight", 1.0))
    shape = term.get("shape", "gaussian")
    x = np.stack(grids, axis=-1).astype(float)
    center = np.asarray(term.get("center", np.zeros(dims)), float)
    if center.shape != (dims,):
        raise DistributionError("mixture center has the wrong length")
    dx = x - center
    if shape == "gaussian":
        q = np.asarray(term.get("decay", 1.0), float)
        if q.ndim == 0:
            expo = q * np.sum(dx**2, axis=-1)
        elif q.ndim == 1:
            expo = np.sum(q * dx**2, axis=-1)
        else:
            expo = np.einsum("...i,ij,...j->...", dx, q, dx)
        vals = np.exp(-expo)
    elif shape == "exponential":
        lam = np.broadcast_to(np.asarray(term.get("decay", 1.0), float), (dims,))
        vals = np.exp(-np.sum(lam * dx, axis=-1))
    elif shape == "poisson":
        lam = np.broadcast_to(np.asarray(term["rate"], float), (dims,))
        logp = np.zeros(x.shape[:-1])
        for i in range(dims):
            k = x[..., i]
            if lam[i] > 0:
                logp = logp + k * math.log(lam[i]) - lam[i] - gammaln(k + 1)
            else:
                logp = logp + np.where(k == 0, 0.0, -np.inf)
        vals = np.exp(logp)
    else:
        raise DistributionError(f"unknown mixture shape {shape!r}")
    at = term.get("at")
    if at is not None:
        if len(at) != dims:
            raise DistributionError("'at' must list one entry per coordinate (negative or null = free)")
        mask = np.ones(x.shape[:-1], bool)
        for i, a in enumerate(at):
            if a is not None and int(a) >= 0:
                mask &= grids[i] == int(a)
        vals = np.where(mask, vals, 0.0)
    return weight * vals


def _mixture_on(terms, shape) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    out = np.zeros(shape)
    for t in terms:
        out += _term_values(t, grids, len(shape))
    return out


def _outer_mass(terms, cut, max_cells: int = 20_000_000) -> float:
    """Mass of the untruncated mixture, by growing the grid until it settles."""
    ext = list(cut)
    prev = _mixture_on(terms, tuple(c + 1 for c in ext)).sum()
    while True:
        ext = [int(math.ceil(1.5 * c)) + 2 for c in ext]
        if math.prod(c + 1 for c in ext) > max_cells:
            return prev
        total = _mixture_on(terms, tuple(c + 1 for c in ext)).sum()
        if total - prev <= 1e-14 * total:
            return total
        prev = total


def _auto_cutoff(terms, dims: int, start: int = 8, limit: int = 4096) -> tuple[int, float]:
    K = start
    while True:
        K2 = int(math.ceil(1.5 * K))
        inner = _mixture_on(terms, (K + 1,) * dims).sum()
        outer = _mixture_on(terms, (K2 + 1,) * dims).sum()
        tail = 1.0 - inner / outer if outer > 0 else 0.0
        if tail < AUTO_TAIL or K2 > limit:
            return K, max(tail, 0.0)
        K = K2


def build_distribution(spec: Mapping | str | Path) -> DegreeDistribution:
    """Evaluate a distribution spec (mapping or JSON/TOML file) on its truncated grid.

    Recognized keys: ``kind``, ``dims``, ``cutoffs`` and exactly one of
    ``table`` (dense nested list or list of {index, p}), ``mixture`` (list of
    terms) or ``empirical`` (path to an edge list).
    """
    if not isinstance(spec, Mapping):
        spec = load_spec(spec)
    kind = spec.get("kind", "directed")
    sources = [k for k in ("table", "mixture", "empirical") if k in spec]
    if len(sources) != 1:
        raise DistributionError("spec needs exactly one of table, mixture, empirical")
    src = sources[0]
    if src == "table":
        table = spec["table"]
        if table and isinstance(table, list) and isinstance(table[0], Mapping):
            dims = int(spec.get("dims", len(table[0]["index"])))
            shape = [0] * dims
            for e in table:
                for i, v in enumerate(e["index"]):
                    shape[i] = max(shape[i], int(v) + 1)
            if "cutoffs" in spec:
                shape = [max(s, c + 1) for s, c in zip(shape, _cutoffs(spec["cutoffs"], dims))]
            m = np.zeros(shape)
            for e in table:
                m[tuple(int(v) for v in e["index"])] += float(e["p"])
        else:
            m = np.array(table, dtype=float)
        return from_table(m, kind)
    if src == "mixture":
        terms = spec["mixture"]
        dims = int(spec.get("dims", 2))
        if "cutoffs" in spec:
            cut = _cutoffs(spec["cutoffs"], dims)
            inner = _mixture_on(terms, tuple(c + 1 for c in cut))
            outer = _outer_mass(terms, cut)
            tail = 1.0 - inner.sum() / outer if outer > 0 else 0.0
        else:
            K, tail = _auto_cutoff(terms, dims)
            inner = _mixture_on(terms, (K + 1,) * dims)
            outer = _outer_mass(terms, (K,) * dims)
        # scale to the untruncated mass first so the factor reports truncation alone
        return from_table(inner / outer, kind, tail_mass=max(tail, 0.0))
    from .ingest import load_edges, empirical_degree_distribution
    path = Path(spec["empirical"])
    base = spec.get("_base")
    if base is not None and not path.is_absolute():
        path = Path(base) / path
    edges = load_edges(path, directed=(kind == "directed"), layers=spec.get("layers"))
    cutoff = spec.get("cutoffs", 1000)
    return empirical_degree_distribution(edges, cutoff)


def _cutoffs(c, dims) -> tuple:
    if isinstance(c, (int, float)):
        return (int(c),) * dims
    c = tuple(int(x) for x in c)
    if len(c) != dims:
        raise DistributionError("cutoffs length does not match dims")
    return c


def load_spec(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DistributionError(f"spec not found: {path}", code="spec_not_found")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        spec = json.loads(text)
    else:
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        try:
            spec = tomllib.loads(text)
        except tomllib.TOMLDecodeError:
            spec = json.loads(text)
    spec["_base"] = str(path.parent)
    return spec
