"""Configuration-model sampling and component censuses.

Graphs keep self-loops and multi-edges. Degree sequences are drawn i.i.d.
from the degree law and repaired so that stubs can be paired: in/out balance
for directed graphs, an even stub count per layer for multiplex graphs.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from .degree import DegreeDistribution
from .errors import SimulationError

log = logging.getLogger(__name__)

MAX_RESAMPLE = 1000
MAX_REDRAW = 1000
DEFAULT_ROOTS = 100_000
DEFAULT_CEILING = 10_000


@dataclass
class MultiGraph:
    """Directed graph (one edge array, src -> dst) or multiplex graph (one per layer)."""
    n_nodes: int
    kind: str
    src: list
    dst: list
    degrees: np.ndarray     # (n_nodes, dims)

    @property
    def n_layers(self) -> int:
        return len(self.src)

    @property
    def n_edges(self) -> int:
        return int(sum(len(s) for s in self.src))

    def edge_array(self) -> np.ndarray:
        """All edges as rows (src, dst, layer) with layers numbered from 1."""
        rows = [np.column_stack([s, d, np.full(len(s), i + 1)])
                for i, (s, d) in enumerate(zip(self.src, self.dst))]
        return np.concatenate(rows) if rows else np.zeros((0, 3), int)


@dataclass
class ComponentCensus:
    """c(n) = number of components (or sampled roots) of size n, index n."""
    kind: str
    counts: np.ndarray
    n_nodes: int
    samples: int
    largest: int = 0
    overflow: int = 0           # roots whose reach hit the size ceiling
    meta: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return len(self.counts) - 1

    @property
    def rooted(self) -> bool:
        return self.kind in ("in", "out")

    @property
    def largest_fraction(self) -> float:
        return self.largest / self.n_nodes if self.n_nodes else 0.0

    def probability(self) -> np.ndarray:
        """Node-weighted size distribution w(n), index n."""
        n = np.arange(len(self.counts))
        if self.rooted:
            return self.counts / self.samples
        return n * self.counts / self.n_nodes

    def standard_error(self, expected: np.ndarray | None = None) -> np.ndarray:
        """Sampling standard error of ``probability()``, index n.

        With ``expected`` (a model w(n), index n) the error is the one implied by
        the model, which stays meaningful where nothing was observed.
        """
        if expected is not None:
            e = np.asarray(expected, float)
            if self.rooted:
                return np.sqrt(e * (1 - e) / self.samples)
            # component counts are close to Poisson; each carries n nodes
            return np.sqrt(np.arange(len(e)) * e / self.n_nodes)
        n = np.arange(len(self.counts))
        if self.rooted:
            p = self.counts / self.samples
            return np.sqrt(p * (1 - p) / self.samples)
        return n * np.sqrt(self.counts) / self.n_nodes

    def giant_fraction(self, threshold: int) -> float:
        """Share of nodes in components larger than ``threshold``."""
        if self.rooted:
            return (self.overflow + self.counts[threshold + 1:].sum()) / self.samples
        n = np.arange(len(self.counts))
        return float((n * self.counts)[threshold + 1:].sum() / self.n_nodes)

    def write_csv(self, path, n_max: int | None = None):
        write_census_csv(self, path, n_max)


# ---------------------------------------------------------------- sampling

def _draw_counts(u: DegreeDistribution, count: int, rng) -> np.ndarray:
    p = u.mass.ravel()
    return rng.multinomial(count, p / p.sum())


def _sequence(u: DegreeDistribution, counts: np.ndarray, rng) -> np.ndarray:
    """i.i.d. sequence with the given cell counts: repeat cells, then shuffle."""
    flat = np.repeat(np.arange(counts.size), counts)
    rng.shuffle(flat)
    return np.column_stack(np.unravel_index(flat, u.mass.shape)).astype(np.int64)


def _cells(u: DegreeDistribution):
    idx = np.argwhere(u.mass > 0)
    return idx, u.mass[tuple(idx.T)]


def _redraw_to_close(deg, gap_fn, target_fn, u, rng, what):
    """Redraw one node from u conditioned on closing the stub gap."""
    idx, p = _cells(u)
    for _ in range(MAX_REDRAW):
        i = int(rng.integers(len(deg)))
        want = target_fn(deg[i])
        ok = gap_fn(idx) == want
        if not ok.any():
            continue
        q = p[ok] / p[ok].sum()
        deg[i] = idx[ok][rng.choice(len(q), p=q)]
        return deg
    raise SimulationError(f"could not repair {what} after {MAX_REDRAW} redraws",
                          code="repair_failed")


def _close_balance(deg, u, rng):
    """Successive conditioned redraws until sum(k) == sum(l).

    A redrawn node takes a cell from u conditioned on moving the gap toward
    zero without overshooting it, or on closing it exactly when one cell can.
    Drawing from u rather than from the largest shifts keeps the repaired
    sequence close to the degree law.
    """
    idx, p = _cells(u)
    cell_gap = idx[:, 0] - idx[:, 1]
    g = int((deg[:, 0] - deg[:, 1]).sum())
    for _ in range(MAX_REDRAW + 100 * abs(g)):
        if g == 0:
            return deg
        i = int(rng.integers(len(deg)))
        old = int(deg[i, 0] - deg[i, 1])
        change = cell_gap - old
        exact = change == -g
        if exact.any():
            ok = exact
        else:
            ok = (np.sign(change) == -np.sign(g)) & (np.abs(change) < abs(g))
            if not ok.any():
                continue
        q = p[ok] / p[ok].sum()
        deg[i] = idx[ok][rng.choice(len(q), p=q)]
        g += int(deg[i, 0] - deg[i, 1]) - old
    raise SimulationError("could not repair in/out balance", code="repair_failed")


def sample_degrees(u: DegreeDistribution, N: int, rng) -> tuple[np.ndarray, dict]:
    if N < 1:
        raise SimulationError("node count must be at least 1")
    info = {"resamples": 0, "redrawn": False}
    # the stub totals depend on the cell counts only, so resampling works on
    # multinomial counts and the sequence is built once
    cells = np.stack(np.unravel_index(np.arange(u.mass.size), u.mass.shape), axis=1)
    if u.kind == "directed":
        cell_gap = cells[:, 0] - cells[:, 1]

        def bad(c):
            return int(c @ cell_gap) != 0
    else:
        def bad(c):
            return bool(np.any((c @ cells) % 2))
    for t in range(MAX_RESAMPLE):
        counts = _draw_counts(u, N, rng)
        if not bad(counts):
            info["resamples"] = t
            return _sequence(u, counts, rng), info
    info["resamples"] = MAX_RESAMPLE
    info["redrawn"] = True
    deg = _sequence(u, counts, rng)
    if u.kind == "directed":
        return _close_balance(deg, u, rng), info
    bits = 1 << np.arange(deg.shape[1])

    def code(d):
        return (d % 2) @ bits
    odd = int(code(deg.sum(axis=0)))
    # one redraw flips exactly the odd layers
    deg = _redraw_to_close(deg, code, lambda d: int(code(d)) ^ odd, u, rng, "layer parity")
    return deg, info


def sample_graph(u: DegreeDistribution, N: int, seed=None) -> MultiGraph:
    """Configuration-model graph on N nodes with i.i.d. degrees from u."""
    rng = np.random.default_rng(seed)
    deg, info = sample_degrees(u, N, rng)
    nodes = np.arange(N)
    if u.kind == "directed":
        ins = np.repeat(nodes, deg[:, 0])
        outs = np.repeat(nodes, deg[:, 1])
        rng.shuffle(ins)
        g = MultiGraph(N, "directed", [outs], [ins], deg)
    else:
        src, dst = [], []
        for layer in range(deg.shape[1]):
            stubs = np.repeat(nodes, deg[:, layer])
            rng.shuffle(stubs)
            src.append(stubs[0::2])
            dst.append(stubs[1::2])
        g = MultiGraph(N, "multiplex", src, dst, deg)
    if info["redrawn"]:
        log.info("degree sequence repaired by a conditioned redraw")
    return g


# ---------------------------------------------------------------- censuses

def _adjacency(g: MultiGraph, reverse: bool = False) -> csr_matrix:
    src = np.concatenate(g.src) if g.src else np.zeros(0, int)
    dst = np.concatenate(g.dst) if g.dst else np.zeros(0, int)
    if reverse:
        src, dst = dst, src
    data = np.ones(len(src), dtype=np.int32)
    return coo_matrix((data, (src, dst)), shape=(g.n_nodes, g.n_nodes)).tocsr()


def component_labels(g: MultiGraph) -> np.ndarray:
    _, labels = connected_components(_adjacency(g), directed=True, connection="weak")
    return labels


def census_from_sizes(kind: str, sizes: np.ndarray, n_nodes: int) -> ComponentCensus:
    counts = np.bincount(sizes, minlength=2)
    counts[0] = 0
    return ComponentCensus(kind, counts, n_nodes, int(len(sizes)),
                           largest=int(sizes.max()) if len(sizes) else 0)


def weak_census(g: MultiGraph) -> ComponentCensus:
    """Exact component sizes ignoring edge direction and merging all layers."""
    labels = component_labels(g)
    sizes = np.bincount(labels)
    kind = "weak" if g.kind == "directed" else "multilayer"
    return census_from_sizes(kind, sizes, g.n_nodes)


@numba.njit(cache=True)
def _reach_sizes(indptr, indices, roots, ceiling, n_nodes):
    out = np.empty(len(roots), np.int64)
    mark = np.zeros(n_nodes, np.int64)      # stamp = root position + 1
    queue = np.empty(ceiling + 1, np.int64)
    for r in range(len(roots)):
        stamp = r + 1
        head = 0
        tail = 1
        queue[0] = roots[r]
        mark[roots[r]] = stamp
        full = False
        while head < tail and not full:
            v = queue[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                if mark[w] != stamp:
                    mark[w] = stamp
                    if tail > ceiling - 1:
                        full = True
                        break
                    queue[tail] = w
                    tail += 1
        out[r] = ceiling + 1 if full else tail
    return out


def in_out_census(g: MultiGraph, side: str, sample_roots: int = DEFAULT_ROOTS, seed=None,
                  ceiling: int = DEFAULT_CEILING) -> ComponentCensus:
    """Sizes of in- or out-components of uniformly sampled roots.

    The out-component of a root is the set reachable from it along edges, the
    in-component the set reaching it. Reaches above ``ceiling`` are counted as
    overflow and left out of the counts.
    """
    if g.kind != "directed":
        raise SimulationError("in/out census needs a directed graph", code="wrong_kind")
    if side not in ("in", "out"):
        raise SimulationError(f"side must be 'in' or 'out', got {side!r}")
    rng = np.random.default_rng(seed)
    roots = rng.integers(0, g.n_nodes, size=sample_roots)
    adj = _adjacency(g, reverse=(side == "in"))
    sizes = _reach_sizes(adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
                         roots.astype(np.int64), int(ceiling), g.n_nodes)
    over = sizes > ceiling
    counts = np.bincount(sizes[~over], minlength=2)
    counts[0] = 0
    return ComponentCensus(side, counts, g.n_nodes, int(sample_roots),
                           largest=int(sizes[~over].max()) if (~over).any() else 0,
                           overflow=int(over.sum()), meta={"ceiling": ceiling})


def degree_histogram(g: MultiGraph, shape) -> np.ndarray:
    """Counts of nodes per degree cell, clipped to ``shape``."""
    d = np.minimum(g.degrees, np.asarray(shape) - 1)
    flat = np.ravel_multi_index(tuple(d.T), shape)
    return np.bincount(flat, minlength=math.prod(shape)).reshape(shape)


def write_census_csv(c: ComponentCensus, path, n_max: int | None = None):
    p = c.probability()
    top = c.n_max if n_max is None else min(n_max, c.n_max)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "count", "node_weighted_probability"])
        for n in range(1, top + 1):
            w.writerow([n, int(c.counts[n]), f"{p[n]:.17g}"])
