"""Edge-list ingestion: parsing, empirical degree laws and census files.

Accepted lines are ``src dst`` or ``src dst layer`` separated by whitespace or
commas. Lines starting with '#' or '%' are comments; a first non-comment line
that does not parse as an edge is taken as a header. A comment of the form
``# nodes: N`` declares N nodes with integer ids 0..N-1, which keeps isolated
nodes that an edge list cannot otherwise represent.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .degree import BALANCE_TOL, DegreeDistribution, axis_mean, from_table
from .errors import IngestError
from .simulator import ComponentCensus, MultiGraph, census_from_sizes, weak_census

NODES_RE = re.compile(r"^[#%]\s*nodes\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)
DEFAULT_CUTOFF = 1000


@dataclass
class EdgeList:
    src: np.ndarray           # remapped node ids
    dst: np.ndarray
    layer: np.ndarray         # layer ids 1..n_layers (all ones for directed input)
    directed: bool
    n_layers: int
    node_ids: np.ndarray      # original id of every remapped node

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def to_graph(self) -> MultiGraph:
        N = self.n_nodes
        if self.directed:
            deg = np.column_stack([np.bincount(self.dst, minlength=N),
                                   np.bincount(self.src, minlength=N)])
            return MultiGraph(N, "directed", [self.src], [self.dst], deg)
        src, dst, cols = [], [], []
        for k in range(1, self.n_layers + 1):
            sel = self.layer == k
            s, d = self.src[sel], self.dst[sel]
            src.append(s)
            dst.append(d)
            cols.append(np.bincount(s, minlength=N) + np.bincount(d, minlength=N))
        return MultiGraph(N, "multiplex", src, dst, np.column_stack(cols))


def _is_int(t: str) -> bool:
    try:
        int(t)
        return True
    except ValueError:
        return False


def _split(line: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", line.strip()) if t]


def load_edges(path, directed: bool = True, layers: int | None = None) -> EdgeList:
    """Parse an edge list; multi-edges are kept."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"edge list not found: {path}", code="not_found")
    src, dst, lay = [], [], []
    declared = None
    seen_data = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line[0] in "#%":
                m = NODES_RE.match(line)
                if m:
                    declared = int(m.group(1))
                continue
            tok = _split(line)
            ok = len(tok) in (2, 3)
            if ok and len(tok) == 3:
                try:
                    lv = int(tok[2])
                except ValueError:
                    ok = False
            if not ok:
                if not seen_data:
                    seen_data = True        # header line
                    continue
                raise IngestError(f"line {lineno}: expected 'src dst [layer]', got {line!r}",
                                  code="malformed_line")
            seen_data = True
            if len(tok) == 3:
                if layers is not None and not 1 <= lv <= layers:
                    raise IngestError(f"line {lineno}: layer {lv} out of range 1..{layers}",
                                      code="layer_out_of_range")
                if lv < 1:
                    raise IngestError(f"line {lineno}: layer {lv} out of range", code="layer_out_of_range")
            else:
                lv = 1
            src.append(tok[0])
            dst.append(tok[1])
            lay.append(lv)
    n_layers = int(layers) if layers is not None else (max(lay) if lay else 1)
    if directed and n_layers != 1:
        raise IngestError("directed edge lists carry no layer column", code="layer_out_of_range")
    if src and not _is_int(src[0]) and not _is_int(dst[0]) \
            and all(_is_int(t) for t in src[1:] + dst[1:]):
        src, dst, lay = src[1:], dst[1:], lay[1:]       # textual header over integer ids
    ids, inv = _remap(src + dst, declared)
    E = len(src)
    return EdgeList(inv[:E].astype(np.int64), inv[E:].astype(np.int64),
                    np.asarray(lay, dtype=np.int64), directed, n_layers, ids)


def _remap(tokens: list[str], declared: int | None):
    if declared is not None:
        try:
            vals = np.array([int(t) for t in tokens], dtype=np.int64)
        except ValueError:
            raise IngestError("a node count was declared but ids are not integers",
                              code="malformed_line") from None
        if len(vals) and (vals.min() < 0 or vals.max() >= declared):
            raise IngestError(f"node id outside the declared range 0..{declared - 1}",
                              code="malformed_line")
        return np.arange(declared), vals
    if not tokens:
        return np.zeros(0, dtype=object), np.zeros(0, dtype=np.int64)
    try:
        vals = np.array([int(t) for t in tokens], dtype=np.int64)
        ids, inv = np.unique(vals, return_inverse=True)
    except ValueError:
        ids, inv = np.unique(np.array(tokens, dtype=object), return_inverse=True)
    return ids, inv


def write_edges(g: MultiGraph, path):
    """Edge-list dump of a sampled graph; directed graphs omit the layer column."""
    e = g.edge_array()
    with open(Path(path), "w") as fh:
        fh.write(f"# nodes: {g.n_nodes}\n")
        if g.kind == "directed":
            np.savetxt(fh, e[:, :2], fmt="%d")
        else:
            np.savetxt(fh, e, fmt="%d")


def degree_sequence(e: EdgeList) -> np.ndarray:
    """(n_nodes, dims) degrees: (in, out) for directed, per layer otherwise."""
    return e.to_graph().degrees


def empirical_degree_distribution(e: EdgeList, cutoff=DEFAULT_CUTOFF) -> DegreeDistribution:
    """Normalized joint degree histogram truncated at ``cutoff`` per coordinate.

    Nodes with a degree above the cutoff are dropped and their share is
    reported as ``tail_mass``. For directed input, truncation can unbalance the
    mean in- and out-degrees; the gap is closed by adding the missing share at
    the unit cell of the short side, and that share is included in ``tail_mass``.
    """
    if e.n_nodes == 0 or e.n_edges == 0:
        raise IngestError("empty graph", code="empty")
    deg = degree_sequence(e)
    dims = deg.shape[1]
    cut = np.broadcast_to(np.asarray(cutoff, dtype=np.int64), (dims,))
    keep = np.all(deg <= cut, axis=1)
    tail = 1.0 - keep.mean()
    d = deg[keep]
    if len(d) == 0:
        raise IngestError("every node exceeds the degree cutoff", code="empty")
    shape = tuple(int(x) + 1 for x in d.max(axis=0))
    hist = np.zeros(shape)
    np.add.at(hist, tuple(d.T), 1.0)
    hist /= hist.sum()
    if e.directed:
        gap = axis_mean(hist, 1) - axis_mean(hist, 0)     # out minus in
        if abs(gap) > 0.1 * BALANCE_TOL:
            cell = (1, 0) if gap > 0 else (0, 1)
            shape = tuple(max(s, 2) for s in hist.shape)
            h2 = np.zeros(shape)
            h2[tuple(slice(0, s) for s in hist.shape)] = hist
            h2[cell] += abs(gap)
            hist = h2
            tail += abs(gap) / (1 + abs(gap))
    return from_table(hist, "directed" if e.directed else "multiplex", tail_mass=float(tail))


def weak_census_edges(e: EdgeList) -> ComponentCensus:
    return weak_census(e.to_graph())


def expected_counts(w: np.ndarray, n_nodes: int) -> np.ndarray:
    """Expected number of components of each size, N w(n) / n, for w indexed from n = 1."""
    n = np.arange(1, len(w) + 1)
    return n_nodes * np.asarray(w) / n


__all__ = ["EdgeList", "load_edges", "write_edges", "empirical_degree_distribution",
           "weak_census_edges", "expected_counts", "degree_sequence", "census_from_sizes"]
