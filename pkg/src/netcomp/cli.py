"""Command line: exact sizes, asymptotes, simulation, ingestion and comparison.

Data goes to standard output (or --out); errors go to standard error as one
JSON object {"error": {"code", "message", "module"}}.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import CRITICAL_TOL, asymptote_for, criticality
from .degree import DegreeDistribution, build_distribution, moments
from .directed import SizeDistribution, in_out_components, weak_components
from .errors import NetcompError
from .ingest import DEFAULT_CUTOFF, empirical_degree_distribution, load_edges
from .multiplex import multiplex_components, two_layer_components
from .simulator import (DEFAULT_CEILING, DEFAULT_ROOTS, ComponentCensus, in_out_census,
                        sample_graph, weak_census)

log = logging.getLogger("netcomp")

DEFAULTS = {
    "nmax": 100,
    "nodes": 1_000_000,
    "seed": 0,
    "format": "csv",
    "tolerance": CRITICAL_TOL,
    "roots": DEFAULT_ROOTS,
    "ceiling": DEFAULT_CEILING,
    "cutoff": DEFAULT_CUTOFF,
    "z": 3.0,
    "min_prob": 1e-4,
    "asymptote_nmax": 2000,
}

THEORY_TO_CENSUS = {"weak": "weak", "multiplex": "multilayer", "in": "in", "out": "out"}


class CliError(NetcompError):
    code = "usage"
    module = "cli"


def fmt(x) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------- helpers

def load_distribution(path) -> DegreeDistribution:
    if path is None:
        raise CliError("--spec is required", code="missing_spec")
    return build_distribution(path)


def default_kind(u: DegreeDistribution) -> str:
    return "weak" if u.kind == "directed" else "multiplex"


def exact_sizes(u: DegreeDistribution, kind: str, n_max: int) -> SizeDistribution:
    if kind in ("in", "out"):
        return in_out_components(u, kind, n_max)
    if kind == "weak":
        return weak_components(u, n_max)
    if kind == "multiplex":
        if u.kind != "multiplex":
            raise CliError("multiplex sizes need a multiplex distribution", code="kind_mismatch")
        return two_layer_components(u, n_max) if u.dims == 2 else multiplex_components(u, n_max)
    raise CliError(f"unknown component kind {kind!r}")


def simulate_census(u, kind, nodes, seed, roots, ceiling) -> ComponentCensus:
    g = sample_graph(u, nodes, seed)
    if kind in ("in", "out"):
        return in_out_census(g, kind, roots, seed, ceiling)
    return weak_census(g)


def open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_rows(header, rows, out, form):
    fh, close = open_out(out)
    try:
        if form == "json":
            cols = {h: [] for h in header}
            for r in rows:
                for h, v in zip(header, r):
                    cols[h].append(v)
            json.dump(cols, fh)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) if isinstance(v, float) else v for v in r])
    finally:
        if close:
            fh.close()


def census_rows(c: ComponentCensus):
    p = c.probability()
    return [(n, int(c.counts[n]), float(p[n])) for n in range(1, c.n_max + 1)]


def write_census(c: ComponentCensus, out, form):
    header = ["n", "count", "node_weighted_probability"]
    if form == "json":
        write_rows(header, census_rows(c), out, form)
        return
    fh, close = open_out(out)
    try:
        fh.write(f"# kind={c.kind} nodes={c.n_nodes} samples={c.samples} overflow={c.overflow}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n, cnt, p in census_rows(c):
            w.writerow([n, cnt, fmt(p)])
    finally:
        if close:
            fh.close()


def read_census(path) -> ComponentCensus:
    path = Path(path)
    if not path.exists():
        raise CliError(f"census not found: {path}", code="census_not_found")
    meta = {}
    lines = path.read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for part in line[1:].split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(body))
    if "kind" not in meta or "nodes" not in meta:
        raise CliError("census file lacks its '# kind=... nodes=...' line", code="bad_census")
    n = np.array([int(r["n"]) for r in rows], dtype=int)
    counts = np.zeros((n.max() if len(n) else 0) + 1, dtype=np.int64)
    counts[n] = [int(r["count"]) for r in rows]
    return ComponentCensus(meta["kind"], counts, int(meta["nodes"]), int(meta.get("samples", 0)),
                           overflow=int(meta.get("overflow", 0)))


def slope_report(params, n_max: int) -> dict:
    lo = max(10, n_max // 10)
    n = np.arange(lo, n_max + 1, dtype=float)
    lw = params.log_value(n)
    rate = params.constants.get("E1", params.constants.get("C2", 0.0))
    ok = np.isfinite(lw)
    if ok.sum() < 2:
        return {"window": [lo, n_max], "transient_slope": None}
    slope = np.polyfit(np.log(n[ok]), lw[ok] + rate * n[ok], 1)[0]
    return {"window": [lo, n_max], "transient_slope": float(slope), "decay_rate": float(rate)}


# ---------------------------------------------------------------- commands

def cmd_compute(args) -> int:
    u = load_distribution(args.spec)
    kind = args.kind
    nmax = args.nmax if args.nmax is not None else DEFAULTS["nmax"]
    if nmax < 1:
        raise CliError("--nmax must be at least 1")
    sd = exact_sizes(u, kind, nmax)
    vals = sd.values
    cum = np.cumsum(vals)
    header = ["n", "w", "cumulative", "deficit"]
    logcols = sd.uses_log_scale
    if logcols:
        header += ["mantissa", "log_scale"]
    rows = []
    for i in range(nmax):
        r = [i + 1, float(vals[i]), float(cum[i]), float(1.0 - cum[i])]
        if logcols:
            r += [float(sd.mantissa[i]), float(sd.log_scale[i])]
        rows.append(r)
    write_rows(header, rows, args.out, args.format)
    return 0


def cmd_asymptote(args) -> int:
    u = load_distribution(args.spec)
    kind = args.kind or default_kind(u)
    params = asymptote_for(u, kind)
    m = moments(u)
    report = params.as_dict()
    if u.kind == "directed":
        crit = criticality(m, "directed", args.tolerance)
    else:
        crit = criticality(m, "two_layer", args.tolerance) if u.dims == 2 else None
    if crit is not None:
        report["criterion"] = {"value": crit.value, "classification": crit.classification,
                               "caveat": crit.caveat}
    nmax = args.nmax if args.nmax is not None else DEFAULTS["asymptote_nmax"]
    report["slope"] = slope_report(params, nmax)
    report["diagnostics"].pop("criterion", None)
    print(json.dumps(report, default=float))
    if args.out:
        n = np.arange(2, nmax + 1)
        write_rows(["n", "w_inf"], [(int(k), float(v)) for k, v in zip(n, params(n))],
                   args.out, args.format)
    return 0


def cmd_simulate(args) -> int:
    u = load_distribution(args.spec)
    kind = args.kind or default_kind(u)
    if kind in ("in", "out") and u.kind != "directed":
        raise CliError("in/out censuses need a directed distribution", code="kind_mismatch")
    nodes = args.nodes if args.nodes is not None else DEFAULTS["nodes"]
    c = simulate_census(u, kind, nodes, args.seed, args.roots, args.ceiling)
    write_census(c, args.out, args.format)
    return 0


def cmd_ingest(args) -> int:
    directed = args.layers is None
    e = load_edges(args.edges, directed=directed, layers=args.layers)
    u = empirical_degree_distribution(e, args.cutoff)
    idx = np.argwhere(u.mass > 0)
    spec = {"kind": u.kind, "dims": u.dims,
            "table": [{"index": [int(x) for x in i], "p": float(u.mass[tuple(i)])} for i in idx]}
    summary = {"nodes": e.n_nodes, "edges": e.n_edges, "layers": e.n_layers,
               "kind": u.kind, "tail_mass": u.tail_mass, "cutoffs": list(u.cutoffs)}
    if args.out:
        Path(args.out).write_text(json.dumps(spec, indent=1) + "\n")
    else:
        summary["spec"] = spec
    if args.census:
        write_census(weak_census(e.to_graph()), args.census, "csv")
    print(json.dumps(summary))
    return 0


def cmd_compare(args) -> int:
    u = load_distribution(args.spec)
    kind = args.kind or default_kind(u)
    want = THEORY_TO_CENSUS[kind]
    if args.census:
        c = read_census(args.census)
        if c.kind != want:
            raise CliError(f"cannot compare {kind} theory with a {c.kind} census",
                           code="kind_mismatch")
    else:
        nodes = args.nodes if args.nodes is not None else DEFAULTS["nodes"]
        c = simulate_census(u, kind, nodes, args.seed, args.roots, args.ceiling)
    nmax = args.nmax if args.nmax is not None else max(DEFAULTS["nmax"], min(c.n_max, 2000))
    exact = exact_sizes(u, kind, nmax).values
    try:
        asym = asymptote_for(u, kind)
    except NetcompError as err:
        asym = None
        log.info("no asymptote: %s", err.message)
    p = np.zeros(nmax + 1)
    top = min(nmax, c.n_max)
    p[1:top + 1] = c.probability()[1:top + 1]
    se = c.standard_error(np.r_[0.0, exact])
    rows, worst, checked, failed = [], 0.0, 0, []
    for n in range(1, nmax + 1):
        w = float(exact[n - 1])
        rows.append((n, "exact", w, "", ""))
        if asym is not None and n > 1:
            rows.append((n, "asymptote", float(asym(n)), "", ""))
        s = float(se[n])
        z = (float(p[n]) - w) / s if s > 0 else (0.0 if p[n] == w else math.inf)
        rows.append((n, "empirical", float(p[n]), s, z))
        if w > args.min_prob:
            checked += 1
            worst = max(worst, abs(z))
            if abs(z) > args.z:
                failed.append(n)
    if args.out:
        write_rows(["n", "source", "value", "stderr", "z"], rows, args.out, "csv")
    summary = {"kind": kind, "census_kind": c.kind, "nodes": c.n_nodes, "samples": c.samples,
               "checked": checked, "max_abs_z": worst, "threshold": args.z,
               "failed_n": failed, "pass": not failed}
    print(json.dumps(summary))
    return 0 if not failed else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="degree distribution spec (TOML or JSON)")
    common.add_argument("--nmax", type=int, help="largest component size")
    common.add_argument("--nodes", type=int, help="simulated node count")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default=DEFAULTS["format"])
    common.add_argument("--tolerance", type=float, default=DEFAULTS["tolerance"],
                        help="criterion magnitude treated as critical")
    common.add_argument("--roots", type=int, default=DEFAULTS["roots"],
                        help="sampled roots for in/out censuses")
    common.add_argument("--ceiling", type=int, default=DEFAULTS["ceiling"],
                        help="largest in/out reach counted as finite")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="netcomp", description=__doc__.splitlines()[0])
    p.add_argument("--explain", action="store_true", help="print all defaults and exit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("compute", parents=[common], help="exact size distribution")
    c.add_argument("kind", choices=("in", "out", "weak", "multiplex"))
    c.set_defaults(func=cmd_compute)

    a = sub.add_parser("asymptote", parents=[common], help="asymptote constants and curve")
    a.add_argument("--kind", choices=("in", "out", "weak", "multiplex"))
    a.set_defaults(func=cmd_asymptote)

    s = sub.add_parser("simulate", parents=[common], help="configuration-model census")
    s.add_argument("--kind", choices=("in", "out", "weak", "multiplex"))
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("ingest", parents=[common], help="edge list to degree spec and census")
    i.add_argument("edges")
    i.add_argument("--layers", type=int, help="layer count (omit for a directed edge list)")
    i.add_argument("--cutoff", type=int, default=DEFAULTS["cutoff"])
    i.add_argument("--census", help="write the weak census CSV here")
    i.set_defaults(func=cmd_ingest)

    k = sub.add_parser("compare", parents=[common], help="exact vs empirical z-scores")
    k.add_argument("--kind", choices=("in", "out", "weak", "multiplex"))
    k.add_argument("--census", help="census CSV to compare instead of simulating")
    k.add_argument("--z", type=float, default=DEFAULTS["z"], help="z-score threshold")
    k.add_argument("--min-prob", type=float, default=DEFAULTS["min_prob"],
                   help="only sizes with exact w(n) above this are checked")
    k.set_defaults(func=cmd_compare)
    return p


def emit_error(err: NetcompError):
    sys.stderr.write(json.dumps({"error": err.as_dict()}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.explain:
        print(json.dumps(DEFAULTS, indent=1))
        return 0
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        for w in caught:
            if issubclass(w.category, (UserWarning, RuntimeWarning)) and "netcomp" in str(w.filename):
                sys.stderr.write(json.dumps({"warning": str(w.message)}) + "\n")
        return code
    except NetcompError as err:
        emit_error(err)
        return 2 if err.code == "spec_not_found" else 1
    except OSError as err:
        emit_error(CliError(str(err), code="io_error"))
        return 1


if __name__ == "__main__":
    sys.exit(main())
