"""Download public network datasets and convert them to plain edge lists.

Nothing is bundled with the package; run this script to fetch the raw files
and write two-column edge lists that ``netcomp ingest`` reads directly.

    python3 scripts/fetch_datasets.py --out datasets/ higgs wiki-talk chem97ztz

Sources:

    higgs      Higgs boson retweet network, SNAP
               https://snap.stanford.edu/data/higgs-twitter.html
               directed, 425,008 nodes (lines are "src dst weight")
    wiki-talk  Wikipedia talk-page communications up to January 2008, SNAP
               https://snap.stanford.edu/data/wiki-Talk.html
               directed, 2,394,385 nodes
    chem97ztz  sparse statistical matrix Bates/Chem97ZtZ, SuiteSparse collection
               https://sparse.tamu.edu/Bates/Chem97ZtZ
               symmetric pattern, 2,541 nodes, read as an undirected graph

Check each provider's terms before redistributing the data.
"""
import argparse
import gzip
import io
import logging
import sys
import tarfile
import urllib.request
from pathlib import Path

import numpy as np
from scipy.io import mmread

log = logging.getLogger("fetch_datasets")

SOURCES = {
    "higgs": ("https://snap.stanford.edu/data/higgs-retweet_network.edgelist.gz", "snap"),
    "wiki-talk": ("https://snap.stanford.edu/data/wiki-Talk.txt.gz", "snap"),
    "chem97ztz": ("https://suitesparse-collection-website.herokuapp.com/MM/Bates/Chem97ZtZ.tar.gz",
                  "matrix_market"),
}


def download(url: str) -> bytes:
    log.info("fetching %s", url)
    with urllib.request.urlopen(url, timeout=120) as r:
        return r.read()


def snap_edges(raw: bytes, out: Path):
    """Keep the first two columns of a gzipped SNAP edge list."""
    with gzip.open(io.BytesIO(raw), "rt") as src, out.open("w") as dst:
        for line in src:
            if line.startswith("#") or not line.strip():
                continue
            a, b = line.split()[:2]
            dst.write(f"{a} {b}\n")


def matrix_market_edges(raw: bytes, out: Path):
    """Off-diagonal pattern of a symmetric matrix, each pair once."""
    with tarfile.open(fileobj=io.BytesIO(raw), mode="r:gz") as tar:
        member = next(m for m in tar.getmembers() if m.name.endswith(".mtx"))
        A = mmread(tar.extractfile(member)).tocoo()
    keep = A.row < A.col
    rows, cols = A.row[keep], A.col[keep]
    with out.open("w") as dst:
        dst.write(f"# nodes: {A.shape[0]}\n")
        np.savetxt(dst, np.column_stack([rows, cols]), fmt="%d")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", metavar="name",
                    help=f"any of {', '.join(sorted(SOURCES))} (default: all)")
    ap.add_argument("--out", type=Path, default=Path("datasets"))
    args = ap.parse_args(argv)
    unknown = set(args.names) - set(SOURCES)
    if unknown:
        ap.error(f"unknown dataset(s): {', '.join(sorted(unknown))}")
    names = args.names or sorted(SOURCES)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    for name in names:
        url, fmt = SOURCES[name]
        target = args.out / f"{name}.txt"
        try:
            raw = download(url)
        except OSError as exc:
            log.error("could not fetch %s: %s", name, exc)
            return 1
        (snap_edges if fmt == "snap" else matrix_market_edges)(raw, target)
        log.info("wrote %s", target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
