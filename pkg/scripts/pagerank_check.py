"""Compare the token-game PageRank with networkx on random link graphs."""

import argparse

import networkx as nx
import numpy as np

from tegsim.scenarios import PageRankSpec
from tegsim.scenarios.pagerank import pagerank


def random_links(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    links = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(links, 0)
    for i in np.flatnonzero(links.sum(axis=1) == 0):
        links[i, (i + 1) % n] = 1
    return links


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pages", type=int, default=50)
    ap.add_argument("--graphs", type=int, default=20)
    ap.add_argument("--damping", type=float, default=0.85)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.graphs):
        links = random_links(rng, args.pages, 0.1)
        ours, rounds = pagerank(PageRankSpec(links, args.damping))
        g = nx.from_numpy_array(links, create_using=nx.DiGraph)
        ref = nx.pagerank(g, alpha=args.damping, tol=1e-14, max_iter=10_000)
        err = float(np.abs(ours - np.array([ref[i] for i in range(args.pages)])).sum())
        worst = max(worst, err)
        print(f"rounds {rounds:4d}  L1 vs networkx {err:.3e}")
    print(f"worst L1 {worst:.3e}")


if __name__ == "__main__":
    main()
