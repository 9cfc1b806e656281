"""Grow a trust graph by preferential attachment and fit its degree tail."""

import argparse

import networkx as nx

from tegsim.scenarios.circles import degree_distribution, degree_tail_slope, grow_trust_graph


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("-m", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    for seed in range(args.seeds):
        g = grow_trust_graph(nx.complete_graph(args.m + 1), args.n, args.m, seed)
        dist = degree_distribution(g)
        print(f"seed {seed}: max degree {max(dist)}, share at min degree {dist[min(dist)]:.3f}, "
              f"tail slope {degree_tail_slope(g):.3f}")


if __name__ == "__main__":
    main()
