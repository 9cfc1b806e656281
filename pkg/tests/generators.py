"""Seeded generators for random valid inputs."""

from __future__ import annotations

import numpy as np

from tegsim.engine import TransferMatrix


def random_stochastic(rng: np.random.Generator, n: int, max_out: int | None = None) -> np.ndarray:
    """Dense column-stochastic matrix; each column spreads over a random
    subset of at most ``max_out`` receivers."""
    W = np.zeros((n, n))
    max_out = n if max_out is None else min(max_out, n)
    for j in range(n):
        k = int(rng.integers(1, max_out + 1))
        rows = rng.choice(n, size=k, replace=False)
        w = rng.dirichlet(np.ones(k))
        w = np.maximum(w, 1e-12)
        W[rows, j] = w / w.sum()
    return W


def random_matrix(rng: np.random.Generator, n: int, max_out: int | None = None) -> TransferMatrix:
    return TransferMatrix.from_dense(random_stochastic(rng, n, max_out))


def random_balances(rng: np.random.Generator, n: int, zero_share: float = 0.2) -> np.ndarray:
    x = rng.exponential(10.0, size=n)
    x[rng.random(n) < zero_share] = 0.0
    return x


def random_tree_edges(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    """Uniform-ish random labelled tree: attach vertex k to a random earlier one."""
    order = rng.permutation(n)
    return [(int(order[k]), int(order[rng.integers(k)])) for k in range(1, n)]
