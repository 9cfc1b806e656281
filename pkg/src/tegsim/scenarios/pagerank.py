"""PageRank as an open token game.

Each round a page keeps a ``1 - p`` share of its surfer mass, which is then
burned, and forwards the ``p`` share along its outlinks; every page is then
credited ``(1 - p) / n`` fresh mass. The matrix stays column-stochastic and the
burn never exceeds what a page retains, so the step is a legal open step, and
its result is exactly the damped PageRank update ``p * L @ x + (1 - p) / n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..engine import GameRun, LayerState, MintBurnVector, Step, TransferMatrix, run, step_open
from ..errors import DanglingPage


@dataclass(frozen=True)
class PageRankSpec:
    links: np.ndarray  # links[i, j] = number of links from page i to page j
    damping: float = 0.85
    dangling_uniform: bool = False

    def __post_init__(self):
        links = np.array(self.links, dtype=float)
        if links.ndim != 2 or links.shape[0] != links.shape[1]:
            raise ValueError("link count table must be square")
        if np.any(links < 0) or np.any(links != np.round(links)):
            raise ValueError("link counts must be non-negative integers")
        if np.any(np.diag(links) != 0):
            raise ValueError("pages cannot link to themselves")
        if not 0 <= self.damping <= 1:
            raise ValueError("damping must lie in [0, 1]")
        links.setflags(write=False)
        object.__setattr__(self, "links", links)

    @classmethod
    def from_edges(cls, n: int, edges, damping: float = 0.85, dangling_uniform: bool = False) -> "PageRankSpec":
        links = np.zeros((n, n))
        for a, b in edges:
            links[a, b] += 1
        return cls(links, damping, dangling_uniform)

    @property
    def n(self) -> int:
        return self.links.shape[0]


def link_fractions(spec: PageRankSpec) -> np.ndarray:
    """Column-stochastic surfer movement: column j spreads page j over its outlinks."""
    out = spec.links.sum(axis=1)
    n = spec.n
    L = np.zeros((n, n))
    for j in range(n):
        if out[j] == 0:
            if not spec.dangling_uniform:
                raise DanglingPage(f"page {j} has no outlinks")
            L[:, j] = 1.0 / n
        else:
            L[:, j] = spec.links[j] / out[j]
    return L


@dataclass(frozen=True)
class PageRankGame:
    matrix: TransferMatrix
    teleport: np.ndarray
    initial: LayerState
    damping: float

    def delta(self, state: LayerState) -> MintBurnVector:
        return MintBurnVector(self.teleport - (1.0 - self.damping) * state.balances)

    def provider(self, r: int, state: LayerState) -> Step:
        return Step(self.matrix, self.delta(state))

    def run(self, rounds: int) -> GameRun:
        return run(self.initial, self.provider, rounds)


def build_pagerank_game(spec: PageRankSpec, names: list[str] | None = None) -> PageRankGame:
    n = spec.n
    p = spec.damping
    W = p * link_fractions(spec) + (1.0 - p) * np.eye(n)
    names = names or [str(i + 1) for i in range(n)]
    x0 = LayerState("pagerank", 0, tuple(names), np.full(n, 1.0 / n))
    return PageRankGame(TransferMatrix.from_dense(W), np.full(n, (1.0 - p) / n), x0, p)


def pagerank(spec: PageRankSpec, tol: float = 1e-12, max_rounds: int = 10_000) -> tuple[np.ndarray, int]:
    """Iterate the game until successive states differ by < ``tol`` in L1.

    Returns the stationary vector and the number of rounds used.
    """
    game = build_pagerank_game(spec)
    state = game.initial
    for k in range(1, max_rounds + 1):
        new = step_open(state, game.matrix, game.delta(state))
        if np.abs(new.balances - state.balances).sum() < tol:
            return new.balances.copy(), k
        state = new
    return state.balances.copy(), max_rounds


def links_from_mapping(pages: list[str], links: Mapping[str, list[str]]) -> np.ndarray:
    index = {p: k for k, p in enumerate(pages)}
    table = np.zeros((len(pages), len(pages)))
    for src, targets in links.items():
        for t in targets:
            table[index[src], index[t]] += 1
    return table
