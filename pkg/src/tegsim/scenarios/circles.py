"""Personal-currency game: one layer per player, one token minted per layer
per round to its owner, and a trust graph that grows by preferential
attachment (one newcomer per round)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from ..bargaining import make_rng
from ..engine import LayerState, MintBurnVector, TransferMatrix, step_open
from ..errors import EmptyGraph
from ..multilayer import cross_layer_swap


@dataclass(frozen=True)
class CoinSwap:
    """``payer`` gives ``amount`` of ``give`` coins and receives as many ``take`` coins from ``payee``."""

    payer: str
    payee: str
    give: str
    take: str
    amount: float


SwapPolicy = Callable[["CirclesState", np.random.Generator], Sequence[CoinSwap]]


@dataclass(frozen=True, eq=False)
class CirclesState:
    trust: nx.Graph
    layers: Mapping[str, LayerState]  # owner -> that owner's coin layer
    round: int = 0
    m: int = 2

    @property
    def players(self) -> list[str]:
        return list(self.trust.nodes)

    def balance(self, holder: str, coin: str) -> float:
        return self.layers[coin].get(holder)


def new_circles(seed_graph: nx.Graph | Iterable[tuple[str, str]], m: int = 2) -> CirclesState:
    g = seed_graph.copy() if isinstance(seed_graph, nx.Graph) else nx.Graph(list(seed_graph))
    g = nx.relabel_nodes(g, {v: str(v) for v in g.nodes})
    if g.number_of_nodes() == 0:
        raise EmptyGraph("seed graph has no players")
    if g.number_of_nodes() > 1 and not nx.is_connected(g):
        raise ValueError("seed trust graph must be connected")
    if m < 1:
        raise ValueError("attachment count m must be at least 1")
    layers = {p: LayerState(p, 0, (p,), [0.0]) for p in g.nodes}
    return CirclesState(g, layers, 0, m)


def attachment_probabilities(H: nx.Graph) -> dict:
    total = sum(d for _, d in H.degree())
    if total == 0:
        raise EmptyGraph("no edges: attachment probabilities are undefined")
    return {v: d / total for v, d in H.degree()}


def attachment_probability(H: nx.Graph, v) -> float:
    return attachment_probabilities(H)[v]


def _endpoints(H: nx.Graph) -> list:
    # each vertex appears once per incident edge, so a uniform pick is degree-proportional
    out = []
    for a, b in H.edges():
        out.append(a)
        out.append(b)
    return out


def _pick_targets(nodes: Sequence, endpoints: Sequence, m: int, rng: np.random.Generator) -> list:
    if len(nodes) <= m:
        return list(nodes)
    if not endpoints:
        idx = rng.choice(len(nodes), size=m, replace=False)
        return [nodes[i] for i in sorted(idx.tolist())]
    chosen: dict = {}
    while len(chosen) < m:
        chosen.setdefault(endpoints[int(rng.integers(len(endpoints)))])
    return list(chosen)


def draw_attachment(H: nx.Graph, rng) -> object:
    """One degree-proportional draw of an existing vertex."""
    ends = _endpoints(H)
    if not ends:
        raise EmptyGraph("no edges to attach along")
    rng = make_rng(rng)
    return ends[int(rng.integers(len(ends)))]


def grow_trust_graph(seed_graph: nx.Graph, n: int, m: int, seed) -> nx.Graph:
    """Preferential-attachment growth of ``seed_graph`` up to ``n`` vertices."""
    rng = make_rng(seed)
    g = seed_graph.copy()
    nodes = list(g.nodes)
    ends = _endpoints(g)
    label = len(nodes)
    while g.number_of_nodes() < n:
        while label in g or str(label) in g:
            label += 1
        targets = _pick_targets(nodes, ends, m, rng)
        for t in targets:
            g.add_edge(label, t)
            ends += [label, t]
        nodes.append(label)
    return g


def _next_label(state: CirclesState) -> str:
    k = state.trust.number_of_nodes()
    while f"p{k}" in state.trust:
        k += 1
    return f"p{k}"


def circles_round(state: CirclesState, seed, swap_policy: SwapPolicy | None = None) -> CirclesState:
    """Mint one coin per layer to its owner, apply trades (never in round 0),
    then add one newcomer attached to ``m`` existing players."""
    rng = make_rng(seed)
    layers: dict[str, LayerState] = {}
    for owner, layer in state.layers.items():
        y = np.zeros(layer.n)
        y[layer.player_index[owner]] = 1.0
        layers[owner] = step_open(layer, TransferMatrix.identity(layer.n), MintBurnVector(y))
    if swap_policy is not None and state.round > 0:
        for swap in swap_policy(state, rng):
            if not state.trust.has_edge(swap.payer, swap.payee):
                raise ValueError(f"{swap.payer!r} and {swap.payee!r} do not trust each other")
            layers[swap.give], layers[swap.take] = cross_layer_swap(
                layers[swap.give], layers[swap.take], swap.payer, swap.payee, swap.amount, 1.0)
    trust = state.trust.copy()
    nodes = list(trust.nodes)
    newcomer = _next_label(state)
    for t in _pick_targets(nodes, _endpoints(trust), state.m, rng):
        trust.add_edge(newcomer, t)
    trust.add_node(newcomer)
    r = state.round + 1
    layers = {o: LayerState(s.layer_id, r, s.players, s.balances) for o, s in layers.items()}
    layers[newcomer] = LayerState(newcomer, r, (newcomer,), [0.0])
    return CirclesState(trust, layers, r, state.m)


def run_circles(state: CirclesState, rounds: int, seed, swap_policy: SwapPolicy | None = None) -> list[CirclesState]:
    rng = make_rng(seed)
    history = [state]
    for _ in range(rounds):
        state = circles_round(state, rng, swap_policy)
        history.append(state)
    return history


@dataclass(frozen=True)
class OwnershipGraph:
    """Bipartite players-by-coins graph weighted by balances."""

    edges: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def player_total(self, player: str) -> float:
        return math.fsum(w for (p, _), w in self.edges.items() if p == player)

    def token_total(self, token: str) -> float:
        return math.fsum(w for (_, t), w in self.edges.items() if t == token)

    def holdings(self, player: str) -> dict[str, float]:
        return {t: w for (p, t), w in self.edges.items() if p == player}

    def total_weight(self) -> float:
        return math.fsum(self.edges.values())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for (p, t), w in self.edges.items():
            g.add_node(("player", p), bipartite=0)
            g.add_node(("token", t), bipartite=1)
            g.add_edge(("player", p), ("token", t), weight=w)
        return g


def ownership_bipartite(layers: Mapping[str, LayerState] | Iterable[LayerState]) -> OwnershipGraph:
    states = layers.values() if isinstance(layers, Mapping) else layers
    edges = {}
    for s in states:
        for p, b in zip(s.players, s.balances.tolist()):
            if b > 0:
                edges[(p, s.layer_id)] = b
    return OwnershipGraph(edges)


def degree_distribution(H: nx.Graph) -> dict[int, float]:
    n = H.number_of_nodes()
    if n == 0:
        return {}
    counts: dict[int, int] = {}
    for _, d in H.degree():
        counts[d] = counts.get(d, 0) + 1
    return {k: counts[k] / n for k in sorted(counts)}


def degree_tail_slope(H: nx.Graph, kmin: int | None = None, bins: int = 15) -> float:
    """Least-squares slope of log density against log degree, using
    logarithmically spaced degree bins from ``kmin`` (default: minimum degree)."""
    deg = np.array([d for _, d in H.degree()])
    kmin = int(kmin if kmin is not None else max(1, deg.min()))
    tail = deg[deg >= kmin]
    if len(tail) == 0 or tail.max() <= kmin:
        raise ValueError("degree tail too short to fit")
    edges = np.unique(np.floor(np.logspace(np.log10(kmin), np.log10(tail.max() + 1), bins)).astype(int))
    hist, _ = np.histogram(deg, bins=edges)
    width = np.diff(edges)
    density = hist / width / len(deg)
    centers = np.sqrt(edges[:-1] * edges[1:])
    ok = hist > 0
    slope, _ = np.polyfit(np.log(centers[ok]), np.log(density[ok]), 1)
    return float(slope)
