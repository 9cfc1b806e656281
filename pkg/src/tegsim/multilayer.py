"""Cross-layer structure: portfolios, fungibility matrices and graphs,
arbitrage search and cross-layer swaps.

A rate ``rates[i][j]`` is the number of layer-j tokens exchanged for one
layer-i token. ``None`` marks a pair that is not fungible this round (the
0 / infinity case), so cycle products never see an infinite rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .engine import LayerState
from .errors import (
    CostEdgeMismatch,
    DimensionMismatch,
    InsufficientBalance,
    MissingMu,
    RateUnavailable,
    UnknownLayer,
)
from .ledger import Verdict

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PortfolioVector:
    player: str
    holdings: Mapping[str, float]

    def __getitem__(self, layer: str) -> float:
        return self.holdings[layer]

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.holdings.values())


def portfolio(player: str, states: Iterable[LayerState]) -> PortfolioVector:
    return PortfolioVector(player, {s.layer_id: s.get(player, 0.0) for s in states})


@dataclass(frozen=True)
class FungibilityMatrix:
    layers: tuple[str, ...]
    rates: tuple[tuple[float | None, ...], ...]

    def __post_init__(self):
        layers = tuple(str(s) for s in self.layers)
        rates = tuple(tuple(None if r is None else float(r) for r in row) for row in self.rates)
        if len(rates) != len(layers) or any(len(row) != len(layers) for row in rates):
            raise DimensionMismatch("rate table must be square with one row per layer")
        if len(set(layers)) != len(layers):
            raise ValueError("layer ids must be unique")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def from_array(cls, layers: Sequence[str], rates) -> "FungibilityMatrix":
        """Build from numbers where 0, inf or NaN off the diagonal mean unavailable."""
        arr = np.asarray(rates, dtype=float)
        n = len(layers)
        table = []
        for i in range(n):
            row = []
            for j in range(n):
                r = arr[i, j]
                if i != j and (r == 0 or not math.isfinite(r)):
                    row.append(None)
                else:
                    row.append(float(r))
            table.append(row)
        return cls(tuple(layers), table)

    @classmethod
    def from_pairs(cls, layers: Sequence[str], pairs: Mapping[tuple[str, str], float]) -> "FungibilityMatrix":
        index = {s: k for k, s in enumerate(layers)}
        table = [[1.0 if i == j else None for j in range(len(layers))] for i in range(len(layers))]
        for (a, b), r in pairs.items():
            if a not in index or b not in index:
                raise UnknownLayer(a if a not in index else b)
            table[index[a]][index[b]] = r
        return cls(tuple(layers), table)

    @property
    def n(self) -> int:
        return len(self.layers)

    def index(self, layer: str) -> int:
        try:
            return self.layers.index(layer)
        except ValueError:
            raise UnknownLayer(layer) from None

    def rate(self, a: str | int, b: str | int) -> float | None:
        i = a if isinstance(a, int) else self.index(a)
        j = b if isinstance(b, int) else self.index(b)
        return self.rates[i][j]

    def with_rate(self, a: str, b: str, rate: float | None) -> "FungibilityMatrix":
        i, j = self.index(a), self.index(b)
        table = [list(row) for row in self.rates]
        table[i][j] = rate
        return FungibilityMatrix(self.layers, table)


def validate_fungibility_matrix(rho: FungibilityMatrix) -> Verdict:
    for i in range(rho.n):
        if rho.rates[i][i] != 1.0:
            return Verdict.failed(("diagonal", rho.layers[i]), f"self rate is {rho.rates[i][i]!r}, must be 1")
    for i in range(rho.n):
        for j in range(rho.n):
            r = rho.rates[i][j]
            if r is not None and not (r > 0 and math.isfinite(r)):
                return Verdict.failed(("entry", rho.layers[i], rho.layers[j]), f"rate {r!r} is not positive and finite")
    return Verdict.passed()


def is_isolated(layer: str, player_sets: Mapping[str, Iterable[str]]) -> bool:
    """True iff the layer shares no player with any other layer."""
    if layer not in player_sets:
        raise UnknownLayer(layer)
    mine = set(player_sets[layer])
    return all(mine.isdisjoint(players) for other, players in player_sets.items() if other != layer)


def isolate_layers(rho: FungibilityMatrix, player_sets: Mapping[str, Iterable[str]]) -> FungibilityMatrix:
    """Mark every pair touching an isolated layer as unavailable."""
    isolated = {s for s in rho.layers if s in player_sets and is_isolated(s, player_sets)}
    table = [[r if i == j or (rho.layers[i] not in isolated and rho.layers[j] not in isolated) else None
              for j, r in enumerate(row)] for i, row in enumerate(rho.rates)]
    return FungibilityMatrix(rho.layers, table)


def local_equilibrium(rho: FungibilityMatrix, i: str | int, j: str | int, tol: float = DEFAULT_TOL) -> bool:
    a, b = rho.rate(i, j), rho.rate(j, i)
    if a is None or b is None:
        raise RateUnavailable(f"no rate between {i!r} and {j!r}")
    return abs(a * b - 1.0) <= tol


@dataclass(frozen=True)
class FungibilityGraph:
    layers: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]
    kappa: Mapping[tuple[str, str], float] | None = None
    mu: Mapping[tuple[str, str], float] | None = None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def successors(self, layer: str) -> list[str]:
        return [b for (a, b) in self.edges if a == layer]

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.layers)
        for (a, b), r in self.edges.items():
            attrs = {"rate": r}
            if self.kappa is not None:
                attrs["kappa"] = self.kappa.get((a, b), 0.0)
            if self.mu is not None:
                attrs["mu"] = self.mu.get((a, b), 0.0)
            g.add_edge(a, b, **attrs)
        return g


def _cost_table(costs, rho: FungibilityMatrix, name: str) -> dict[tuple[str, str], float]:
    if isinstance(costs, Mapping):
        table = {}
        for (a, b), c in costs.items():
            rho.index(a), rho.index(b)
            table[(a, b)] = float(c)
        out = {(a, b): table.get((a, b), 0.0) for a in rho.layers for b in rho.layers}
    else:
        arr = np.asarray(costs, dtype=float)
        if arr.shape != (rho.n, rho.n):
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {(rho.n, rho.n)}")
        out = {(a, b): float(arr[i, j]) for i, a in enumerate(rho.layers) for j, b in enumerate(rho.layers)}
    for key, c in out.items():
        if c < 0:
            raise ValueError(f"{name}{key} is negative")
    for a in rho.layers:
        out[(a, a)] = 0.0
    return out


def fungibility_graph(rho: FungibilityMatrix, kappa=None, mu=None) -> FungibilityGraph:
    """Directed graph with one edge per present off-diagonal rate.

    Cost weights, when given, are kept only on edges. A present rate whose
    contract cost ``kappa`` is zero contradicts the rule that fungibility
    needs a contract, and raises :class:`CostEdgeMismatch`.
    """
    edges = {}
    for i, a in enumerate(rho.layers):
        for j, b in enumerate(rho.layers):
            r = rho.rates[i][j]
            if i != j and r is not None:
                edges[(a, b)] = r
    k = m = None
    if kappa is not None:
        full = _cost_table(kappa, rho, "kappa")
        for e in edges:
            if full[e] == 0:
                raise CostEdgeMismatch(f"kappa{e} is 0 but the layers have a rate")
        k = {e: full[e] for e in edges}
    if mu is not None:
        full = _cost_table(mu, rho, "mu")
        m = {e: full[e] for e in edges}
    return FungibilityGraph(rho.layers, edges, k, m)


@dataclass(frozen=True)
class Arbitrage:
    cycle: tuple[str, ...]
    gain: float

    def __str__(self) -> str:
        return "->".join(self.cycle + self.cycle[:1]) + f" gain {self.gain:.12g}"


def cycle_gain(H: FungibilityGraph, cycle: Sequence[str]) -> float:
    g = 1.0
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        g *= H.edges[(a, b)]
    return g


def _canonical(cycle: Sequence[str], order: Mapping[str, int]) -> tuple[str, ...]:
    k = min(range(len(cycle)), key=lambda i: order[cycle[i]])
    return tuple(cycle[k:]) + tuple(cycle[:k])


def _min_mean_cycle(n: int, edges: list[tuple[int, int, float]]) -> tuple[float, list[int]] | None:
    """Karp's minimum mean cycle over all vertices (virtual source to each).

    Returns (mean weight, cycle as vertex list) or None for an acyclic graph.
    """
    inf = math.inf
    d = np.full((n + 1, n), inf)
    d[0, :] = 0.0
    pred = np.full((n + 1, n), -1, dtype=np.int64)
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=float)
    for k in range(1, n + 1):
        cand = d[k - 1, u] + w
        # edge-wise minimum into each target; ties keep the first edge listed
        order = np.lexsort((np.arange(len(cand)), cand, v))
        first = np.ones(len(order), dtype=bool)
        first[1:] = v[order][1:] != v[order][:-1]
        best = order[first]
        ok = np.isfinite(cand[best])
        d[k, v[best[ok]]] = cand[best[ok]]
        pred[k, v[best[ok]]] = u[best[ok]]
    best_mean, best_v = inf, -1
    for x in range(n):
        if not math.isfinite(d[n, x]):
            continue
        worst = max((d[n, x] - d[k, x]) / (n - k) for k in range(n) if math.isfinite(d[k, x]))
        if worst < best_mean:
            best_mean, best_v = worst, x
    if best_v < 0:
        return None
    walk = [best_v]
    x = best_v
    for k in range(n, 0, -1):
        x = int(pred[k, x])
        walk.append(x)
    walk.reverse()  # walk[0] -> ... -> walk[n], n edges, so some vertex repeats
    weight = {(a, b): c for a, b, c in edges}
    best_cycle, best_cycle_mean = None, inf
    seen: dict[int, int] = {}
    for pos, x in enumerate(walk):
        if x in seen:
            cyc = walk[seen[x]:pos]
            if len(set(cyc)) < len(cyc):
                seen[x] = pos
                continue
            mean = sum(weight[(a, b)] for a, b in zip(cyc, cyc[1:] + cyc[:1])) / len(cyc)
            if mean < best_cycle_mean:
                best_cycle, best_cycle_mean = cyc, mean
        seen[x] = pos
    return best_mean, best_cycle


def find_arbitrage(H: FungibilityGraph, tol: float = DEFAULT_TOL) -> Arbitrage | None:
    """Find a directed cycle whose rate product exceeds ``1 + tol``.

    Works on weights ``-log(rate)``: a profitable cycle is a negative one.
    The cycle reported is the one with the best per-hop gain (minimum mean
    weight, via Karp's algorithm). If that cycle's total gain does not clear
    ``1 + tol`` but a longer cycle still could, the simple cycles are
    enumerated as a fallback.
    """
    if not H.edges:
        return None
    idx = {s: k for k, s in enumerate(H.layers)}
    edges = [(idx[a], idx[b], -math.log(r)) for (a, b), r in H.edges.items()]
    found = _min_mean_cycle(len(H.layers), edges)
    if found is None:
        return None
    mean, cyc = found
    if mean >= 0:
        return None
    names = _canonical([H.layers[k] for k in cyc], idx)
    gain = cycle_gain(H, names)
    if gain > 1.0 + tol:
        return Arbitrage(names, gain)
    # a simple cycle has at most n hops, each worth at most -mean in log gain
    if -mean * len(H.layers) <= math.log1p(tol):
        return None
    best = None
    for c in nx.simple_cycles(H.to_networkx()):
        g = cycle_gain(H, c)
        if g > 1.0 + tol and (best is None or g > best.gain):
            best = Arbitrage(_canonical(c, idx), g)
    return best


class TheoremBVerdict(enum.Enum):
    ACYCLIC = "acyclic"
    ZERO_MU = "zero-mu"
    COUNTEREXAMPLE = "counterexample"


@dataclass(frozen=True)
class TheoremBReport:
    verdict: TheoremBVerdict
    cycle: tuple[str, ...] = ()

    @property
    def adverse(self) -> bool:
        return self.verdict is TheoremBVerdict.COUNTEREXAMPLE


def _undirected(H: FungibilityGraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(H.layers)
    for (a, b) in H.edges:
        mu = max(H.mu.get((a, b), 0.0), H.mu.get((b, a), 0.0))
        if g.has_edge(a, b):
            mu = max(mu, g[a][b]["mu"])
        g.add_edge(a, b, mu=mu)
    return g


def check_theorem_b(H: FungibilityGraph) -> TheoremBReport:
    """Check that the (undirected, simple) fungibility graph is a forest or
    carries zero arbitrage-prevention cost everywhere.

    A counterexample reports a cycle through an edge with positive cost when
    one exists, otherwise any cycle.
    """
    if H.mu is None:
        raise MissingMu("the check needs mu weights")
    g = _undirected(H)
    if nx.is_forest(g):
        return TheoremBReport(TheoremBVerdict.ACYCLIC)
    if all(c == 0 for c in H.mu.values()):
        return TheoremBReport(TheoremBVerdict.ZERO_MU)
    order = {s: k for k, s in enumerate(H.layers)}
    for a, b, data in sorted(g.edges(data=True), key=lambda e: (order[e[0]], order[e[1]])):
        if data["mu"] > 0:
            g.remove_edge(a, b)
            try:
                path = nx.shortest_path(g, b, a)
            except nx.NetworkXNoPath:
                path = None
            g.add_edge(a, b, **data)
            if path is not None:
                return TheoremBReport(TheoremBVerdict.COUNTEREXAMPLE, _canonical(path, order))
    cyc = [u for u, _ in nx.find_cycle(g)]
    return TheoremBReport(TheoremBVerdict.COUNTEREXAMPLE, _canonical(cyc, order))


def cross_layer_swap(state_i: LayerState, state_j: LayerState, payer: str, payee: str,
                     amount: float, rate: float | None) -> tuple[LayerState, LayerState]:
    """Payer sends ``amount`` layer-i tokens to payee and receives
    ``amount * rate`` layer-j tokens back. Both legs happen or neither does."""
    if rate is None:
        raise RateUnavailable(f"layers {state_i.layer_id!r} and {state_j.layer_id!r} are not fungible")
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    if amount < 0:
        raise ValueError("swap amount must be non-negative")
    if amount == 0:
        return state_i, state_j
    price = amount * rate
    have_i, have_j = state_i.get(payer), state_j.get(payee)
    if have_i < amount:
        raise InsufficientBalance(payer, amount, have_i)
    if have_j < price:
        raise InsufficientBalance(payee, price, have_j)
    si = state_i.with_players([payee])
    sj = state_j.with_players([payer])
    xi, xj = si.balances.copy(), sj.balances.copy()
    xi[si.player_index[payer]] -= amount
    xi[si.player_index[payee]] += amount
    xj[sj.player_index[payee]] -= price
    xj[sj.player_index[payer]] += price
    return (LayerState(si.layer_id, si.round, si.players, xi),
            LayerState(sj.layer_id, sj.round, sj.players, xj))
