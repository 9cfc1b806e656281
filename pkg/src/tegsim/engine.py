"""Closed and open token exchange game iteration.

Orientation: a :class:`TransferMatrix` stores entry ``(i, j)`` as the fraction
of sender ``j``'s balance that moves to receiver ``i``. Columns are senders and
sum to one, so ``x_next = W @ x`` conserves supply. (Indexing the same weight
by the edge ``sender -> receiver`` gives the transpose.) The diagonal entry
``w_jj`` is the fraction that player ``j`` retains.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    EmptyChannel,
    InsufficientBalance,
    InvalidMatrix,
    NegativeBalanceRisk,
    Overspend,
    SupplyMismatch,
    TegsimError,
    UnknownPlayer,
)
from .ledger import Ledger, LedgerSequence, Verdict

log = logging.getLogger(__name__)


class cached_property:
    """Compute-once attribute. Unlike the functools version on Python < 3.12
    it takes no lock, which matters for the many tiny matrices of a long run."""

    def __init__(self, fn):
        self.fn = fn
        self.name = fn.__name__
        self.__doc__ = fn.__doc__

    def __set_name__(self, owner, name):
        self.name = name

    def __get__(self, obj, owner=None):
        if obj is None:
            return self
        value = obj.__dict__[self.name] = self.fn(obj)
        return value

STOCHASTIC_TOL = 1e-9
REPAIR_TOL = 1e-6
# beyond this dimension matvecs go through a CSC matrix instead of a dense one
_DENSE_LIMIT = 512
# up to this dimension validation runs in plain Python
_SMALL_N = 8


@dataclass(frozen=True, eq=False)
class LayerState:
    """Balances of one layer in one round, indexed by player slot."""

    layer_id: str
    round: int
    players: tuple[str, ...]
    balances: np.ndarray

    def __post_init__(self):
        players = tuple(str(p) for p in self.players)
        x = np.array(self.balances, dtype=float).reshape(-1)
        if len(players) != len(x):
            raise DimensionMismatch(f"{len(players)} players but {len(x)} balances")
        if len(set(players)) != len(players):
            raise ValueError("player labels must be unique")
        if np.any(~(x >= 0)):
            bad = players[int(np.flatnonzero(~(x >= 0))[0])]
            raise ValueError(f"balance of {bad!r} is negative or NaN")
        if self.round < 0:
            raise ValueError("round must be non-negative")
        x.setflags(write=False)
        object.__setattr__(self, "players", players)
        object.__setattr__(self, "balances", x)

    @classmethod
    def from_mapping(cls, layer_id: str, balances: Mapping[str, float], round: int = 0) -> "LayerState":
        return cls(layer_id, round, tuple(balances), np.fromiter(balances.values(), float, len(balances)))

    @classmethod
    def from_ledger(cls, layer_id: str, ledger: Ledger, round: int = 0) -> "LayerState":
        return cls.from_mapping(layer_id, ledger.entries, round)

    def _evolve(self, balances: np.ndarray, round: int) -> "LayerState":
        # trusted fast path for the engine: players unchanged, balances checked by caller
        balances.setflags(write=False)
        new = object.__new__(LayerState)
        object.__setattr__(new, "layer_id", self.layer_id)
        object.__setattr__(new, "round", round)
        object.__setattr__(new, "players", self.players)
        object.__setattr__(new, "balances", balances)
        if "player_index" in self.__dict__:
            new.__dict__["player_index"] = self.__dict__["player_index"]
        return new

    @cached_property
    def player_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.players)}

    @property
    def n(self) -> int:
        return len(self.players)

    def __len__(self) -> int:
        return len(self.players)

    def __contains__(self, player: str) -> bool:
        return player in self.player_index

    def balance(self, player: str) -> float:
        try:
            return float(self.balances[self.player_index[player]])
        except KeyError:
            raise UnknownPlayer(player) from None

    def get(self, player: str, default: float = 0.0) -> float:
        i = self.player_index.get(player)
        return default if i is None else float(self.balances[i])

    def as_dict(self) -> dict[str, float]:
        return {p: float(b) for p, b in zip(self.players, self.balances)}

    def ledger(self) -> Ledger:
        return Ledger(self.as_dict())

    def supply(self) -> float:
        return token_supply(self)

    def with_players(self, new_players: Iterable[str]) -> "LayerState":
        """Append zero-balance slots for players not yet in the layer."""
        extra = [p for p in dict.fromkeys(new_players) if p not in self.player_index]
        if not extra:
            return self
        return LayerState(self.layer_id, self.round, self.players + tuple(extra),
                          np.concatenate([self.balances, np.zeros(len(extra))]))

    def replace(self, balances: Mapping[str, float] | None = None, round: int | None = None) -> "LayerState":
        x = self.balances.copy()
        for p, b in (balances or {}).items():
            if p not in self.player_index:
                raise UnknownPlayer(p)
            x[self.player_index[p]] = b
        return LayerState(self.layer_id, self.round if round is None else round, self.players, x)

    def equals(self, other: "LayerState", tol: float = 0.0) -> bool:
        return (self.players == other.players
                and np.allclose(self.balances, other.balances, rtol=0, atol=tol))

    def __repr__(self) -> str:
        body = ", ".join(f"{p}: {b:g}" for p, b in zip(self.players, self.balances))
        return f"LayerState({self.layer_id!r}, r={self.round}, {{{body}}})"


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Column-stochastic edge weighting in sparse triplet form.

    Explicitly stored entries are kept as given (including stored zeros, which
    :func:`validate_transfer_matrix` reports as violations), so construction
    never fails on content. Steps check validity once and cache the result.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.vals, dtype=float).reshape(-1)
        if not (len(rows) == len(cols) == len(vals)):
            raise DimensionMismatch("triplet arrays differ in length")
        for a in (rows, cols, vals):
            a.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)

    @classmethod
    def from_dense(cls, w) -> "TransferMatrix":
        w = np.array(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch(f"transfer matrix must be square, got shape {w.shape}")
        r, c = np.nonzero(w)
        vals = w[r, c]
        for a in (r, c, vals, w):
            a.setflags(write=False)
        # trusted path: indices come from nonzero(), so they are in range and unique
        W = object.__new__(cls)
        object.__setattr__(W, "n", w.shape[0])
        object.__setattr__(W, "rows", r.astype(np.int64, copy=False))
        object.__setattr__(W, "cols", c.astype(np.int64, copy=False))
        object.__setattr__(W, "vals", vals)
        W.__dict__["_canonical"] = True
        W.__dict__["dense"] = w
        return W

    @classmethod
    def from_triplets(cls, n: int, triplets: Iterable[tuple[int, int, float]]) -> "TransferMatrix":
        t = list(triplets)
        if not t:
            return cls(n, [], [], [])
        r, c, v = zip(*t)
        return cls(n, r, c, v)

    @classmethod
    def identity(cls, n: int) -> "TransferMatrix":
        idx = np.arange(n)
        return cls(n, idx, idx, np.ones(n))

    @property
    def size(self) -> int:
        """Number of stored entries (edges of the underlying graph)."""
        return len(self.vals)

    def entries(self) -> Iterator[tuple[int, int, float]]:
        return zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist())

    @cached_property
    def verdict(self) -> Verdict:
        return validate_transfer_matrix(self)

    @cached_property
    def dense(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        np.add.at(w, (self.rows, self.cols), self.vals)
        w.setflags(write=False)
        return w

    @cached_property
    def _operator(self):
        if self.n <= _DENSE_LIMIT:
            return self.dense
        return sp.csc_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n))

    @cached_property
    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.n)
        mask = self.rows == self.cols
        np.add.at(d, self.rows[mask], self.vals[mask])
        return d

    def column_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.vals, minlength=self.n)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._operator @ x, dtype=float)

    def renormalized(self, tol: float = REPAIR_TOL) -> "TransferMatrix":
        """Rescale every column to sum exactly to one; drift above ``tol`` is refused."""
        sums = self.column_sums()
        drift = np.abs(sums - 1.0)
        if np.any(drift > tol):
            j = int(np.argmax(drift))
            raise InvalidMatrix(f"column {j} sums to {sums[j]!r}; drift exceeds repair tolerance {tol:g}")
        return TransferMatrix(self.n, self.rows, self.cols, self.vals / sums[self.cols])


def _small_matrix_ok(W: TransferMatrix, tol: float) -> bool:
    # plain Python beats numpy call overhead on a handful of entries
    sums = [0.0] * W.n
    for j, w in zip(W.cols.tolist(), W.vals.tolist()):
        if not 0.0 < w <= 1.0:
            return False
        sums[j] += w
    return all(abs(t - 1.0) <= tol for t in sums)


def validate_transfer_matrix(W: TransferMatrix, tol: float = STOCHASTIC_TOL) -> Verdict:
    """Check entry range, index range, uniqueness and column sums.

    ``where`` is ``("entry", i, j)`` or ``("column", j)`` for the first problem found.
    """
    n = W.n
    vals = W.vals
    canonical = W.__dict__.get("_canonical", False)
    if canonical and n <= _SMALL_N and _small_matrix_ok(W, tol):
        return Verdict.passed()
    # cheap reductions first; the masks below only run when something is off
    weights_ok = len(vals) == 0 or (vals.min() > 0.0 and vals.max() <= 1.0)
    if not weights_ok or not canonical:
        out_of_range = (W.rows < 0) | (W.rows >= n) | (W.cols < 0) | (W.cols >= n)
        bad_weight = ~((vals > 0.0) & (vals <= 1.0))
        bad = np.flatnonzero(out_of_range | bad_weight)
        if len(bad):
            k = int(bad[0])
            i, j, w = int(W.rows[k]), int(W.cols[k]), float(vals[k])
            if out_of_range[k]:
                return Verdict.failed(("entry", i, j), f"index outside a {n}x{n} matrix")
            return Verdict.failed(("entry", i, j), f"weight {w!r} outside (0, 1]")
    if not canonical:
        keys = W.rows * max(n, 1) + W.cols
        if len(np.unique(keys)) != len(keys):
            _, first = np.unique(keys, return_index=True)
            dup = sorted(set(range(len(keys))) - set(first.tolist()))[0]
            return Verdict.failed(("entry", int(W.rows[dup]), int(W.cols[dup])), "entry stored twice")
    sums = W.column_sums()
    if n and np.abs(sums - 1.0).max() > tol:
        j = int(np.flatnonzero(np.abs(sums - 1.0) > tol)[0])
        return Verdict.failed(("column", j), f"column {j} sums to {sums[j]:.12g}")
    return Verdict.passed()


@dataclass(frozen=True, eq=False)
class MintBurnVector:
    """Per-slot external issuance (positive) or burn (negative)."""

    deltas: np.ndarray

    def __post_init__(self):
        y = np.array(self.deltas, dtype=float).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise ValueError("mint/burn deltas must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "deltas", y)

    @classmethod
    def zeros(cls, n: int) -> "MintBurnVector":
        return cls(np.zeros(n))

    def total(self) -> float:
        return math.fsum(self.deltas.tolist())

    def first_violation(self, state: LayerState, W: TransferMatrix) -> int | None:
        """Slot where ``y_i < -x_i * w_ii``, or None when the bound holds everywhere."""
        bad = np.flatnonzero(self.deltas < -state.balances * W.diagonal)
        return int(bad[0]) if len(bad) else None


class TxRecord(NamedTuple):
    round: int
    sender: str
    receiver: str
    amount: float


@dataclass(frozen=True)
class TransactionLog:
    records: tuple[TxRecord, ...]

    def __post_init__(self):
        recs = tuple(TxRecord(int(r), str(s), str(t), float(a)) for r, s, t, a in self.records)
        for rec in recs:
            if not rec.amount >= 0:
                raise ValueError(f"negative amount in {rec}")
            if rec.round < 0:
                raise ValueError(f"negative round in {rec}")
        object.__setattr__(self, "records", recs)

    def __len__(self) -> int:
        return len(self.records)

    def rounds(self) -> list[int]:
        return sorted({rec.round for rec in self.records})

    def for_round(self, r: int) -> list[TxRecord]:
        return [rec for rec in self.records if rec.round == r]

    def players(self) -> list[str]:
        seen: dict[str, None] = {}
        for rec in self.records:
            seen.setdefault(rec.sender)
            seen.setdefault(rec.receiver)
        return list(seen)


def token_supply(state: LayerState) -> float:
    return math.fsum(state.balances.tolist())


def _check_step(state: LayerState, W: TransferMatrix) -> None:
    if W.n != state.n:
        raise DimensionMismatch(f"matrix is {W.n}x{W.n} but layer {state.layer_id!r} has {state.n} slots")
    v = W.verdict
    if not v:
        raise InvalidMatrix(f"{v.where}: {v.detail}")


def step_closed(state: LayerState, W: TransferMatrix) -> LayerState:
    _check_step(state, W)
    return state._evolve(W.apply(state.balances), state.round + 1)


def step_open(state: LayerState, W: TransferMatrix, y: MintBurnVector) -> LayerState:
    _check_step(state, W)
    if len(y.deltas) != state.n:
        raise DimensionMismatch(f"mint/burn vector has {len(y.deltas)} entries, layer has {state.n}")
    i = y.first_violation(state, W)
    if i is not None:
        retained = state.balances[i] * W.diagonal[i]
        raise NegativeBalanceRisk(
            f"delta {y.deltas[i]:g} for {state.players[i]!r} is below minus its retained balance {retained:g}")
    moved = W.apply(state.balances)
    x = moved + y.deltas
    neg = x < 0
    if np.any(neg):
        # the bound makes every true value >= 0; only rounding can dip below
        slack = 1e-12 * np.maximum(1.0, np.abs(moved) + np.abs(y.deltas))
        if np.any(x[neg] < -slack[neg]):
            raise NegativeBalanceRisk("open step produced a negative balance")
        x[neg] = 0.0
    return state._evolve(x, state.round + 1)


@dataclass(frozen=True)
class Step:
    """What a provider hands to :func:`run` for one round.

    ``joining`` lists players that enter the layer with balance 0 before the
    matrix is applied; the matrix must already have the grown dimension.
    """

    matrix: TransferMatrix
    delta: MintBurnVector | None = None
    joining: tuple[str, ...] = ()


ProviderResult = Union[TransferMatrix, Step, tuple]
Provider = Callable[[int, LayerState], ProviderResult]


def _as_step(result: ProviderResult) -> Step:
    if isinstance(result, Step):
        return result
    if isinstance(result, TransferMatrix):
        return Step(result)
    if isinstance(result, tuple):
        W, y = result[0], (result[1] if len(result) > 1 else None)
        if y is not None and not isinstance(y, MintBurnVector):
            y = MintBurnVector(y)
        return Step(W, y)
    raise TypeError(f"provider returned {type(result).__name__}, expected a TransferMatrix, tuple or Step")


@dataclass(frozen=True, eq=False)
class GameRun:
    """States for rounds 0..k and the matrices (and deltas) between them."""

    states: tuple[LayerState, ...]
    matrices: tuple[TransferMatrix, ...] = ()
    deltas: tuple[MintBurnVector | None, ...] = ()

    @property
    def initial(self) -> LayerState:
        return self.states[0]

    @property
    def final(self) -> LayerState:
        return self.states[-1]

    @property
    def rounds(self) -> int:
        return len(self.states) - 1

    @property
    def closed(self) -> bool:
        return all(y is None for y in self.deltas)

    def supplies(self) -> np.ndarray:
        return np.array([token_supply(s) for s in self.states])

    def ledger_sequence(self) -> LedgerSequence:
        base = self.states[0].round
        return LedgerSequence(tuple((s.round - base, s.ledger()) for s in self.states))


def run(initial: LayerState, provider: Provider, rounds: int, *, renormalize: bool = False) -> GameRun:
    """Iterate ``rounds`` steps, asking ``provider(r, state)`` for each round's transition.

    A provider may return a bare matrix (closed step), a ``(matrix, delta)``
    tuple (open step, ``delta`` may be None) or a :class:`Step`. Errors raised
    by a step carry the round index in their ``round`` attribute.
    """
    if rounds < 1:
        raise ValueError("rounds must be a positive integer")
    states = [initial]
    matrices: list[TransferMatrix] = []
    deltas: list[MintBurnVector | None] = []
    state = initial
    for r in range(initial.round, initial.round + rounds):
        try:
            st = _as_step(provider(r, state))
            if st.joining:
                state = state.with_players(st.joining)
            W = st.matrix
            if renormalize and not W.verdict:
                W = W.renormalized()
            state = step_closed(state, W) if st.delta is None else step_open(state, W, st.delta)
        except TegsimError as exc:
            exc.round = r
            raise
        states.append(state)
        matrices.append(W)
        deltas.append(st.delta)
    return GameRun(tuple(states), tuple(matrices), tuple(deltas))


def constant_provider(W: TransferMatrix, y: MintBurnVector | None = None) -> Provider:
    step = Step(W, y)
    return lambda r, state: step


# -- payment-channel sublayers ------------------------------------------------

DEFAULT_CHANNEL = "channel"


def commit_sublayer(parent: LayerState, commitments: Mapping[str, float],
                    channel: str = DEFAULT_CHANNEL) -> tuple[LayerState, LayerState]:
    """Move committed balances into a new channel slot of ``parent``.

    Returns the parent with the channel slot appended (one round later) and
    the sublayer's round-0 state owned by the participants.
    """
    if not commitments:
        raise EmptyChannel("a channel needs at least one committing player")
    if channel in parent.player_index:
        raise ValueError(f"parent already has a slot named {channel!r}")
    x = parent.balances.copy()
    for player, amount in commitments.items():
        if not amount > 0:
            raise ValueError(f"commitment of {player!r} must be positive, got {amount}")
        if player not in parent.player_index:
            raise UnknownPlayer(player)
        i = parent.player_index[player]
        if x[i] < amount:
            raise InsufficientBalance(player, amount, float(x[i]))
        x[i] -= amount
    total = math.fsum(commitments.values())
    new_parent = LayerState(parent.layer_id, parent.round + 1, parent.players + (channel,), np.append(x, total))
    sub = LayerState(f"{parent.layer_id}/{channel}", 0, tuple(commitments), list(commitments.values()))
    return new_parent, sub


def settle_sublayer(parent: LayerState, sub_final: LayerState, channel: str = DEFAULT_CHANNEL,
                    tol: float = STOCHASTIC_TOL) -> LayerState:
    """Add the sublayer's final balances back to the parent and drop the channel slot."""
    if channel not in parent.player_index:
        raise UnknownPlayer(channel)
    c = parent.player_index[channel]
    locked = float(parent.balances[c])
    sub_supply = token_supply(sub_final)
    if abs(sub_supply - locked) > tol * max(1.0, locked):
        raise SupplyMismatch(f"sublayer holds {sub_supply:.12g} but channel {channel!r} locks {locked:.12g}")
    keep = [i for i in range(parent.n) if i != c]
    players = tuple(parent.players[i] for i in keep)
    x = parent.balances[keep].copy()
    index = {p: k for k, p in enumerate(players)}
    for p, b in zip(sub_final.players, sub_final.balances):
        if p not in index:
            raise UnknownPlayer(p)
        x[index[p]] += b
    return LayerState(parent.layer_id, parent.round + 1, players, x)


# -- empirical matrices ---------------------------------------------------------

def build_matrix_from_transactions(records: Iterable, holdings: LayerState) -> TransferMatrix:
    """Fraction-of-balance matrix that reproduces one round of transfers.

    Column ``j`` gets ``amount / balance_j`` per receiver and keeps the rest
    as its self-loop. Zero-balance senders retain everything.
    """
    n = holdings.n
    index = holdings.player_index
    out = np.zeros((n, n))
    for rec in records:
        _, sender, receiver, amount = rec if len(rec) == 4 else (None, *rec)
        for p in (sender, receiver):
            if p not in index:
                raise UnknownPlayer(p)
        if sender == receiver or amount == 0:
            continue
        out[index[receiver], index[sender]] += amount
    x = holdings.balances
    outgoing = out.sum(axis=0)
    w = np.zeros((n, n))
    for j in range(n):
        if outgoing[j] > x[j] + STOCHASTIC_TOL * max(1.0, x[j]):
            raise Overspend(holdings.players[j], float(outgoing[j]), float(x[j]))
        if x[j] == 0:
            w[j, j] = 1.0
            continue
        w[:, j] = np.minimum(out[:, j] / x[j], 1.0)
        spent = w[:, j].sum()
        w[j, j] = 1.0 - spent if spent < 1.0 - 1e-15 else 0.0
    return TransferMatrix.from_dense(w)


def replay_transactions(log: TransactionLog, initial: LayerState, rounds: int | None = None) -> GameRun:
    """Rebuild the ledger sequence implied by a transaction log.

    Log round ``r`` moves the state of round ``r`` to round ``r + 1``. Players
    first seen in the log join with balance 0.
    """
    last = max(log.rounds(), default=initial.round)
    total = rounds if rounds is not None else last - initial.round + 1
    by_round: dict[int, list[TxRecord]] = {}
    for rec in log.records:
        by_round.setdefault(rec.round, []).append(rec)

    def provider(r: int, state: LayerState) -> Step:
        recs = by_round.get(r, [])
        joiners = tuple(p for rec in recs for p in (rec.sender, rec.receiver) if p not in state.player_index)
        grown = state.with_players(joiners)
        return Step(build_matrix_from_transactions(recs, grown), None, tuple(dict.fromkeys(joiners)))

    return run(initial, provider, max(total, 1))

