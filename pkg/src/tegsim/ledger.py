"""Ledgers, token sets and denomination-based tokenisation.

A ledger maps opaque player labels to non-negative real balances. A token set
is a ladder of denominations used to approximate those balances with whole
coins; the approximation may undershoot a balance by at most the smallest
denomination and never overshoots it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import EmptyTokenSet


@dataclass(frozen=True)
class Verdict:
    """Outcome of a validation check. Truthy iff ``ok``.

    ``where`` names the first offending item (a player, a column, an entry)
    and ``detail`` carries a human-readable reason.
    """

    ok: bool
    where: object = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def failed(cls, where: object, detail: str) -> "Verdict":
        return cls(False, where, detail)


@dataclass(frozen=True)
class Ledger:
    entries: Mapping[str, float]

    def __post_init__(self):
        clean = {}
        for label, balance in dict(self.entries).items():
            balance = float(balance)
            if not balance >= 0:
                raise ValueError(f"negative or NaN balance for {label!r}: {balance}")
            clean[str(label)] = balance
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __getitem__(self, label: str) -> float:
        return self.entries[label]

    def __len__(self) -> int:
        return len(self.entries)

    def players(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def supply(self) -> float:
        return math.fsum(self.entries.values())


@dataclass(frozen=True)
class TokenSet:
    """Denominations t_1 < ... < t_k and a granularity bound ``epsilon``.

    Construction only enforces ordering and positivity; whether t_1 respects
    ``epsilon`` is a question for :func:`validate_token_set`.
    """

    denominations: tuple[float, ...]
    epsilon: float

    def __post_init__(self):
        denoms = tuple(float(t) for t in self.denominations)
        if any(t <= 0 for t in denoms):
            raise ValueError("denominations must be positive")
        if any(a >= b for a, b in zip(denoms, denoms[1:])):
            raise ValueError("denominations must be strictly increasing")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "denominations", denoms)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def smallest(self) -> float:
        return self.denominations[0]


@dataclass(frozen=True)
class Tokenisation:
    counts: Mapping[float, int]
    residual: float

    @property
    def total(self) -> float:
        return math.fsum(t * m for t, m in self.counts.items())


@dataclass(frozen=True)
class LedgerSequence:
    snapshots: tuple[tuple[int, Ledger], ...] = field(default_factory=tuple)

    def __post_init__(self):
        snaps = tuple((int(r), led) for r, led in self.snapshots)
        rounds = [r for r, _ in snaps]
        if rounds and rounds[0] != 0:
            raise ValueError("ledger sequence must start at round 0")
        if any(a >= b for a, b in zip(rounds, rounds[1:])):
            raise ValueError("round indices must be strictly increasing")
        object.__setattr__(self, "snapshots", snaps)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, i: int) -> tuple[int, Ledger]:
        return self.snapshots[i]

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def final(self) -> Ledger:
        return self.snapshots[-1][1]


# relative slack for floor() so that exact sums like 0.3 = 3 * 0.1 are not
# shorted by one coin through binary rounding
_FLOOR_SLACK = 1e-12


def tokenise(value: float, token_set: TokenSet) -> Tokenisation:
    """Greedy largest-denomination-first approximation of ``value``.

    The result never overshoots: ``0 <= value - total <= t_1`` for every
    non-negative ``value``.
    """
    if not token_set.denominations:
        raise EmptyTokenSet("token set has no denominations")
    if not value >= 0:
        raise ValueError(f"value must be non-negative, got {value}")
    remaining = float(value)
    counts: dict[float, int] = {}
    for t in reversed(token_set.denominations):
        m = math.floor(remaining / t + _FLOOR_SLACK)
        if m * t > remaining + _FLOOR_SLACK * max(t, remaining):
            m -= 1
        if m > 0:
            counts[t] = m
            remaining -= m * t
    residual = max(0.0, remaining)
    return Tokenisation(counts, residual)


def validate_token_set(token_set: TokenSet, ledger: Ledger | Mapping[str, float]) -> Verdict:
    """Check both the granularity bound t_1 <= epsilon and, per ledger entry,
    that the tokenisation error stays within t_1."""
    if not token_set.denominations:
        return Verdict.failed(None, "token set is empty")
    t1 = token_set.smallest
    if t1 > token_set.epsilon:
        return Verdict.failed(None, f"t_1={t1:g} exceeds epsilon={token_set.epsilon:g}")
    entries = ledger.entries if isinstance(ledger, Ledger) else ledger
    for label, balance in entries.items():
        tk = tokenise(balance, token_set)
        if abs(balance - tk.total) > t1:
            return Verdict.failed(label, f"residual {tk.residual:g} exceeds t_1={t1:g}")
    return Verdict.passed()
