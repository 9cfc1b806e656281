"""Distribution and velocity metrics over game states.

All logarithms are base 2, so entropies and divergences are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import LayerState, TransferMatrix
from .errors import (
    DimensionMismatch,
    EmptyActiveSet,
    EmptyIndexSets,
    InfiniteDivergence,
    NoDemand,
    NonPositiveRate,
    ZeroSupply,
)

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TokenDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if np.any(~(p >= 0)) or np.any(p > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > PROB_TOL * max(1, len(p)):
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class CirculationReport:
    zeta: float
    zeta_star: float
    active_count: int


@dataclass(frozen=True)
class ExchangeIdentity:
    """M*V = P*Q for one round of a two-layer game."""

    money_supply: float
    velocity: float
    price_level: float
    real_expenditure: float

    @property
    def lhs(self) -> float:
        return self.money_supply * self.velocity

    @property
    def rhs(self) -> float:
        return self.price_level * self.real_expenditure

    def holds(self, tol: float = 1e-9) -> bool:
        return abs(self.lhs - self.rhs) <= tol * max(1.0, abs(self.lhs))


def normalize(balances) -> TokenDistribution:
    v = np.asarray(balances.balances if isinstance(balances, LayerState) else balances, dtype=float)
    total = math.fsum(v.tolist())
    if not total > 0:
        raise ZeroSupply("cannot normalize a zero token supply")
    return TokenDistribution(v / total)


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, TokenDistribution) else TokenDistribution(p).probs


def entropy(p) -> float:
    """Shannon entropy in bits, clipped to its exact range [0, log2 n]."""
    probs = _probs(p)
    support = probs[probs > 0]
    if len(support) == 0:
        return 0.0
    if np.all(support == support[0]):
        # uniform over its support: exact value, no summation rounding
        return math.log2(len(support))
    h = -math.fsum((support * np.log2(support)).tolist())
    return min(max(h, 0.0), math.log2(len(probs)))


def relative_entropy(p, q) -> float:
    """Kullback-Leibler divergence D(p||q) in bits; ``math.inf`` when p is not
    absolutely continuous with respect to q."""
    pp, qq = _probs(p), _probs(q)
    if len(pp) != len(qq):
        raise DimensionMismatch(f"distributions have {len(pp)} and {len(qq)} entries")
    mask = pp > 0
    if np.any(qq[mask] == 0):
        return math.inf
    d = math.fsum((pp[mask] * np.log2(pp[mask] / qq[mask])).tolist())
    return max(d, 0.0)


def rounds_to_target(p, q, ell: float) -> float:
    """Rounds needed to close the gap D(p||q) at ``ell`` bits per round."""
    if not ell > 0:
        raise NonPositiveRate(f"rate must be positive, got {ell}")
    d = relative_entropy(p, q)
    if math.isinf(d):
        raise InfiniteDivergence("target is unreachable: divergence is infinite")
    return d / ell


def estimate_divergence_rate(history: Sequence, target) -> float:
    """Average per-round drop of D(target || current) over consecutive snapshots.

    ``history`` holds balance vectors, distributions or layer states.
    """
    if len(history) < 2:
        raise ValueError("need at least two snapshots")
    ds = [relative_entropy(target, h if isinstance(h, TokenDistribution) else normalize(h)) for h in history]
    if any(math.isinf(d) for d in ds):
        raise InfiniteDivergence("a snapshot has infinite divergence from the target")
    return (ds[0] - ds[-1]) / (len(ds) - 1)


def active_slots(state: LayerState) -> list[int]:
    """Slots with a positive balance, for the partial-trace variant of zeta."""
    return np.flatnonzero(state.balances > 0).tolist()


def zeta(W: TransferMatrix, active: Iterable[int] | None = None) -> CirculationReport:
    """Mean self-loop weight: the fraction of balances retained in a round."""
    diag = W.diagonal
    if active is None:
        idx = np.arange(W.n)
    else:
        idx = np.fromiter(active, dtype=np.int64)
        if np.any((idx < 0) | (idx >= W.n)):
            raise DimensionMismatch("active slot outside the matrix")
    if len(idx) == 0:
        raise EmptyActiveSet("no active slots to average over")
    z = math.fsum(diag[idx].tolist()) / len(idx)
    z = min(max(z, 0.0), 1.0)
    return CirculationReport(z, 1.0 - z, len(idx))


def zeta_global(values) -> float:
    """Mean of a rounds-by-layers grid of zeta values."""
    m = np.asarray(values, dtype=float)
    if m.size == 0:
        raise EmptyIndexSets("need at least one round and one layer")
    if np.any((m < 0) | (m > 1)):
        raise ValueError("zeta values must lie in [0, 1]")
    return math.fsum(m.ravel().tolist()) / m.size


def inflation_ratio(zeta1: float, chi1: float, zeta2: float, chi2: float) -> float:
    """Layer-1 tokens per layer-2 token implied by this round's traded volumes."""
    demand = (1.0 - zeta2) * chi2
    if not demand > 0:
        raise NoDemand("layer 2 trades nothing this round; the rate is unbounded")
    return (1.0 - zeta1) * chi1 / demand


def exchange_identity(chi1: float, zeta1: float, chi2: float, zeta2: float) -> ExchangeIdentity:
    price = inflation_ratio(zeta1, chi1, zeta2, chi2)
    return ExchangeIdentity(
        money_supply=chi1,
        velocity=1.0 - zeta1,
        price_level=price,
        real_expenditure=(1.0 - zeta2) * chi2,
    )
