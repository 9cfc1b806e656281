"""Rate-setting oracles: sealed-bid auction, random ratio (dice) and blind vote.

Randomness always comes from ``numpy.random.default_rng(seed)`` (PCG64), so a
seed fixes every output bit for bit.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyVoterSet


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class AuctionSpec:
    item_layer: str
    quantity: float
    minimum_bids: Mapping[str, float]
    bids: Mapping[tuple[str, str], float] = field(default_factory=dict)
    # optional: players per layer, to check that bid layers share players with the item layer
    player_sets: Mapping[str, Iterable[str]] | None = None

    def __post_init__(self):
        if not self.quantity > 0:
            raise ValueError("auctioned quantity must be positive")
        for layer, beta in self.minimum_bids.items():
            if layer == self.item_layer:
                raise ValueError("the item layer cannot also be a bid layer")
            if not beta > 0:
                raise ValueError(f"minimum bid for {layer!r} must be positive")


@dataclass(frozen=True)
class AuctionResult:
    layer: str
    bidder: str
    bid: float
    rate: float


@dataclass(frozen=True)
class DiceSpec:
    kappa: int
    alpha: int
    size_a: int
    size_b: int

    def __post_init__(self):
        if min(self.kappa, self.alpha) < 1 or min(self.size_a, self.size_b) < 1:
            raise ValueError("dice need at least one side and groups at least one player")


@dataclass(frozen=True)
class BlindVoteSpec:
    alpha: float
    beta: float
    votes_a: Sequence[float]
    votes_b: Sequence[float]

    def __post_init__(self):
        if not 0 < self.alpha < self.beta:
            raise ValueError("need 0 < alpha < beta")
        for v in list(self.votes_a) + list(self.votes_b):
            if v not in (self.alpha, self.beta):
                raise ValueError(f"vote {v!r} is neither alpha nor beta")


@dataclass(frozen=True)
class RatioOutcome:
    x_a: float
    y_b: float

    @property
    def rate_xy(self) -> float:
        return self.y_b / self.x_a

    @property
    def rate_yx(self) -> float:
        return self.x_a / self.y_b


def run_auction(spec: AuctionSpec) -> AuctionResult | None:
    """Winner maximises bid / minimum-bid across layers; ties go to the
    lexicographically smallest layer, then bidder. Rate is bid / quantity."""
    if spec.player_sets is not None:
        item_players = set(spec.player_sets.get(spec.item_layer, ()))
        for layer in spec.minimum_bids:
            if item_players.isdisjoint(spec.player_sets.get(layer, ())):
                warnings.warn(f"bid layer {layer!r} shares no players with {spec.item_layer!r}", stacklevel=2)
    best = None
    for (layer, bidder), amount in sorted(spec.bids.items()):
        floor = spec.minimum_bids.get(layer)
        if floor is None or amount < floor:
            continue
        score = amount / floor
        if best is None or score > best[0]:
            best = (score, layer, bidder, amount)
    if best is None:
        return None
    _, layer, bidder, amount = best
    return AuctionResult(layer, bidder, amount, amount / spec.quantity)


def random_ratio_from_rolls(rolls_a: Sequence[int], rolls_b: Sequence[int]) -> RatioOutcome:
    if not rolls_a or not rolls_b:
        raise EmptyVoterSet("both groups must roll")
    return RatioOutcome(math.fsum(rolls_a) / len(rolls_a), math.fsum(rolls_b) / len(rolls_b))


def roll_dice(spec: DiceSpec, seed) -> tuple[list[int], list[int]]:
    rng = make_rng(seed)
    rolls_a = rng.integers(1, spec.kappa, size=spec.size_a, endpoint=True).tolist()
    rolls_b = rng.integers(1, spec.alpha, size=spec.size_b, endpoint=True).tolist()
    return rolls_a, rolls_b


def run_random_ratio(spec: DiceSpec, seed) -> RatioOutcome:
    return random_ratio_from_rolls(*roll_dice(spec, seed))


def _majority(votes: Sequence[float], alpha: float, beta: float) -> float:
    c = Counter(votes)
    return beta if c[beta] > c[alpha] else alpha


def run_blind_vote(spec: BlindVoteSpec) -> RatioOutcome:
    """Group A's majority fixes Y_B, group B's fixes X_A; ties go to alpha."""
    if not spec.votes_a or not spec.votes_b:
        raise EmptyVoterSet("both voter groups must be non-empty")
    y_b = _majority(spec.votes_a, spec.alpha, spec.beta)
    x_a = _majority(spec.votes_b, spec.alpha, spec.beta)
    return RatioOutcome(x_a, y_b)


def random_votes(alpha: float, beta: float, size_a: int, size_b: int, seed) -> BlindVoteSpec:
    """Votes drawn uniformly from {alpha, beta}; a stand-in for real voters."""
    rng = make_rng(seed)
    pick = lambda k: [beta if b else alpha for b in rng.integers(0, 2, size=k).tolist()]  # noqa: E731
    return BlindVoteSpec(alpha, beta, pick(size_a), pick(size_b))
