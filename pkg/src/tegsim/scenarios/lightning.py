"""Payment-channel orchestration: commit, run the channel closed, settle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..engine import (
    DEFAULT_CHANNEL,
    GameRun,
    LayerState,
    TransferMatrix,
    build_matrix_from_transactions,
    commit_sublayer,
    run,
    settle_sublayer,
)


@dataclass(frozen=True)
class ChannelPlan:
    commitments: Mapping[str, float]
    # per sub-round: a matrix, or (sender, receiver, amount) transfers priced
    # against the channel balances of that round
    sub_rounds: Sequence[TransferMatrix | Sequence[tuple[str, str, float]]] = ()
    channel: str = DEFAULT_CHANNEL


@dataclass(frozen=True)
class LightningResult:
    main_states: tuple[LayerState, ...]  # before commit, with channel, after settle
    sub_run: GameRun

    @property
    def final(self) -> LayerState:
        return self.main_states[-1]


def transfer_matrix_for(sub: LayerState, transfers: Mapping[tuple[str, str], float]) -> TransferMatrix:
    """Matrix that moves fixed amounts between sublayer participants."""
    return build_matrix_from_transactions([(a, b, amt) for (a, b), amt in transfers.items()], sub)


def run_lightning_scenario(main: LayerState, plan: ChannelPlan, rounds: int | None = None) -> LightningResult:
    """Commit, run the channel for ``rounds`` sub-rounds (default: one per
    planned round; missing rounds move nothing), then settle."""
    committed, sub0 = commit_sublayer(main, plan.commitments, plan.channel)
    planned = list(plan.sub_rounds)
    rounds = len(planned) if rounds is None else rounds
    if rounds < len(planned):
        raise ValueError(f"{len(planned)} planned sub-rounds exceed rounds={rounds}")

    def provider(r: int, state: LayerState) -> TransferMatrix:
        item = planned[r] if r < len(planned) else ()
        if isinstance(item, TransferMatrix):
            return item
        return build_matrix_from_transactions(item, state)

    sub_run = run(sub0, provider, rounds) if rounds else GameRun((sub0,))
    settled = settle_sublayer(committed, sub_run.final, plan.channel)
    return LightningResult((main, committed, settled), sub_run)
