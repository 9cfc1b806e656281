"""Two-player universal basic income game: a treasury A pays a fixed ``f``
per round to the rest of the system B, which returns a fraction ``epsilon``
of its balance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine import GameRun, LayerState, TransferMatrix, run
from ..errors import TreasuryDepleted

PLAYERS = ("A", "B")


@dataclass(frozen=True)
class UbiSpec:
    omega: float
    delta: float
    epsilon: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")

    @property
    def issuance(self) -> float:
        return self.delta * self.omega


def ubi_matrix(j: int, treasury: float, spec: UbiSpec) -> TransferMatrix:
    f = spec.issuance
    if f > treasury:
        err = TreasuryDepleted(f"treasury holds {treasury:g}, cannot pay {f:g}")
        err.round = j
        raise err
    share = f / treasury if treasury > 0 else 0.0
    eps = spec.epsilon
    return TransferMatrix.from_dense([[1.0 - share, eps], [share, 1.0 - eps]])


def ubi_initial(spec: UbiSpec) -> LayerState:
    return LayerState("ubi", 0, PLAYERS, np.array([spec.omega, 0.0]))


def ubi_provider(spec: UbiSpec):
    def provider(r: int, state: LayerState) -> TransferMatrix:
        return ubi_matrix(r, float(state.balances[0]), spec)

    return provider


def ubi_run(spec: UbiSpec, rounds: int) -> GameRun:
    return run(ubi_initial(spec), ubi_provider(spec), rounds)


def _paid_out_factor(j: int, eps: float) -> float:
    # (1 - (1 - eps)^j) / eps without cancellation at small eps; j at eps = 0
    if eps == 0:
        return float(j)
    if eps == 1:
        return 1.0 if j > 0 else 0.0
    return -math.expm1(j * math.log1p(-eps)) / eps


def ubi_closed_form(j: int, spec: UbiSpec) -> tuple[float, float]:
    """Balances (treasury, rest) after ``j`` rounds starting from (omega, 0)."""
    held = spec.issuance * _paid_out_factor(j, spec.epsilon)
    return spec.omega - held, held
