"""Exception hierarchy shared by every tegsim module."""

from __future__ import annotations


class TegsimError(Exception):
    """Base class. ``round`` is filled in by :func:`tegsim.engine.run` when a
    step fails inside a multi-round run."""

    round: int | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        if self.round is not None:
            return f"round {self.round}: {msg}"
        return msg


class DimensionMismatch(TegsimError, ValueError):
    pass


class InvalidMatrix(TegsimError, ValueError):
    pass


class NegativeBalanceRisk(TegsimError, ValueError):
    pass


class InsufficientBalance(TegsimError, ValueError):
    def __init__(self, player: str, needed: float, available: float):
        super().__init__(f"player {player!r} needs {needed:g} but holds {available:g}")
        self.player = player


class Overspend(TegsimError, ValueError):
    def __init__(self, sender: str, outgoing: float, balance: float):
        super().__init__(f"sender {sender!r} sends {outgoing:g} but holds {balance:g}")
        self.sender = sender


class UnknownPlayer(TegsimError, KeyError):
    def __init__(self, player: str):
        super().__init__(player)
        self.player = player

    def __str__(self) -> str:
        return f"unknown player {self.player!r}"


class SupplyMismatch(TegsimError, ValueError):
    pass


class EmptyChannel(TegsimError, ValueError):
    pass


class EmptyTokenSet(TegsimError, ValueError):
    pass


class ZeroSupply(TegsimError, ValueError):
    pass


class NonPositiveRate(TegsimError, ValueError):
    pass


class InfiniteDivergence(TegsimError, ValueError):
    pass


class EmptyActiveSet(TegsimError, ValueError):
    pass


class EmptyIndexSets(TegsimError, ValueError):
    pass


class NoDemand(TegsimError, ZeroDivisionError):
    pass


class UnknownLayer(TegsimError, KeyError):
    pass


class RateUnavailable(TegsimError, ValueError):
    pass


class CostEdgeMismatch(TegsimError, ValueError):
    pass


class MissingMu(TegsimError, ValueError):
    pass


class EmptyVoterSet(TegsimError, ValueError):
    pass


class DanglingPage(TegsimError, ValueError):
    pass


class TreasuryDepleted(TegsimError, ValueError):
    pass


class EmptyGraph(TegsimError, ValueError):
    pass


class ConfigError(TegsimError):
    """Raised for anything wrong with a scenario config file (exit code 2)."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
