"""Scenario config files.

The canonical format is TOML. Top-level tables are ``scenario`` (required),
one block named after ``scenario.kind``, and an optional ``bargaining`` block.
Unknown keys anywhere are rejected. See ``configs/`` for one file per kind.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ParseError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("pagerank", "ubi", "lightning", "circles", "custom")
MECHANISMS = ("auction", "random_ratio", "blind_vote")


@dataclass(frozen=True)
class PageRankBlock:
    pages: tuple[str, ...]
    links: tuple[tuple[str, str], ...]
    damping: float = 0.85
    dangling_uniform: bool = False


@dataclass(frozen=True)
class UbiBlock:
    omega: float
    delta: float
    epsilon: float


@dataclass(frozen=True)
class LightningBlock:
    main: Mapping[str, float]
    commitments: Mapping[str, float]
    # one list of (sender, receiver, amount) transfers per sub-round
    sub_rounds: tuple[tuple[tuple[str, str, float], ...], ...] = ()
    channel: str = "channel"


@dataclass(frozen=True)
class CirclesBlock:
    seed_graph: tuple[tuple[str, str], ...]
    m: int = 2


@dataclass(frozen=True)
class CustomLayer:
    id: str
    initial: Mapping[str, float]
    transfers: tuple[tuple[int, str, str, float], ...] = ()


@dataclass(frozen=True)
class CustomBlock:
    layers: tuple[CustomLayer, ...]


@dataclass(frozen=True)
class BargainingBlock:
    mechanism: str
    layer_a: str
    layer_b: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    rounds: int
    seed: int
    block: Any
    bargaining: BargainingBlock | None = None
    source: Path | None = None

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(self.kind, self.rounds, int(seed), self.block, self.bargaining, self.source)


def _only(table: Mapping, allowed: set[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ValidationError(f"{where}.{key}" if where else key, "unknown key")


def _require(table: Mapping, key: str, where: str):
    if key not in table:
        raise ValidationError(f"{where}.{key}", "required key is missing")
    return table[key]


def _number(value, key: str, lo: float | None = None, hi: float | None = None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(key, "must be finite")
    if positive and not value > 0:
        raise ValidationError(key, "must be positive")
    if lo is not None and value < lo or hi is not None and value > hi:
        raise ValidationError(key, f"{value:g} outside [{lo:g}, {hi:g}]")
    return value


def _integer(value, key: str, lo: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(key, f"expected an integer, got {type(value).__name__}")
    if value < lo:
        raise ValidationError(key, f"must be at least {lo}")
    return value


def _balances(value, key: str) -> dict[str, float]:
    if not isinstance(value, Mapping):
        raise ValidationError(key, "expected a table of player = balance")
    return {str(p): _number(b, f"{key}.{p}", lo=0) for p, b in value.items()}


def _pairs(value, key: str) -> tuple[tuple[str, str], ...]:
    if isinstance(value, Mapping):
        return tuple((str(a), str(b)) for a, targets in value.items() for b in targets)
    if not isinstance(value, list) or any(not isinstance(e, list) or len(e) != 2 for e in value):
        raise ValidationError(key, "expected a list of [from, to] pairs")
    return tuple((str(a), str(b)) for a, b in value)


def _parse_pagerank(t: Mapping) -> PageRankBlock:
    _only(t, {"links", "damping", "pages", "dangling_uniform"}, "pagerank")
    links = _pairs(_require(t, "links", "pagerank"), "pagerank.links")
    pages = t.get("pages")
    if pages is None:
        pages = list(dict.fromkeys(p for pair in links for p in pair))
    pages = tuple(str(p) for p in pages)
    for a, b in links:
        if a == b:
            raise ValidationError("pagerank.links", f"page {a!r} links to itself")
        for p in (a, b):
            if p not in pages:
                raise ValidationError("pagerank.links", f"page {p!r} is not listed in pagerank.pages")
    damping = _number(t.get("damping", 0.85), "pagerank.damping", 0, 1)
    dangling = t.get("dangling_uniform", False)
    if not isinstance(dangling, bool):
        raise ValidationError("pagerank.dangling_uniform", "expected true or false")
    return PageRankBlock(pages, links, damping, dangling)


def _parse_ubi(t: Mapping) -> UbiBlock:
    _only(t, {"omega", "delta", "epsilon"}, "ubi")
    return UbiBlock(
        omega=_number(_require(t, "omega", "ubi"), "ubi.omega", positive=True),
        delta=_number(_require(t, "delta", "ubi"), "ubi.delta", 0, 1),
        epsilon=_number(_require(t, "epsilon", "ubi"), "ubi.epsilon", 0, 1),
    )


def _transfers(value, key: str, with_round: bool) -> tuple:
    if not isinstance(value, list):
        raise ValidationError(key, "expected a list of transfers")
    width = 4 if with_round else 3
    out = []
    for k, item in enumerate(value):
        if not isinstance(item, list) or len(item) != width:
            shape = "[round, sender, receiver, amount]" if with_round else "[sender, receiver, amount]"
            raise ValidationError(f"{key}[{k}]", f"expected {shape}")
        *head, amount = item
        amount = _number(amount, f"{key}[{k}]", lo=0)
        if with_round:
            out.append((_integer(head[0], f"{key}[{k}]"), str(head[1]), str(head[2]), amount))
        else:
            out.append((str(head[0]), str(head[1]), amount))
    return tuple(out)


def _parse_lightning(t: Mapping) -> LightningBlock:
    _only(t, {"main", "commitments", "sub_rounds", "channel"}, "lightning")
    main = _balances(_require(t, "main", "lightning"), "lightning.main")
    commitments = _balances(_require(t, "commitments", "lightning"), "lightning.commitments")
    if not commitments:
        raise ValidationError("lightning.commitments", "at least one player must commit")
    for p, amt in commitments.items():
        if p not in main:
            raise ValidationError(f"lightning.commitments.{p}", "player is not in lightning.main")
        if not amt > 0:
            raise ValidationError(f"lightning.commitments.{p}", "commitment must be positive")
    rounds = t.get("sub_rounds", [])
    if not isinstance(rounds, list):
        raise ValidationError("lightning.sub_rounds", "expected a list of rounds")
    subs = tuple(_transfers(r, f"lightning.sub_rounds[{k}]", False) for k, r in enumerate(rounds))
    channel = str(t.get("channel", "channel"))
    return LightningBlock(main, commitments, subs, channel)


def _parse_circles(t: Mapping) -> CirclesBlock:
    _only(t, {"seed_graph", "m"}, "circles")
    edges = _pairs(_require(t, "seed_graph", "circles"), "circles.seed_graph")
    if not edges:
        raise ValidationError("circles.seed_graph", "needs at least one trust edge")
    m = _integer(t.get("m", 2), "circles.m", lo=1)
    return CirclesBlock(edges, m)


def _parse_custom(t: Mapping) -> CustomBlock:
    _only(t, {"layers"}, "custom")
    raw = _require(t, "layers", "custom")
    if not isinstance(raw, list) or not raw:
        raise ValidationError("custom.layers", "expected a non-empty array of layer tables")
    layers = []
    for k, lt in enumerate(raw):
        where = f"custom.layers[{k}]"
        if not isinstance(lt, Mapping):
            raise ValidationError(where, "expected a table")
        _only(lt, {"id", "initial", "transfers"}, where)
        layers.append(CustomLayer(
            id=str(_require(lt, "id", where)),
            initial=_balances(_require(lt, "initial", where), f"{where}.initial"),
            transfers=_transfers(lt.get("transfers", []), f"{where}.transfers", True),
        ))
    ids = [lay.id for lay in layers]
    if len(set(ids)) != len(ids):
        raise ValidationError("custom.layers", "layer ids must be unique")
    return CustomBlock(tuple(layers))


_BARGAIN_PARAMS = {
    "auction": {"quantity", "minimum_bids", "bids"},
    "random_ratio": {"kappa", "alpha", "size_a", "size_b"},
    "blind_vote": {"alpha", "beta", "size_a", "size_b"},
}


def _parse_bargaining(t: Mapping) -> BargainingBlock:
    mech = _require(t, "mechanism", "bargaining")
    if mech not in MECHANISMS:
        raise ValidationError("bargaining.mechanism", f"must be one of {', '.join(MECHANISMS)}")
    _only(t, {"mechanism", "layer_a", "layer_b"} | _BARGAIN_PARAMS[mech], "bargaining")
    params = {k: v for k, v in t.items() if k in _BARGAIN_PARAMS[mech]}
    for key in _BARGAIN_PARAMS[mech]:
        _require(params, key, "bargaining")
    if mech == "random_ratio":
        for key in ("kappa", "alpha", "size_a", "size_b"):
            _integer(params[key], f"bargaining.{key}", lo=1)
    elif mech == "blind_vote":
        a = _number(params["alpha"], "bargaining.alpha", positive=True)
        b = _number(params["beta"], "bargaining.beta", positive=True)
        if not a < b:
            raise ValidationError("bargaining.beta", "must exceed bargaining.alpha")
        for key in ("size_a", "size_b"):
            _integer(params[key], f"bargaining.{key}", lo=1)
    else:
        _number(params["quantity"], "bargaining.quantity", positive=True)
        for layer, beta in _balances(params["minimum_bids"], "bargaining.minimum_bids").items():
            if not beta > 0:
                raise ValidationError(f"bargaining.minimum_bids.{layer}", "must be positive")
        if not isinstance(params["bids"], Mapping):
            raise ValidationError("bargaining.bids", "expected a table of layer = {bidder = amount}")
        for layer, bids in params["bids"].items():
            _balances(bids, f"bargaining.bids.{layer}")
    return BargainingBlock(mech, str(t.get("layer_a", "x")), str(t.get("layer_b", "y")), params)


_PARSERS = {
    "pagerank": _parse_pagerank,
    "ubi": _parse_ubi,
    "lightning": _parse_lightning,
    "circles": _parse_circles,
    "custom": _parse_custom,
}


def parse_config(data: Mapping, source: Path | None = None) -> ScenarioConfig:
    _only(data, {"scenario", "bargaining", *KINDS}, "")
    sc = data.get("scenario")
    if not isinstance(sc, Mapping):
        raise ValidationError("scenario", "required table is missing")
    _only(sc, {"kind", "rounds", "seed"}, "scenario")
    kind = _require(sc, "kind", "scenario")
    if kind not in KINDS:
        raise ValidationError("scenario.kind", f"must be one of {', '.join(KINDS)}")
    rounds = _integer(sc.get("rounds", 1), "scenario.rounds", lo=1)
    seed = _integer(sc.get("seed", 0), "scenario.seed", lo=0)
    for other in KINDS:
        if other != kind and other in data:
            raise ValidationError(other, f"block does not apply to kind {kind!r}")
    block_data = data.get(kind, {})
    if not isinstance(block_data, Mapping):
        raise ValidationError(kind, "expected a table")
    block = _PARSERS[kind](block_data)
    if kind == "lightning" and len(block.sub_rounds) > rounds:
        raise ValidationError("lightning.sub_rounds", f"{len(block.sub_rounds)} sub-rounds exceed scenario.rounds={rounds}")
    bargaining = _parse_bargaining(data["bargaining"]) if "bargaining" in data else None
    return ScenarioConfig(kind, rounds, seed, block, bargaining, source)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_config(data, path)
