"""Turn a scenario config into simulated states and output files."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .bargaining import (
    AuctionSpec,
    DiceSpec,
    random_votes,
    run_auction,
    run_blind_vote,
    run_random_ratio,
)
from .config import BargainingBlock, ScenarioConfig
from .engine import GameRun, LayerState, TransactionLog, replay_transactions
from .errors import NoDemand
from .metrics import entropy, inflation_ratio, normalize, zeta
from .scenarios import (
    ChannelPlan,
    PageRankSpec,
    UbiSpec,
    build_pagerank_game,
    new_circles,
    run_circles,
    run_lightning_scenario,
    ubi_run,
)
from .scenarios.pagerank import links_from_mapping

log = logging.getLogger(__name__)


@dataclass
class SimulationResult:
    """Everything a run produces, before it is written out."""

    states: list[LayerState] = field(default_factory=list)
    metrics: list[tuple] = field(default_factory=list)
    pairs: list[tuple] = field(default_factory=list)
    bargaining: list[tuple] = field(default_factory=list)
    rounds: int = 0


@dataclass(frozen=True)
class RunManifest:
    config: str
    seed: int
    rounds: int
    out_dir: str
    checksums: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "seed": self.seed, "rounds": self.rounds,
             "out_dir": self.out_dir, "checksums": self.checksums},
            indent=2, sort_keys=True,
        ) + "\n"


def _entropy(s: LayerState) -> float | None:
    # an empty layer has no distribution
    return entropy(normalize(s)) if s.supply() > 0 else None


def _metric_rows(game: GameRun) -> list[tuple]:
    rows = []
    for k, s in enumerate(game.states):
        supply = s.supply()
        h = _entropy(s)
        if k < len(game.matrices):
            rep = zeta(game.matrices[k])
            z, zs = rep.zeta, rep.zeta_star
        else:
            z = zs = None
        rows.append((s.round, s.layer_id, supply, h, z, zs))
    return rows


def _static_rows(states: Sequence[LayerState]) -> list[tuple]:
    return [(s.round, s.layer_id, s.supply(), _entropy(s), None, None) for s in states]


def _add_game(result: SimulationResult, game: GameRun) -> None:
    result.states.extend(game.states)
    result.metrics.extend(_metric_rows(game))
    result.rounds = max(result.rounds, game.rounds)


def _simulate_ubi(cfg: ScenarioConfig, rng, result: SimulationResult) -> None:
    b = cfg.block
    _add_game(result, ubi_run(UbiSpec(b.omega, b.delta, b.epsilon), cfg.rounds))


def _simulate_pagerank(cfg: ScenarioConfig, rng, result: SimulationResult) -> None:
    b = cfg.block
    targets: dict[str, list[str]] = {}
    for a, c in b.links:
        targets.setdefault(a, []).append(c)
    spec = PageRankSpec(links_from_mapping(list(b.pages), targets), b.damping, b.dangling_uniform)
    _add_game(result, build_pagerank_game(spec, list(b.pages)).run(cfg.rounds))


def _simulate_lightning(cfg: ScenarioConfig, rng, result: SimulationResult) -> None:
    b = cfg.block
    main = LayerState.from_mapping("main", b.main)
    plan = ChannelPlan(b.commitments, b.sub_rounds, b.channel)
    out = run_lightning_scenario(main, plan, cfg.rounds)
    result.states.extend(out.main_states)
    result.metrics.extend(_static_rows(out.main_states))
    _add_game(result, out.sub_run)


def _simulate_circles(cfg: ScenarioConfig, rng, result: SimulationResult) -> None:
    b = cfg.block
    history = run_circles(new_circles(b.seed_graph, b.m), cfg.rounds, rng)
    for st in history:
        layers = [st.layers[o] for o in sorted(st.layers)]
        result.states.extend(layers)
        result.metrics.extend(_static_rows(layers))
    result.rounds = cfg.rounds


def _simulate_custom(cfg: ScenarioConfig, rng, result: SimulationResult) -> None:
    games = {}
    for lay in cfg.block.layers:
        initial = LayerState.from_mapping(lay.id, lay.initial)
        games[lay.id] = replay_transactions(TransactionLog(lay.transfers), initial, cfg.rounds)
        _add_game(result, games[lay.id])
    for a, b in combinations(games, 2):
        ga, gb = games[a], games[b]
        for k in range(min(len(ga.matrices), len(gb.matrices))):
            za, zb = zeta(ga.matrices[k]).zeta, zeta(gb.matrices[k]).zeta
            try:
                x = inflation_ratio(za, ga.states[k].supply(), zb, gb.states[k].supply())
            except NoDemand:
                x = math.inf
            result.pairs.append((ga.states[k].round, a, b, x))


_SIMULATORS = {
    "ubi": _simulate_ubi,
    "pagerank": _simulate_pagerank,
    "lightning": _simulate_lightning,
    "circles": _simulate_circles,
    "custom": _simulate_custom,
}


def _bargaining_rows(block: BargainingBlock, rounds: int, rng) -> list[tuple]:
    p = block.params
    a, b = block.layer_a, block.layer_b
    rows = []
    for r in range(rounds):
        if block.mechanism == "random_ratio":
            out = run_random_ratio(DiceSpec(p["kappa"], p["alpha"], p["size_a"], p["size_b"]), rng)
            rows.append((r, block.mechanism, a, b, out.rate_xy, f"x_a={out.x_a:.12g};y_b={out.y_b:.12g}"))
        elif block.mechanism == "blind_vote":
            out = run_blind_vote(random_votes(float(p["alpha"]), float(p["beta"]), p["size_a"], p["size_b"], rng))
            rows.append((r, block.mechanism, a, b, out.rate_xy, f"x_a={out.x_a:.12g};y_b={out.y_b:.12g}"))
        else:
            bids = {(layer, bidder): float(v) for layer, t in p["bids"].items() for bidder, v in t.items()}
            spec = AuctionSpec(a, float(p["quantity"]), {k: float(v) for k, v in p["minimum_bids"].items()}, bids)
            won = run_auction(spec)
            if won is None:
                rows.append((r, block.mechanism, a, b, None, "no bid met its minimum"))
            else:
                rows.append((r, block.mechanism, a, won.layer, won.rate,
                             f"bidder={won.bidder};bid={won.bid:.12g}"))
    return rows


def simulate(cfg: ScenarioConfig) -> SimulationResult:
    """Run the configured scenario. Scenario and bargaining draws use two
    independent streams spawned from ``cfg.seed``."""
    scenario_seq, bargain_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    result = SimulationResult()
    log.info("simulating %s for %d rounds, seed %d", cfg.kind, cfg.rounds, cfg.seed)
    _SIMULATORS[cfg.kind](cfg, np.random.default_rng(scenario_seq), result)
    if cfg.bargaining is not None:
        result.bargaining = _bargaining_rows(cfg.bargaining, cfg.rounds, np.random.default_rng(bargain_seq))
    return result


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_command(cfg: ScenarioConfig, out_dir: str | Path) -> RunManifest:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = simulate(cfg)
    files = [
        io.write_snapshots(out / "snapshots.csv", result.states),
        io.write_metrics(out / "metrics.csv", result.metrics),
    ]
    if result.pairs:
        files.append(io.write_pairs(out / "pairs.csv", result.pairs))
    if cfg.bargaining is not None:
        files.append(io.write_bargaining(out / "bargaining.csv", result.bargaining))
    manifest = RunManifest(
        config=str(cfg.source) if cfg.source else "",
        seed=cfg.seed,
        rounds=result.rounds,
        out_dir=str(out),
        checksums={f.name: sha256(f) for f in files},
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    log.info("wrote %d files to %s", len(files) + 1, out)
    return manifest
