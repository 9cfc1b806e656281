"""``tegsim`` command line.

Exit codes: 0 clean, 1 internal or scenario error, 2 bad config or input
file, 3 adverse verdict (arbitrage found, counterexample to the
zero-arbitrage condition).
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .config import load_config
from .errors import ConfigError, TegsimError
from .metrics import entropy, normalize, zeta
from .multilayer import TheoremBVerdict, check_theorem_b, find_arbitrage, fungibility_graph
from .runner import run_command

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_ADVERSE = 0, 1, 2, 3

log = logging.getLogger("tegsim")


def _setup_logging() -> None:
    level = os.environ.get("TEGSIM_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _seed_range(text: str) -> range:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if not m or int(m.group(1)) > int(m.group(2)):
        raise argparse.ArgumentTypeError(f"expected A..B with A <= B, got {text!r}")
    return range(int(m.group(1)), int(m.group(2)) + 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tegsim", description="Token exchange game simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=int, help="override scenario.seed")
    p.add_argument("--out", type=Path, default=Path("out"))

    p = sub.add_parser("batch", help="run one config over a range of seeds")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seeds", required=True, type=_seed_range, help="inclusive range A..B")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1))

    p = sub.add_parser("analyze", help="analyze a matrix, rate table or snapshot file")
    asub = p.add_subparsers(dest="analysis", required=True)

    a = asub.add_parser("zeta", help="circulation of a transfer matrix (row,col,weight)")
    a.add_argument("--input", required=True, type=Path)
    a.add_argument("--n", type=int, help="matrix size (default: largest index + 1)")
    a.add_argument("--active", help="comma-separated slots for the partial trace")
    a.add_argument("--out", type=Path)

    a = asub.add_parser("arbitrage", help="search a rate table (layer_a,layer_b,rate) for a gain cycle")
    a.add_argument("--input", required=True, type=Path)
    a.add_argument("--tol", type=float, default=1e-9)
    a.add_argument("--out", type=Path)

    a = asub.add_parser("theorem-b", help="check the zero-arbitrage condition on a rate table")
    a.add_argument("--input", required=True, type=Path)
    a.add_argument("--mu", type=Path, help="market-cost table, same shape as the rate table")
    a.add_argument("--kappa", type=Path, help="contract-cost table, same shape as the rate table")
    a.add_argument("--out", type=Path)

    a = asub.add_parser("entropy", help="entropy of every (round, layer) in a snapshot file")
    a.add_argument("--input", required=True, type=Path)
    a.add_argument("--out", type=Path)
    return parser


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    manifest = run_command(cfg, args.out)
    print(f"{cfg.kind}: {manifest.rounds} rounds, seed {manifest.seed} -> {manifest.out_dir}")
    for name, digest in sorted(manifest.checksums.items()):
        print(f"  {name} {digest}")
    return EXIT_OK


def _batch_one(config: str, seed: int, out: str) -> tuple[int, str | None]:
    try:
        cfg = load_config(config).with_seed(seed)
        run_command(cfg, out)
        return seed, None
    except Exception as exc:
        return seed, f"{type(exc).__name__}: {exc}"


def cmd_batch(args) -> int:
    load_config(args.config)  # fail fast on a bad file
    args.out.mkdir(parents=True, exist_ok=True)
    failures = 0
    with ProcessPoolExecutor(max_workers=max(1, args.workers)) as pool:
        futures = [
            pool.submit(_batch_one, str(args.config), s, str(args.out / f"seed-{s}"))
            for s in args.seeds
        ]
        for fut in futures:
            seed, err = fut.result()
            if err is None:
                print(f"seed {seed}: ok")
            else:
                failures += 1
                print(f"seed {seed}: error: {err}")
    return EXIT_INTERNAL if failures else EXIT_OK


def _analyze_zeta(args) -> int:
    W = io.read_matrix(args.input, args.n)
    active = None if args.active is None else [int(s) for s in args.active.split(",") if s.strip()]
    rep = zeta(W, active)
    print(f"zeta {rep.zeta:.12g} zeta_star {rep.zeta_star:.12g} slots {rep.active_count}")
    if not W.verdict:
        print(f"warning: matrix is not column-stochastic at {W.verdict.where}: {W.verdict.detail}", file=sys.stderr)
    if args.out:
        io.write_csv(args.out, ("zeta", "zeta_star", "slots"), [(rep.zeta, rep.zeta_star, rep.active_count)])
    return EXIT_OK


def _analyze_arbitrage(args) -> int:
    H = fungibility_graph(io.read_fungibility(args.input))
    found = find_arbitrage(H, args.tol)
    if found is None:
        print("no arbitrage")
    else:
        print(f"arbitrage {found}")
    if args.out:
        rows = [] if found is None else [("->".join(found.cycle + found.cycle[:1]), found.gain)]
        io.write_csv(args.out, ("cycle", "gain"), rows)
    return EXIT_OK if found is None else EXIT_ADVERSE


def _analyze_theorem_b(args) -> int:
    rho = io.read_fungibility(args.input)
    kappa = io.read_costs(args.kappa) if args.kappa else None
    mu = io.read_costs(args.mu) if args.mu else None
    # a forest passes whatever the costs, so mu is only needed when there is a cycle
    report = check_theorem_b(fungibility_graph(rho, kappa, mu if mu is not None else {}))
    if mu is None and report.verdict is not TheoremBVerdict.ACYCLIC:
        print("tegsim: the rate table has a cycle; pass --mu to check it", file=sys.stderr)
        return EXIT_CONFIG
    names = {TheoremBVerdict.ACYCLIC: "Acyclic", TheoremBVerdict.ZERO_MU: "ZeroMu",
             TheoremBVerdict.COUNTEREXAMPLE: "Counterexample"}
    verdict = names[report.verdict]
    cycle = "->".join(report.cycle + report.cycle[:1]) if report.cycle else ""
    print(f"theorem-b {verdict}" + (f" cycle {cycle}" if cycle else ""))
    if args.out:
        io.write_csv(args.out, ("verdict", "cycle"), [(verdict, cycle)])
    return EXIT_ADVERSE if report.adverse else EXIT_OK


def _analyze_entropy(args) -> int:
    rows = []
    for layer, states in io.read_snapshots(args.input).items():
        for s in states:
            h = entropy(normalize(s)) if s.supply() > 0 else None
            rows.append((s.round, layer, h))
            print(f"round {s.round} layer {layer} entropy_bits {io.fmt(h) or 'undefined'}")
    if args.out:
        io.write_csv(args.out, ("round", "layer", "entropy_bits"), rows)
    return EXIT_OK


_ANALYSES = {
    "zeta": _analyze_zeta,
    "arbitrage": _analyze_arbitrage,
    "theorem-b": _analyze_theorem_b,
    "entropy": _analyze_entropy,
}


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "batch":
            return cmd_batch(args)
        return _ANALYSES[args.analysis](args)
    except ConfigError as exc:
        print(f"tegsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TegsimError as exc:
        print(f"tegsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"tegsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:
        log.debug("unhandled error", exc_info=True)
        print(f"tegsim: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
