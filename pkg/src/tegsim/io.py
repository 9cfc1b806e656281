"""CSV readers and writers for snapshots, logs, matrices and reports.

Every writer prints floats with 12 significant digits and uses ``\\n`` line
endings, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .engine import LayerState, TransactionLog, TransferMatrix
from .errors import ParseError
from .multilayer import FungibilityMatrix

SNAPSHOT_HEADER = ("round", "layer", "player", "balance")
TX_HEADER = ("round", "sender", "receiver", "amount")
MATRIX_HEADER = ("row", "col", "weight")
METRICS_HEADER = ("round", "layer", "supply", "entropy_bits", "zeta", "zeta_star")
PAIRS_HEADER = ("round", "layer_a", "layer_b", "x_r")
RATE_HEADER = ("layer_a", "layer_b", "rate")
BARGAINING_HEADER = ("round", "mechanism", "layer_a", "layer_b", "rate", "detail")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        # fold -0.0 into 0 so signs of zero never change a checksum
        return format(v + 0.0, ".12g")
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _rows(path: str | Path, header: Sequence[str]) -> Iterator[tuple[int, dict[str, str]]]:
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = [h for h in header if h not in (reader.fieldnames or ())]
        if missing:
            raise ParseError(f"{path}: line 1: missing column(s) {', '.join(missing)}")
        for row in reader:
            yield reader.line_num, row


def _float(path, line: int, row: Mapping[str, str], key: str) -> float:
    try:
        return float(row[key])
    except (TypeError, ValueError):
        raise ParseError(f"{path}: line {line}: {key}={row[key]!r} is not a number") from None


def _int(path, line: int, row: Mapping[str, str], key: str) -> int:
    try:
        return int(row[key])
    except (TypeError, ValueError):
        raise ParseError(f"{path}: line {line}: {key}={row[key]!r} is not an integer") from None


# -- snapshots ----------------------------------------------------------------

def snapshot_rows(states: Iterable[LayerState]) -> Iterator[tuple]:
    for s in states:
        for p, b in zip(s.players, s.balances.tolist()):
            yield (s.round, s.layer_id, p, b)


def write_snapshots(path, states: Iterable[LayerState]) -> Path:
    return write_csv(path, SNAPSHOT_HEADER, snapshot_rows(states))


def read_snapshots(path) -> dict[str, list[LayerState]]:
    """Layer id -> its states ordered by round; player order is file order."""
    grouped: dict[str, dict[int, dict[str, float]]] = {}
    for line, row in _rows(path, SNAPSHOT_HEADER):
        r = _int(path, line, row, "round")
        bal = _float(path, line, row, "balance")
        grouped.setdefault(row["layer"], {}).setdefault(r, {})[row["player"]] = bal
    return {
        layer: [LayerState.from_mapping(layer, by_round[r], r) for r in sorted(by_round)]
        for layer, by_round in grouped.items()
    }


# -- transaction logs and matrices ----------------------------------------------

def write_transactions(path, log: TransactionLog) -> Path:
    return write_csv(path, TX_HEADER, log.records)


def read_transactions(path) -> TransactionLog:
    recs = []
    for line, row in _rows(path, TX_HEADER):
        amount = _float(path, line, row, "amount")
        if amount < 0:
            raise ParseError(f"{path}: line {line}: negative amount")
        recs.append((_int(path, line, row, "round"), row["sender"], row["receiver"], amount))
    return TransactionLog(tuple(recs))


def write_matrix(path, W: TransferMatrix) -> Path:
    return write_csv(path, MATRIX_HEADER, sorted(W.entries(), key=lambda e: (e[1], e[0])))


def read_matrix(path, n: int | None = None) -> TransferMatrix:
    """Sparse triplets with 0-based indices; ``n`` defaults to the largest index + 1."""
    trips = []
    for line, row in _rows(path, MATRIX_HEADER):
        i, j = _int(path, line, row, "row"), _int(path, line, row, "col")
        if i < 0 or j < 0:
            raise ParseError(f"{path}: line {line}: negative index")
        trips.append((i, j, _float(path, line, row, "weight")))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in trips), default=-1)
    if n == 0:
        raise ParseError(f"{path}: matrix has no entries")
    return TransferMatrix.from_triplets(n, trips)


# -- fungibility and cost tables ----------------------------------------------

def write_fungibility(path, rho: FungibilityMatrix) -> Path:
    rows = [
        (a, b, rho.rates[i][j])
        for i, a in enumerate(rho.layers)
        for j, b in enumerate(rho.layers)
        if i != j and rho.rates[i][j] is not None
    ]
    return write_csv(path, RATE_HEADER, rows)


def read_pairs(path) -> tuple[list[str], dict[tuple[str, str], float]]:
    """Layers in order of first appearance and the ``(a, b) -> value`` table."""
    layers: dict[str, None] = {}
    table: dict[tuple[str, str], float] = {}
    for line, row in _rows(path, RATE_HEADER):
        a, b = row["layer_a"], row["layer_b"]
        if (a, b) in table:
            raise ParseError(f"{path}: line {line}: duplicate pair {a},{b}")
        layers.setdefault(a)
        layers.setdefault(b)
        table[(a, b)] = _float(path, line, row, "rate")
    return list(layers), table


def read_fungibility(path, layers: Sequence[str] | None = None) -> FungibilityMatrix:
    """Absent off-diagonal pairs are unavailable; the diagonal defaults to 1."""
    seen, table = read_pairs(path)
    if layers is not None:
        seen = list(layers) + [s for s in seen if s not in layers]
    return FungibilityMatrix.from_pairs(seen, table)


def read_costs(path) -> dict[tuple[str, str], float]:
    """A kappa or mu file: same shape as a fungibility file, values in bits."""
    _, table = read_pairs(path)
    for (a, b), c in table.items():
        if c < 0:
            raise ParseError(f"{path}: cost for {a},{b} is negative")
    return table


# -- reports --------------------------------------------------------------------

def write_metrics(path, rows: Iterable[Sequence]) -> Path:
    return write_csv(path, METRICS_HEADER, rows)


def write_pairs(path, rows: Iterable[Sequence]) -> Path:
    return write_csv(path, PAIRS_HEADER, rows)


def write_bargaining(path, rows: Iterable[Sequence]) -> Path:
    return write_csv(path, BARGAINING_HEADER, rows)
