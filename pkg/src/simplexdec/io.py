"""Logit-file ingestion and run-report serialisation.

Two input formats carry the same row-major score matrix:

* jsonl -- one object per line: {"step": <int>, "scores": [<float>, ...]},
  every row the same length.
* binary -- magic ``SXLG``, then little-endian u32 version (= 1), u32
  vocab_size, u32 rows, then rows*vocab_size little-endian float32 values.

Reports are written as CSV (stable column order, see CSV_COLUMNS) or jsonl
(one record object per line; may carry the full probability vector when
requested).  Floats are serialised with shortest round-trip repr, so a
written report reads back exactly equal.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import DecodeError


class Malformed(DecodeError):
    def __init__(self, where: str, detail: str):
        super().__init__(f"malformed input at {where}: {detail}")
        self.where = where
        self.detail = detail


class InconsistentVocabSize(DecodeError):
    def __init__(self, where: str, expected: int, actual: int):
        super().__init__(f"{where}: row has {actual} scores, expected {expected}")
        self.expected = expected
        self.actual = actual


class BadMagic(DecodeError):
    def __init__(self, magic: bytes):
        super().__init__(f"bad magic {magic!r}, expected b'SXLG'")
        self.magic = magic


class NonFiniteValue(DecodeError):
    def __init__(self, where: str):
        super().__init__(f"non-finite value at {where}")
        self.where = where


class IoError(DecodeError):
    def __init__(self, path: str, cause: OSError):
        super().__init__(f"I/O failure on {path}: {cause}")
        self.path = path
        self.cause = cause


BINARY_MAGIC = b"SXLG"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIII")

LOGIT_FORMATS = ("jsonl", "binary")
REPORT_FORMATS = ("csv", "jsonl")

CSV_COLUMNS = (
    "step",
    "decoder",
    "chosen_token",
    "support_size",
    "entropy_nats",
    "kkt_active_residual",
    "kkt_inactive_violation",
    "solver_iters",
    "coverage_analytic",
    "coverage_mc",
    "coverage_mc_stderr",
)

_INT_COLUMNS = {"step", "chosen_token", "support_size", "solver_iters"}
_OPTIONAL_COLUMNS = {"coverage_analytic", "coverage_mc", "coverage_mc_stderr"}


class LogitMatrix:
    """A rows x vocab_size matrix of finite per-step scores."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise Malformed("matrix", f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteValue(f"row {bad[0]}, column {bad[1]}")
        arr = arr.copy()
        arr.flags.writeable = False
        self.values = arr

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class StepRecord:
    step: int
    decoder: str
    chosen_token: int
    support_size: int
    entropy_nats: float
    kkt_active_residual: float
    kkt_inactive_violation: float
    solver_iters: int
    coverage_analytic: float | None = None
    coverage_mc: float | None = None
    coverage_mc_stderr: float | None = None
    probs: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RunReport:
    records: tuple[StepRecord, ...]

    def summary(self) -> dict:
        """Aggregate view of the run; derived, not stored."""
        if not self.records:
            return {"steps": 0}
        return {
            "steps": len(self.records),
            "mean_entropy_nats": float(np.mean([r.entropy_nats for r in self.records])),
            "max_kkt_active_residual": max(r.kkt_active_residual for r in self.records),
            "max_kkt_inactive_violation": max(r.kkt_inactive_violation for r in self.records),
            "mean_solver_iters": float(np.mean([r.solver_iters for r in self.records])),
        }


def read_logits(path: str, format: str = "jsonl") -> LogitMatrix:
    if format == "jsonl":
        return _read_logits_jsonl(path)
    if format == "binary":
        return _read_logits_binary(path)
    raise Malformed(path, f"unknown logits format {format!r}")


def _read_logits_jsonl(path: str) -> LogitMatrix:
    rows = []
    vocab = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                where = f"{path}:{lineno}"
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise Malformed(where, f"invalid JSON ({exc.msg})") from exc
                if not isinstance(obj, dict) or "step" not in obj or "scores" not in obj:
                    raise Malformed(where, 'expected an object with "step" and "scores"')
                if not isinstance(obj["step"], int) or isinstance(obj["step"], bool):
                    raise Malformed(where, '"step" must be an integer')
                scores = obj["scores"]
                if not isinstance(scores, list) or not scores:
                    raise Malformed(where, '"scores" must be a non-empty array')
                arr = np.asarray(scores, dtype=np.float64)
                if arr.ndim != 1:
                    raise Malformed(where, '"scores" must be a flat array')
                if not np.all(np.isfinite(arr)):
                    raise NonFiniteValue(where)
                if vocab is None:
                    vocab = arr.size
                elif arr.size != vocab:
                    raise InconsistentVocabSize(where, vocab, arr.size)
                rows.append(arr)
    except OSError as exc:
        raise IoError(path, exc) from exc
    if not rows:
        raise Malformed(path, "no rows")
    return LogitMatrix(np.stack(rows))


def _read_logits_binary(path: str) -> LogitMatrix:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(path, exc) from exc
    if len(data) < _HEADER.size:
        raise Malformed(path, "truncated header")
    magic, version, vocab, rows = _HEADER.unpack_from(data)
    if magic != BINARY_MAGIC:
        raise BadMagic(magic)
    if version != BINARY_VERSION:
        raise Malformed(path, f"unsupported version {version}")
    if vocab < 1 or rows < 1:
        raise Malformed(path, f"bad dimensions rows={rows}, vocab={vocab}")
    expected = _HEADER.size + 4 * rows * vocab
    if len(data) != expected:
        raise Malformed(path, f"expected {expected} bytes, got {len(data)}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if not np.all(np.isfinite(flat)):
        bad = int(np.flatnonzero(~np.isfinite(flat))[0])
        raise NonFiniteValue(f"{path}: value {bad}")
    return LogitMatrix(flat.astype(np.float64).reshape(rows, vocab))


def write_logits(path: str, matrix: LogitMatrix, format: str = "jsonl") -> None:
    try:
        if format == "jsonl":
            with open(path, "w", encoding="utf-8") as fh:
                for i in range(matrix.rows):
                    fh.write(json.dumps({"step": i, "scores": matrix.row(i).tolist()}))
                    fh.write("\n")
        elif format == "binary":
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, matrix.vocab_size, matrix.rows))
                fh.write(matrix.values.astype("<f4").tobytes())
        else:
            raise Malformed(path, f"unknown logits format {format!r}")
    except OSError as exc:
        raise IoError(path, exc) from exc


def _record_to_dict(rec: StepRecord, include_probs: bool) -> dict:
    out = {col: getattr(rec, col) for col in CSV_COLUMNS}
    if include_probs and rec.probs is not None:
        out["probs"] = list(rec.probs)
    return out


def write_report(report: RunReport, path: str, format: str = "csv") -> None:
    if format not in REPORT_FORMATS:
        raise Malformed(path, f"unknown report format {format!r}")
    try:
        if format == "csv":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for rec in report.records:
                    row = []
                    for col in CSV_COLUMNS:
                        value = getattr(rec, col)
                        if value is None:
                            row.append("")
                        elif isinstance(value, float):
                            row.append(repr(value))
                        else:
                            row.append(str(value))
                    writer.writerow(row)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                for rec in report.records:
                    fh.write(json.dumps(_record_to_dict(rec, include_probs=True)))
                    fh.write("\n")
    except OSError as exc:
        raise IoError(path, exc) from exc


def read_report(path: str, format: str = "csv") -> RunReport:
    try:
        if format == "csv":
            with open(path, "r", encoding="utf-8", newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None or tuple(header) != CSV_COLUMNS:
                    raise Malformed(path, "unexpected CSV header")
                records = [_record_from_row(path, row) for row in reader]
        elif format == "jsonl":
            records = []
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise Malformed(f"{path}:{lineno}", f"invalid JSON ({exc.msg})") from exc
                    probs = obj.get("probs")
                    records.append(
                        StepRecord(
                            **{col: obj[col] for col in CSV_COLUMNS},
                            probs=None if probs is None else tuple(probs),
                        )
                    )
        else:
            raise Malformed(path, f"unknown report format {format!r}")
    except OSError as exc:
        raise IoError(path, exc) from exc
    return RunReport(records=tuple(records))


def _record_from_row(path: str, row: list[str]) -> StepRecord:
    if len(row) != len(CSV_COLUMNS):
        raise Malformed(path, f"expected {len(CSV_COLUMNS)} cells, got {len(row)}")
    kwargs = {}
    for col, cell in zip(CSV_COLUMNS, row):
        if col == "decoder":
            kwargs[col] = cell
        elif col in _INT_COLUMNS:
            kwargs[col] = int(cell)
        elif cell == "" and col in _OPTIONAL_COLUMNS:
            kwargs[col] = None
        else:
            kwargs[col] = float(cell)
    return StepRecord(**kwargs)
