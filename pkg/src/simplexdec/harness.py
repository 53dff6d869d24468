"""Experiment orchestration: per-row decoding, certificate checks, sweeps,
and synthetic score families.

Conventions (documented in the README):

* A temperature ``tau`` pre-scales every row: s = logits / tau.  The model
  distribution used for Top-P nuclei is softmax(s / lam); the one used as
  the coverage decoder's anchor and for model_prob weights is softmax(s).
* Per-row randomness uses stream_id = row index for token draws and
  stream_id = row + 2**32 for Monte-Carlo coverage, so rows can be
  processed concurrently without sharing RNG state.
* Sweeps run the iterative solver for exactly J steps (stop_tol = 0), so
  step-count columns across cells are comparable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bok import BokConfig, WeightScheme, bok_decode, coverage_utility, make_weights
from .core import ReferenceDistribution, ScoreVector, SimplexDistribution, entropy
from .decoders import (
    DecoderConfig,
    greedy_decode,
    restricted_softmax,
    select_nucleus,
    select_topk_support,
    softmax_decode,
    sparsemax_decode,
)
from .io import LogitMatrix, RunReport, StepRecord
from .kkt import (
    CLOSED_FORM_CERT_TOL,
    SOLVER_CERT_TOL,
    KktReport,
    RegularizerSpec,
    kkt_residual,
)
from .sampling import RngStream, estimate_coverage, sample_token

_MC_STREAM_OFFSET = 1 << 32

SCORE_FAMILIES = ("peaked", "flat", "heavy_tail")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class StepOutcome:
    q: SimplexDistribution
    kkt: KktReport
    solver_iters: int
    support_mask_size: int


def decode_row(
    s: ScoreVector,
    config: DecoderConfig,
    bok_config: BokConfig | None = None,
) -> StepOutcome:
    """Decode one score vector and attach its optimality certificate."""
    kind = config.kind
    if kind == "greedy":
        q = greedy_decode(s)
        report = kkt_residual(s, q, 0.0, RegularizerSpec.quadratic())
        return StepOutcome(q, report, 0, q.support_size())
    if kind == "softmax":
        q = softmax_decode(s, config.lam)
        report = kkt_residual(s, q, config.lam, RegularizerSpec.negative_entropy())
        return StepOutcome(q, report, 0, q.support_size())
    if kind == "topk":
        mask = select_topk_support(s, config.k)
        q = restricted_softmax(s, mask, config.lam)
        report = kkt_residual(s, q, config.lam, RegularizerSpec.negative_entropy(), domain=mask)
        return StepOutcome(q, report, 0, mask.cardinality)
    if kind == "topp":
        p_model = ReferenceDistribution(softmax_decode(s, config.lam))
        mask = select_nucleus(p_model, config.p)
        q = restricted_softmax(s, mask, config.lam)
        report = kkt_residual(s, q, config.lam, RegularizerSpec.negative_entropy(), domain=mask)
        return StepOutcome(q, report, 0, mask.cardinality)
    if kind == "sparsemax":
        q = sparsemax_decode(s, config.lam)
        report = kkt_residual(s, q, config.lam, RegularizerSpec.quadratic())
        return StepOutcome(q, report, 0, q.support_size())
    if kind == "bok":
        if bok_config is None:
            raise ValueError("decoder kind 'bok' requires a BokConfig")
        anchor = ReferenceDistribution(softmax_decode(s, 1.0))
        q, diag = bok_decode(s, anchor, bok_config)
        w = make_weights(bok_config.weight_scheme, s=s, p=anchor)
        spec = RegularizerSpec.bok(
            anchor,
            K=bok_config.K,
            beta=bok_config.beta_bar / bok_config.lam,
            weights=w.weights,
        )
        report = kkt_residual(s, q, bok_config.lam, spec)
        return StepOutcome(q, report, diag.iters_used, q.support_size())
    raise ValueError(f"unknown decoder kind {kind!r}")


def run_decode(
    matrix: LogitMatrix,
    decoder_config: DecoderConfig,
    bok_config: BokConfig | None = None,
    seed: int = 0,
    *,
    tau: float = 1.0,
    coverage_trials: int = 0,
    coverage_k: int | None = None,
    weight_scheme: WeightScheme | None = None,
    emit_probs: bool = False,
) -> RunReport:
    """Decode every row of the matrix; deterministic given the seed.

    Certificate residuals are recorded per step, never asserted.  Coverage
    columns are filled for the coverage decoder (with its own K and weight
    scheme) or when ``coverage_k`` is given explicitly; Monte-Carlo
    coverage additionally needs ``coverage_trials`` > 0.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau!r}")
    records = []
    for row in range(matrix.rows):
        s = ScoreVector(matrix.row(row) / tau)
        outcome = decode_row(s, decoder_config, bok_config)
        q = outcome.q

        cov_k = coverage_k
        scheme = weight_scheme
        if decoder_config.kind == "bok":
            cov_k = bok_config.K if cov_k is None else cov_k
            scheme = bok_config.weight_scheme if scheme is None else scheme
        cov_analytic = cov_mc = cov_stderr = None
        if cov_k is not None:
            scheme = WeightScheme.model_prob() if scheme is None else scheme
            p_model = ReferenceDistribution(softmax_decode(s, 1.0))
            w = make_weights(scheme, s=s, p=p_model)
            cov_analytic = coverage_utility(q, w, cov_k)
            if coverage_trials > 0:
                est = estimate_coverage(
                    q, w, cov_k, coverage_trials, RngStream(seed, row + _MC_STREAM_OFFSET)
                )
                cov_mc = est.mean
                cov_stderr = est.std_error

        chosen = sample_token(q, RngStream(seed, row))
        records.append(
            StepRecord(
                step=row,
                decoder=decoder_config.kind,
                chosen_token=chosen,
                support_size=outcome.support_mask_size,
                entropy_nats=entropy(q),
                kkt_active_residual=outcome.kkt.active_residual,
                kkt_inactive_violation=outcome.kkt.inactive_violation,
                solver_iters=outcome.solver_iters,
                coverage_analytic=cov_analytic,
                coverage_mc=cov_mc,
                coverage_mc_stderr=cov_stderr,
                probs=tuple(q.probs.tolist()) if emit_probs else None,
            )
        )
    return RunReport(records=tuple(records))


def verify_run(
    matrix: LogitMatrix,
    decoder_config: DecoderConfig,
    bok_config: BokConfig | None = None,
    *,
    tau: float = 1.0,
    cert_tol: float | None = None,
) -> tuple[RunReport, list[int]]:
    """Re-decode and certify every row; returns (report, violating steps).

    The default tolerance is the closed-form one except for the iterative
    coverage decoder, which gets the solver tolerance.
    """
    if cert_tol is None:
        cert_tol = SOLVER_CERT_TOL if decoder_config.kind == "bok" else CLOSED_FORM_CERT_TOL
    report = run_decode(matrix, decoder_config, bok_config, seed=0, tau=tau)
    violations = [
        rec.step
        for rec in report.records
        if rec.kkt_active_residual > cert_tol or rec.kkt_inactive_violation > cert_tol
    ]
    return report, violations


SWEEP_COLUMNS = (
    "tau",
    "decoder",
    "lam",
    "k",
    "p",
    "K",
    "beta_bar",
    "steps",
    "eta",
    "entropy_nats",
    "kkt_active_residual",
    "kkt_inactive_violation",
    "solver_iters",
    "coverage_analytic",
    "coverage_mc",
    "coverage_mc_stderr",
)

_GRID_AXES = ("tau", "kind", "k", "p", "K", "beta_bar", "lam", "steps", "eta")

_GRID_DEFAULTS = {
    "tau": 1.0,
    "kind": "softmax",
    "k": None,
    "p": None,
    "K": 8,
    "beta_bar": None,
    "lam": 1.0,
    "steps": 5,
    "eta": 0.5,
}


@dataclass(frozen=True)
class SweepReport:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


def run_sweep(
    matrix: LogitMatrix,
    grid: dict,
    trials: int = 0,
    seed: int = 0,
) -> SweepReport:
    """Evaluate every cell of the hyperparameter grid on the same matrix.

    ``grid`` maps a subset of {tau, kind, k, p, K, beta_bar, lam, steps,
    eta} to value lists; omitted axes use one default value.  Each cell
    aggregates a full decode of the matrix: mean entropy and coverage,
    worst-case certificate residuals.  Cell seeds are derived from the
    sweep seed, so output is deterministic and independent of execution
    order.
    """
    unknown = set(grid) - set(_GRID_AXES)
    if unknown:
        raise ValueError(f"unknown grid axes: {sorted(unknown)}")
    axes = []
    for name in _GRID_AXES:
        values = grid.get(name, [_GRID_DEFAULTS[name]])
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"grid axis {name!r} must be a non-empty list")
        axes.append(list(values))

    rows = []
    for cell_index, combo in enumerate(itertools.product(*axes)):
        cell = dict(zip(_GRID_AXES, combo))
        kind = cell["kind"]
        decoder_config = DecoderConfig(
            kind=kind,
            lam=cell["lam"],
            k=cell["k"] if kind == "topk" else None,
            p=cell["p"] if kind == "topp" else None,
        )
        bok_config = None
        if kind == "bok":
            bok_config = BokConfig(
                K=cell["K"],
                lam=cell["lam"],
                beta_bar=0.0 if cell["beta_bar"] is None else cell["beta_bar"],
                solver=_sweep_solver(cell["eta"], cell["steps"]),
            )
        cell_seed = _splitmix64(seed ^ _splitmix64(cell_index))
        report = run_decode(
            matrix,
            decoder_config,
            bok_config,
            seed=cell_seed,
            tau=cell["tau"],
            coverage_trials=trials,
            coverage_k=cell["K"],
        )
        rows.append(_aggregate_cell(cell, report, matrix.rows))
    return SweepReport(columns=SWEEP_COLUMNS, rows=tuple(rows))


def _sweep_solver(eta: float, steps: int):
    from .solvers import SolverConfig

    return SolverConfig(step_size=eta, max_iters=steps, stop_tol=0.0)


def _aggregate_cell(cell: dict, report: RunReport, rows: int) -> tuple:
    recs = report.records
    mc_values = [r.coverage_mc for r in recs if r.coverage_mc is not None]
    stderrs = [r.coverage_mc_stderr for r in recs if r.coverage_mc_stderr is not None]
    cov_mc = float(np.mean(mc_values)) if mc_values else None
    cov_stderr = (
        float(np.sqrt(np.sum(np.square(stderrs))) / len(stderrs)) if stderrs else None
    )
    return (
        cell["tau"],
        cell["kind"],
        cell["lam"],
        cell["k"],
        cell["p"],
        cell["K"],
        cell["beta_bar"],
        cell["steps"],
        cell["eta"],
        float(np.mean([r.entropy_nats for r in recs])),
        max(r.kkt_active_residual for r in recs),
        max(r.kkt_inactive_violation for r in recs),
        float(np.mean([r.solver_iters for r in recs])),
        float(np.mean([r.coverage_analytic for r in recs])),
        cov_mc,
        cov_stderr,
    )


def write_sweep_csv(report: SweepReport, path: str) -> None:
    import csv

    from .io import IoError

    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(report.columns)
            for row in report.rows:
                writer.writerow(
                    ""
                    if value is None
                    else (repr(value) if isinstance(value, float) else str(value))
                    for value in row
                )
    except OSError as exc:
        raise IoError(path, exc) from exc


def make_synthetic_logits(
    family: str,
    n: int,
    rows: int,
    peakedness: float = 5.0,
    seed: int = 0,
) -> LogitMatrix:
    """Synthetic per-step score families for desk-scale experiments.

    peaked     one token boosted by ``peakedness`` over unit-scale noise
    flat       noise shrunk by 1/peakedness (near-uniform decode targets)
    heavy_tail Cauchy scores scaled by ``peakedness`` (extreme outliers)

    Values are rounded through float32 so jsonl and binary files of the
    same matrix carry identical numbers.
    """
    if family not in SCORE_FAMILIES:
        raise ValueError(f"unknown score family {family!r}; pick one of {SCORE_FAMILIES}")
    if n < 2 or rows < 1:
        raise ValueError("need n >= 2 and rows >= 1")
    if not peakedness > 0.0:
        raise ValueError("peakedness must be > 0")
    out = np.empty((rows, n))
    for row in range(rows):
        gen = RngStream(seed, row).generator()
        if family == "peaked":
            scores = 0.5 * gen.standard_normal(n)
            scores[int(gen.integers(n))] += peakedness
        elif family == "flat":
            scores = gen.standard_normal(n) / peakedness
        else:
            scores = peakedness * gen.standard_cauchy(n)
        out[row] = scores.astype(np.float32)
    return LogitMatrix(out)
