"""Command-line harness.

Subcommands: ``decode`` (per-step decoding report), ``sweep``
(hyperparameter grid report), ``verify`` (optimality certificates; exits 3
on violation), ``coverage-sim`` (decode a synthetic score family with
Monte-Carlo coverage) and ``gen`` (emit synthetic logit files).

Exit codes: 0 success, 1 usage error, 2 data error, 3 certificate
violation.  A JSON document passed via --config supplies defaults for any
flag (keys are flag names with dashes as underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bok import BokConfig, WeightScheme
from .core import DecodeError
from .decoders import DECODER_KINDS, DecoderConfig
from .harness import (
    SCORE_FAMILIES,
    make_synthetic_logits,
    run_decode,
    run_sweep,
    verify_run,
    write_sweep_csv,
)
from .io import (
    LOGIT_FORMATS,
    REPORT_FORMATS,
    read_logits,
    write_logits,
    write_report,
)
from .solvers import SolverConfig


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this harness reserves 2
    # for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_io_flags(sub, needs_input=True):
    if needs_input:
        sub.add_argument("--input", help="logits file to read")
        sub.add_argument("--format", choices=LOGIT_FORMATS, default=None,
                         help="logits file format (default jsonl)")
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--config", default=None, help="JSON file with flag defaults")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")


def _add_decoder_flags(sub):
    sub.add_argument("--decoder", choices=DECODER_KINDS, default=None,
                     help="decoder kind (default softmax)")
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="regulariser weight / temperature (default 1.0)")
    sub.add_argument("--tau", type=float, default=None,
                     help="score pre-scaling temperature (default 1.0)")
    sub.add_argument("--k", type=int, default=None, help="Top-K support size (default 50)")
    sub.add_argument("--p", type=float, default=None, help="Top-P nucleus mass (default 0.9)")
    sub.add_argument("--K", dest="K", type=int, default=None,
                     help="sample budget of the coverage utility (default 8)")
    sub.add_argument("--beta-bar", dest="beta_bar", type=float, default=None,
                     help="coverage weight beta_bar (default 1.0)")
    sub.add_argument("--weights", default=None,
                     help="weight scheme: uniform | model_prob | top_m:M | rank:GAMMA")
    sub.add_argument("--steps", type=int, default=None,
                     help="solver iterations J (default 5)")
    sub.add_argument("--eta", type=float, default=None, help="solver step size (default 0.5)")


_DEFAULTS = {
    "format": "jsonl",
    "seed": 0,
    "decoder": "softmax",
    "lam": 1.0,
    "tau": 1.0,
    "k": 50,
    "p": 0.9,
    "K": 8,
    "beta_bar": 1.0,
    "weights": "model_prob",
    "steps": 5,
    "eta": 0.5,
    "report_format": "csv",
    "trials": 0,
    "family": "peaked",
    "n": 32,
    "rows": 8,
    "peakedness": 5.0,
}


def _merge(ns: argparse.Namespace) -> dict:
    """Resolve each option as: explicit flag > --config value > default."""
    merged = dict(_DEFAULTS)
    if getattr(ns, "config", None):
        try:
            with open(ns.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise _UsageError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise _UsageError(f"config file is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise _UsageError("config file must hold a JSON object")
        alias = {"lambda": "lam"}
        for key, value in doc.items():
            merged[alias.get(key, key)] = value
    for key, value in vars(ns).items():
        if key in ("func", "config"):
            continue
        if value is not None and value is not False:
            merged[key] = value
        elif key not in merged:
            merged[key] = value
    return merged


def _parse_weight_scheme(text: str) -> WeightScheme:
    if text == "uniform":
        return WeightScheme.uniform()
    if text == "model_prob":
        return WeightScheme.model_prob()
    if text.startswith("top_m:"):
        return WeightScheme.top_m_indicator(int(text.split(":", 1)[1]))
    if text.startswith("rank:"):
        return WeightScheme.rank_softened(float(text.split(":", 1)[1]))
    raise _UsageError(f"unknown weight scheme {text!r}")


def _build_configs(opt: dict) -> tuple[DecoderConfig, BokConfig | None]:
    kind = opt["decoder"]
    decoder_config = DecoderConfig(
        kind=kind,
        lam=float(opt["lam"]),
        k=int(opt["k"]) if kind == "topk" else None,
        p=float(opt["p"]) if kind == "topp" else None,
    )
    bok_config = None
    if kind == "bok":
        bok_config = BokConfig(
            K=int(opt["K"]),
            lam=float(opt["lam"]),
            beta_bar=float(opt["beta_bar"]),
            weight_scheme=_parse_weight_scheme(opt["weights"]),
            solver=SolverConfig(
                step_size=float(opt["eta"]), max_iters=int(opt["steps"]), stop_tol=0.0
            ),
        )
    return decoder_config, bok_config


def _read_input(opt: dict):
    if not opt.get("input"):
        raise _UsageError("--input is required")
    return read_logits(opt["input"], opt["format"])


def _emit_report(report, opt: dict) -> None:
    fmt = opt["report_format"]
    if fmt not in REPORT_FORMATS:
        raise _UsageError(f"unknown report format {fmt!r}")
    if opt.get("out"):
        write_report(report, opt["out"], fmt)
    else:
        import tempfile

        with tempfile.NamedTemporaryFile("r", suffix=f".{fmt}") as tmp:
            write_report(report, tmp.name, fmt)
            sys.stdout.write(tmp.read())


def _cmd_decode(ns: argparse.Namespace) -> int:
    opt = _merge(ns)
    decoder_config, bok_config = _build_configs(opt)
    matrix = _read_input(opt)
    report = run_decode(
        matrix,
        decoder_config,
        bok_config,
        seed=int(opt["seed"]),
        tau=float(opt["tau"]),
        coverage_trials=int(opt["trials"]),
        emit_probs=bool(opt.get("emit_probs")),
    )
    _emit_report(report, opt)
    return 0


def _parse_grid(opt: dict) -> dict:
    grid = {}
    axes = {
        "decoder": ("kind", str),
        "tau": ("tau", float),
        "lam": ("lam", float),
        "k": ("k", int),
        "p": ("p", float),
        "K": ("K", int),
        "beta_bar": ("beta_bar", float),
        "steps": ("steps", int),
        "eta": ("eta", float),
    }
    for flag, (axis, cast) in axes.items():
        raw = opt.get(f"grid_{flag}")
        if raw is None:
            continue
        try:
            grid[axis] = [cast(item) for item in str(raw).split(",") if item != ""]
        except ValueError:
            raise _UsageError(f"cannot parse grid values for --{flag}: {raw!r}")
    return grid


def _cmd_sweep(ns: argparse.Namespace) -> int:
    opt = _merge(ns)
    grid = _parse_grid(opt)
    matrix = _read_input(opt)
    report = run_sweep(matrix, grid, trials=int(opt["trials"]), seed=int(opt["seed"]))
    if opt.get("out"):
        write_sweep_csv(report, opt["out"])
    else:
        import tempfile

        with tempfile.NamedTemporaryFile("r", suffix=".csv") as tmp:
            write_sweep_csv(report, tmp.name)
            sys.stdout.write(tmp.read())
    return 0


def _cmd_verify(ns: argparse.Namespace) -> int:
    opt = _merge(ns)
    decoder_config, bok_config = _build_configs(opt)
    matrix = _read_input(opt)
    cert_tol = opt.get("cert_tol")
    report, violations = verify_run(
        matrix,
        decoder_config,
        bok_config,
        tau=float(opt["tau"]),
        cert_tol=None if cert_tol is None else float(cert_tol),
    )
    summary = report.summary()
    print(
        f"checked {summary['steps']} steps: "
        f"max active residual {summary['max_kkt_active_residual']:.3e}, "
        f"max inactive violation {summary['max_kkt_inactive_violation']:.3e}"
    )
    if violations:
        print(f"certificate violated at steps: {violations}", file=sys.stderr)
        return 3
    return 0


def _cmd_coverage_sim(ns: argparse.Namespace) -> int:
    opt = _merge(ns)
    decoder_config, bok_config = _build_configs(opt)
    matrix = make_synthetic_logits(
        opt["family"],
        n=int(opt["n"]),
        rows=int(opt["rows"]),
        peakedness=float(opt["peakedness"]),
        seed=int(opt["seed"]),
    )
    report = run_decode(
        matrix,
        decoder_config,
        bok_config,
        seed=int(opt["seed"]),
        tau=float(opt["tau"]),
        coverage_trials=int(opt["trials"]),
        coverage_k=int(opt["K"]),
        weight_scheme=_parse_weight_scheme(opt["weights"]),
    )
    _emit_report(report, opt)
    return 0


def _cmd_gen(ns: argparse.Namespace) -> int:
    opt = _merge(ns)
    if not opt.get("out"):
        raise _UsageError("--out is required for gen")
    matrix = make_synthetic_logits(
        opt["family"],
        n=int(opt["n"]),
        rows=int(opt["rows"]),
        peakedness=float(opt["peakedness"]),
        seed=int(opt["seed"]),
    )
    write_logits(opt["out"], matrix, opt["format"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplexdec", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    decode = subs.add_parser("decode", help="decode a logits file into a per-step report")
    _add_io_flags(decode)
    _add_decoder_flags(decode)
    decode.add_argument("--report-format", dest="report_format", choices=REPORT_FORMATS,
                        default=None, help="report format (default csv)")
    decode.add_argument("--trials", type=int, default=None,
                        help="Monte-Carlo coverage trials per step (default 0 = off)")
    decode.add_argument("--emit-probs", dest="emit_probs", action="store_true",
                        help="include full probability vectors (jsonl reports only)")
    decode.set_defaults(func=_cmd_decode)

    sweep = subs.add_parser("sweep", help="run a hyperparameter grid and emit one CSV row per cell")
    _add_io_flags(sweep)
    sweep.add_argument("--trials", type=int, default=None,
                       help="Monte-Carlo coverage trials per step (default 0 = off)")
    for flag in ("decoder", "tau", "lambda", "k", "p", "K", "beta-bar", "steps", "eta"):
        dest = "grid_" + flag.replace("-", "_")
        if flag == "lambda":
            dest = "grid_lam"
        sweep.add_argument(f"--{flag}", dest=dest, default=None,
                           help=f"comma-separated grid values for {flag}")
    sweep.set_defaults(func=_cmd_sweep)

    verify = subs.add_parser("verify", help="run optimality certificates; exit 3 on violation")
    _add_io_flags(verify)
    _add_decoder_flags(verify)
    verify.add_argument("--cert-tol", dest="cert_tol", type=float, default=None,
                        help="certificate tolerance (default 1e-8 closed forms, 1e-6 bok)")
    verify.set_defaults(func=_cmd_verify)

    sim = subs.add_parser("coverage-sim", help="decode a synthetic score family with coverage columns")
    _add_io_flags(sim, needs_input=False)
    _add_decoder_flags(sim)
    sim.add_argument("--report-format", dest="report_format", choices=REPORT_FORMATS,
                     default=None, help="report format (default csv)")
    sim.add_argument("--trials", type=int, default=None,
                     help="Monte-Carlo coverage trials per step (default 0 = off)")
    sim.add_argument("--family", choices=SCORE_FAMILIES, default=None,
                     help="synthetic score family (default peaked)")
    sim.add_argument("--n", type=int, default=None, help="vocabulary size (default 32)")
    sim.add_argument("--rows", type=int, default=None, help="decode steps (default 8)")
    sim.add_argument("--peakedness", type=float, default=None,
                     help="family concentration parameter (default 5.0)")
    sim.set_defaults(func=_cmd_coverage_sim)

    gen = subs.add_parser("gen", help="emit a synthetic logits file")
    _add_io_flags(gen, needs_input=False)
    gen.add_argument("--format", choices=LOGIT_FORMATS, default=None,
                     help="logits file format (default jsonl)")
    gen.add_argument("--family", choices=SCORE_FAMILIES, default=None)
    gen.add_argument("--n", type=int, default=None)
    gen.add_argument("--rows", type=int, default=None)
    gen.add_argument("--peakedness", type=float, default=None)
    gen.set_defaults(func=_cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"simplexdec: error: {exc}", file=sys.stderr)
        return 1
    try:
        return ns.func(ns)
    except _UsageError as exc:
        print(f"simplexdec: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, DecodeError) as exc:
        from .io import BadMagic, InconsistentVocabSize, IoError, Malformed, NonFiniteValue

        if isinstance(exc, (Malformed, InconsistentVocabSize, BadMagic, NonFiniteValue, IoError)):
            print(f"simplexdec: data error: {exc}", file=sys.stderr)
            return 2
        print(f"simplexdec: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
