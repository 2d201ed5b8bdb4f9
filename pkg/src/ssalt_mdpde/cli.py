"""Command-line front end.

Commands
--------
``fit``              fit a dataset over a grid of beta values
``characteristics``  lifetime characteristics from a fit (or fixed parameters)
``simulate``         write one simulated dataset
``mse-study``        Monte Carlo MSE study
``coverage-study``   Monte Carlo coverage study
``export-dataset``   write the bundled electronic-components dataset

Exit codes: 0 success, 2 input error, 3 estimator does not exist,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .data import DatasetFile, electronic_components, format_dataset, read_dataset
from .errors import ConfigError, DomainError, NonexistenceError, SSALTError
from .model import StressProfile
from .report import ReportBundle, _hash, build_characteristics_report, build_fit_report
from .simulation import (
    StudyConfig,
    StudyResult,
    coverage_study,
    mse_study,
    replicate_rng,
    sample_experiment,
    study_config_from_dict,
)

log = logging.getLogger("ssalt_mdpde")

EXIT_OK, EXIT_INPUT, EXIT_NONEXISTENCE, EXIT_NUMERICAL = 0, 2, 3, 4
DEFAULT_BETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _probability(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _non_negative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssalt-mdpde", description="Robust estimation for simple step-stress life tests.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def output_options(p):
        p.add_argument("-o", "--output", type=Path, help="directory for the report files")
        p.add_argument("--format", choices=("csv", "json", "both"), default="both")
        p.add_argument("-q", "--quiet", action="store_true", help="do not print the text tables")

    def dataset_options(p):
        p.add_argument("dataset", nargs="?", type=Path, help="dataset CSV file")
        p.add_argument("--embedded", action="store_true", help="use the bundled electronic-components dataset")

    p = sub.add_parser("fit", help="fit a dataset for one or more beta values")
    dataset_options(p)
    p.add_argument("--beta", type=_non_negative, action="append", help="tuning parameter (repeatable)")
    p.add_argument("--confidence", type=_probability, default=0.95)
    output_options(p)

    p = sub.add_parser("characteristics", help="MTTF, reliability and quantile tables")
    p.add_argument("fit", nargs="?", type=Path, help="fit.json written by 'fit'")
    p.add_argument("--params", nargs=2, type=float, metavar=("A0", "A1"), help="use these parameters instead of a fit")
    p.add_argument("--dataset", type=Path, help="dataset supplying the design when --params is used")
    p.add_argument("--embedded", action="store_true", help="bundled dataset supplies the design with --params")
    p.add_argument("--beta", type=_non_negative, action="append", help="beta rows to keep, or the beta of --params")
    p.add_argument("--stress", type=float, action="append", help="stress level (repeatable; default x0, x1, x2)")
    p.add_argument("--mission-time", type=_non_negative, help="mission time for reliability, in data units")
    p.add_argument("--quantile-level", type=_probability, default=0.9)
    p.add_argument("--confidence", type=_probability, default=0.95)
    p.add_argument("--units", choices=("raw", "seconds", "minutes", "hours"), default="raw")
    output_options(p)

    p = sub.add_parser("simulate", help="write one simulated dataset")
    p.add_argument("config", type=Path, help="study config JSON")
    p.add_argument("-o", "--output", type=Path, required=True, help="dataset CSV to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicate", type=int, default=0, help="replicate index of the stream")
    p.add_argument("--contamination", type=float, help="contamination proportion (default: first level)")

    for name, helptext in (("mse-study", "Monte Carlo MSE study"), ("coverage-study", "Monte Carlo coverage study")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", type=Path, help="study config JSON")
        p.add_argument("-o", "--output", type=Path, required=True, help="directory for the CSV files")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=_positive_int)
        p.add_argument("-q", "--quiet", action="store_true")

    p = sub.add_parser("export-dataset", help="write the bundled dataset as CSV")
    p.add_argument("-o", "--output", type=Path, help="file to write (default: stdout)")
    return parser


# ---------------------------------------------------------------------------


def _load_dataset(path: Optional[Path], embedded: bool) -> tuple[DatasetFile, str]:
    if embedded == (path is not None):
        raise DomainError("give either a dataset file or --embedded")
    if embedded:
        return electronic_components(), "embedded:electronic-components"
    return read_dataset(path), os.fspath(path)


def _write_report(bundle: ReportBundle, args, stem: str) -> None:
    if args.output is not None:
        args.output.mkdir(parents=True, exist_ok=True)
        if args.format in ("csv", "both"):
            for name in bundle.tables:
                (args.output / f"{name}.csv").write_text(bundle.table_csv(name), encoding="utf-8", newline="")
        if args.format in ("json", "both"):
            (args.output / f"{stem}.json").write_text(bundle.to_json(), encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(bundle.to_json() if args.output is None and args.format == "json" else bundle.to_text())


def cmd_fit(args) -> int:
    dataset, source = _load_dataset(args.dataset, args.embedded)
    betas = tuple(args.beta) if args.beta else DEFAULT_BETAS
    bundle = build_fit_report(dataset, betas, args.confidence, source=source)
    _write_report(bundle, args, "fit")
    failed = [r for r in bundle.tables["parameters"] if r["error"]]
    for r in failed:
        log.error("beta=%g: %s", r["beta"], r["error"])
    return EXIT_NUMERICAL if failed else EXIT_OK


def _fit_from_json(path: Path):
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        ctx = payload["context"]
        profile = StressProfile(**ctx["profile"])
        rows = payload["tables"]["parameters"]
        fits = [
            {"beta": r["beta"], "a0": math.nan if r["a0"] is None else r["a0"], "a1": math.nan if r["a1"] is None else r["a1"]}
            for r in rows
        ]
        return fits, profile, int(ctx["n_units"]), ctx.get("time_unit", "raw")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DomainError(f"{path}: not a fit report ({exc})") from exc


def cmd_characteristics(args) -> int:
    if args.params is not None:
        if args.fit is not None:
            raise DomainError("give a fit report or --params, not both")
        dataset, source = _load_dataset(args.dataset, args.embedded)
        if args.beta and len(args.beta) > 1:
            raise DomainError("--params takes a single --beta")
        beta = args.beta[0] if args.beta else 0.0
        fits = [{"beta": beta, "a0": args.params[0], "a1": args.params[1]}]
        profile, n_units, unit = dataset.profile, dataset.data.n_units, dataset.time_unit
        source = f"params on {source}"
    else:
        if args.fit is None:
            raise DomainError("give a fit report or --params")
        fits, profile, n_units, unit = _fit_from_json(args.fit)
        source = os.fspath(args.fit)
        if args.beta:
            fits = [f for f in fits if any(math.isclose(f["beta"], b, abs_tol=1e-12) for b in args.beta)]
            if not fits:
                raise DomainError("none of the requested betas is in the fit report")
    bundle = build_characteristics_report(
        fits, profile, n_units, unit, args.stress, args.mission_time, args.quantile_level,
        args.confidence, args.units, source,
    )
    _write_report(bundle, args, "characteristics")
    return EXIT_OK


def _load_study_config(args) -> tuple[StudyConfig, dict]:
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DomainError(f"cannot read {args.config}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if isinstance(raw, dict):
        if getattr(args, "seed", None) is not None:
            raw["seed"] = args.seed
        if getattr(args, "jobs", None) is not None:
            raw["jobs"] = args.jobs
    return study_config_from_dict(raw), raw


def cmd_simulate(args) -> int:
    config, _ = _load_study_config(args)
    nu = config.contamination_levels[0] if args.contamination is None else args.contamination
    if args.replicate < 0:
        raise DomainError("--replicate must be non-negative")
    rng = replicate_rng(config.seed, args.replicate)
    data = sample_experiment(rng, config.sample_size, config.true_params, config.profile, config.contamination(nu))
    text = format_dataset(data, config.profile)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(text, encoding="utf-8", newline="")
    return EXIT_OK


def _failures_csv(result: StudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["contamination", "beta", "failed_fits", "replicates"])
    for (nu, b), count in result.failures.items():
        w.writerow([repr(nu), repr(b), count, result.config.replicates])
    return buf.getvalue()


def _run_study(args, study) -> int:
    config, raw = _load_study_config(args)
    result = study(config)
    out = args.output
    out.mkdir(parents=True, exist_ok=True)
    for metric in result.metrics:
        (out / f"{metric}.csv").write_text(result.matrix_csv(metric), encoding="utf-8", newline="")
    (out / "long.csv").write_text(result.long_csv(), encoding="utf-8", newline="")
    (out / "failures.csv").write_text(_failures_csv(result), encoding="utf-8", newline="")
    settings = {k: v for k, v in raw.items() if k != "jobs"}
    summary = {
        "tool": "ssalt-mdpde",
        "version": __version__,
        "command": args.command,
        "config_hash": _hash(settings),
        "seed": config.seed,
        "config": settings,
        "metrics": result.metrics,
        "failed_fits": sum(result.failures.values()),
    }
    (out / "study.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if not args.quiet:
        for metric in result.metrics:
            sys.stdout.write(f"== {metric} ==\n{result.matrix_csv(metric)}\n")
    return EXIT_OK


def cmd_export_dataset(args) -> int:
    ds = electronic_components()
    text = format_dataset(ds.data, ds.profile, ds.time_unit)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8", newline="")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "characteristics": cmd_characteristics,
    "simulate": cmd_simulate,
    "mse-study": lambda a: _run_study(a, mse_study),
    "coverage-study": lambda a: _run_study(a, coverage_study),
    "export-dataset": cmd_export_dataset,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NonexistenceError as exc:
        log.error("%s", exc)
        return EXIT_NONEXISTENCE
    except ConfigError as exc:
        for problem in exc.problems:
            log.error("config: %s", problem)
        return EXIT_INPUT
    except (DomainError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (ArithmeticError, SSALTError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
