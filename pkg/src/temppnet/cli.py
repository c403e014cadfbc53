"""The ``temppnet`` command line.

Every subcommand resolves its settings first (defaults < ``--config`` < flags), writes
``resolved_config.json`` into its output directory, and finishes with
``execution_log.json`` and ``manifest.sha256``.

Exit codes: 0 success, 1 usage error, 2 data/validation/checkpoint error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, NoReturn

import numpy as np

from temppnet import __version__
from temppnet.config import ABLATIONS, GaitFeatureConfig, RunConfig, SuiteConfig, resolve_run_config
from temppnet.errors import CheckpointError, DataValidationError, NumericalError
from temppnet.evaluation.econ import econ_analysis
from temppnet.evaluation.experiments import run_experiment_suite
from temppnet.evaluation.metrics import MetricsRow, f1_score, majority_baseline
from temppnet.evidence.hash_utils import EXECUTION_LOG_NAME, write_manifest_sha256
from temppnet.evidence.stable_json import write_json
from temppnet.evidence.tables import write_csv
from temppnet.interpret.interpreter import render_prototype_gallery, render_report
from temppnet.logging_setup import configure_logging
from temppnet.methods.gait_features import (
    FEATURE_NAMES,
    METHOD_VERSION,
    extract_test_features,
    fingerprint_feature_config,
    patient_feature_matrix,
)
from temppnet.methods.reference_classifiers import reference_classify
from temppnet.model.checkpoint import CHECKPOINT_NAME, load_checkpoint, save_checkpoint
from temppnet.model.network import evaluate
from temppnet.model.training import train
from temppnet.sensors.corpus import load_corpus
from temppnet.sensors.preprocessing import apply_observation_window
from temppnet.sensors.records import PatientRecord
from temppnet.synth.generator import CORPUS_NAME, generate_corpus

UTC = timezone.utc  # datetime.UTC alias (3.11+); kept for Python 3.10

logger = logging.getLogger("temppnet.cli")

RESOLVED_CONFIG_NAME = "resolved_config.json"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# Shared helpers


def _require(value: Any, flag: str, command: str) -> Any:
    if value is None:
        raise DataValidationError(f"{command} requires {flag}")
    return value


def _load_corpus(run: RunConfig) -> list[PatientRecord]:
    path = _require(run.data, "--data", run.command)
    return load_corpus(path, window_days=run.corpus_window_days)


def _load(run: RunConfig) -> list[PatientRecord]:
    """The corpus cut to the observation window before each patient's last test."""

    return [apply_observation_window(r, run.window_days) for r in _load_corpus(run)]


def _checkpoint_path(run: RunConfig) -> Path:
    path = Path(_require(run.checkpoint, "--checkpoint", run.command))
    return path / CHECKPOINT_NAME if path.is_dir() else path


def _finish(run: RunConfig, out: Path, argv: list[str], started: datetime) -> None:
    write_json(
        out / EXECUTION_LOG_NAME,
        {
            "command": run.command,
            "argv": argv,
            "temppnet_version": __version__,
            "started_utc": started.isoformat(),
            "finished_utc": datetime.now(UTC).isoformat(),
        },
    )
    write_manifest_sha256(out)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(run: RunConfig, out: Path) -> dict[str, Any]:
    generated = generate_corpus(run.generator_config(), out / CORPUS_NAME)
    return {"corpus": str(generated.corpus_path), "patients": len(generated.records)}


def cmd_extract_features(run: RunConfig, out: Path) -> dict[str, Any]:
    records = _load(run)
    config = GaitFeatureConfig(include_rest=run.include_rest)
    header = ["patient_id", "label", "t_days", *FEATURE_NAMES, "low_peak_axes"]
    rows = []
    for record in records:
        for test in record.tests:
            row = extract_test_features(test, config).to_row()
            rows.append(
                [record.patient_id, record.label, test.test_time_days]
                + [row[name] for name in FEATURE_NAMES]
                + [row["low_peak_axes"]]
            )
    write_csv(out / "features.csv", header, rows)
    write_json(
        out / "features.json",
        {
            "method_version": METHOD_VERSION,
            "config": config.to_dict(),
            "config_fingerprint": fingerprint_feature_config(config),
            "feature_names": list(FEATURE_NAMES),
            "rows": len(rows),
        },
    )
    return {"rows": len(rows)}


def cmd_train(run: RunConfig, out: Path) -> dict[str, Any]:
    records = _load(run)
    train_config = run.train_config()
    result = train(records, run.model_config(), train_config)
    path = save_checkpoint(
        result.model,
        out / CHECKPOINT_NAME,
        seed=train_config.seed,
        train_config=train_config,
        split=result.split,
    )
    write_json(out / "history.json", result.history_dict())
    return {"checkpoint": str(path), "best_epoch": result.best_epoch}


def _metrics_only(run: RunConfig, out: Path) -> dict[str, Any]:
    if run.precision is None or run.recall is None:
        raise DataValidationError("metrics-only evaluate needs both --precision and --recall")
    econ = econ_analysis(run.precision, run.recall)
    metrics = MetricsRow(run.precision, run.recall, f1_score(run.precision, run.recall))
    payload = {"mode": "metrics-only", "metrics": metrics.to_dict(), "econ": econ.to_dict()}
    write_json(out / "evaluation.json", payload)
    return payload


def cmd_evaluate(run: RunConfig, out: Path) -> dict[str, Any]:
    if run.precision is not None or run.recall is not None:
        return _metrics_only(run, out)
    loaded = load_checkpoint(_checkpoint_path(run))
    records = _load(run)
    by_id = {r.patient_id: r for r in records}
    split = loaded.split
    if split is not None and all(i in by_id for i in split.train + split.test):
        train_set = [by_id[i] for i in split.train]
        test_set = [by_id[i] for i in split.test]
    else:
        logger.warning("Checkpoint split does not match the corpus; evaluating on every patient")
        train_set, test_set = records, records

    rate = loaded.train_config.rate_hz if loaded.train_config else run.rate_hz
    result = evaluate(test_set, loaded.model, rate)
    write_csv(
        out / "predictions.csv",
        ["patient_id", "label", "probability"],
        (
            [pid, int(y), float(p)]
            for pid, y, p in zip(
                result.patient_ids, result.labels, result.probabilities, strict=True
            )
        ),
    )
    train_y = np.array([r.label for r in train_set])
    test_y = np.array([r.label for r in test_set])
    baselines: dict[str, Any] = {"majority": majority_baseline(train_y, test_y).to_dict()}
    if len(set(train_y.tolist())) == 2:
        reference = reference_classify(
            patient_feature_matrix(train_set), train_y, patient_feature_matrix(test_set), test_y
        )
        baselines.update({name: row.to_dict() for name, row in reference.items()})

    payload = {
        "mode": "checkpoint",
        "ablation": loaded.model.ablation,
        "n_patients": len(test_set),
        "metrics": result.metrics.to_dict(),
        "econ": econ_analysis(result.metrics.precision, result.metrics.recall).to_dict(),
        "baselines": baselines,
    }
    write_json(out / "evaluation.json", payload)
    return payload


def cmd_interpret(run: RunConfig, out: Path) -> dict[str, Any]:
    patient_id = _require(run.patient, "--patient", run.command)
    checkpoint = _checkpoint_path(run)
    loaded = load_checkpoint(checkpoint)
    records = _load(run)
    matches = [r for r in records if r.patient_id == patient_id]
    if not matches:
        raise DataValidationError(f"Patient {patient_id!r} not found in {run.data}")
    rate = loaded.train_config.rate_hz if loaded.train_config else run.rate_hz
    path = render_report(matches[0], loaded.model, out, corpus=records, rate_hz=rate)
    return {"report": str(path)}


def cmd_sweep(run: RunConfig, out: Path) -> dict[str, Any]:
    records = _load_corpus(run)
    suite = SuiteConfig(runs=run.runs)
    overrides = {k: v for k, v in run.extra.items() if k in ("window_weeks", "rates_hz")}
    if overrides:
        suite = SuiteConfig(
            runs=run.runs,
            window_weeks=tuple(overrides.get("window_weeks", suite.window_weeks)),
            rates_hz=tuple(overrides.get("rates_hz", suite.rates_hz)),
        )
    result = run_experiment_suite(
        records,
        suite,
        run.model_config(),
        run.train_config(),
        corpus_window_days=run.corpus_window_days,
    )
    result.write_csv(out / "suite.csv")
    write_json(out / "suite_notes.json", {"suite": suite.to_dict(), "skipped": result.notes})
    return {"rows": len(result.rows), "skipped": len(result.notes)}


def cmd_gallery(run: RunConfig, out: Path) -> dict[str, Any]:
    loaded = load_checkpoint(_checkpoint_path(run))
    records = _load(run)
    rate = loaded.train_config.rate_hz if loaded.train_config else run.rate_hz
    path = render_prototype_gallery(records, loaded.model, out, rate_hz=rate)
    return {"gallery": str(path)}


COMMANDS: dict[str, Callable[[RunConfig, Path], dict[str, Any]]] = {
    "generate": cmd_generate,
    "extract-features": cmd_extract_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "interpret": cmd_interpret,
    "sweep": cmd_sweep,
    "gallery": cmd_gallery,
}


# ---------------------------------------------------------------------------
# Parser


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Flat JSON file of settings; flags override it")
    parser.add_argument("--out", help="Output directory (default: $TEMPPNET_OUTPUT_ROOT/<command>)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--window-days", dest="window_days", type=float, default=None)
    parser.add_argument("--rate-hz", dest="rate_hz", type=int, default=None)
    parser.add_argument("--log-level", dest="log_level", default=None)
    parser.add_argument("--log-file", dest="log_file", default=None)


def _corpus_window(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--corpus-window-days",
        dest="corpus_window_days",
        type=float,
        default=None,
        help="Span of the whole corpus; --window-days is the observation window inside it",
    )


def _data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="Corpus JSONL file")
    _corpus_window(parser)


def _model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--ablation", choices=ABLATIONS, default=None)
    parser.add_argument("--channels", default=None, help="Comma list of encoder widths")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="temppnet",
        description="Interpretable temporal prototype network for walking-test sensor data.",
    )
    parser.add_argument("--version", action="version", version=f"temppnet {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", help="Write a synthetic corpus")
    _common(p)
    _corpus_window(p)
    p.add_argument("--corpus-rate-hz", dest="corpus_rate_hz", type=int, default=None)
    p.add_argument("--patients", type=int, default=None)
    p.add_argument("--balance", type=float, default=None)
    p.add_argument("--with-quaternions", dest="with_quaternions", action="store_true", default=None)

    p = sub.add_parser("extract-features", help="Handcrafted gait features per test (CSV)")
    _common(p)
    _data(p)
    p.add_argument("--include-rest", dest="include_rest", action="store_true", default=None)

    p = sub.add_parser("train", help="Train a model and write checkpoint.json + history.json")
    _common(p)
    _data(p)
    _model(p)

    p = sub.add_parser("evaluate", help="Metrics and economic benefit")
    _common(p)
    _data(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--precision", type=float, default=None)
    p.add_argument("--recall", type=float, default=None)

    p = sub.add_parser("interpret", help="Interpretation report for one patient")
    _common(p)
    _data(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--patient", default=None)

    p = sub.add_parser("sweep", help="Ablation, window and rate experiment table")
    _common(p)
    _data(p)
    _model(p)
    p.add_argument("--runs", type=int, default=None)

    p = sub.add_parser("gallery", help="Overview of all learned prototypes")
    _common(p)
    _data(p)
    p.add_argument("--checkpoint", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        flags = {k: v for k, v in vars(args).items() if k != "command"}
        run = resolve_run_config(args.command, flags)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    try:
        configure_logging(run.log_level, Path(run.log_file) if run.log_file else None)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    started = datetime.now(UTC)
    out = run.out_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / RESOLVED_CONFIG_NAME, run.to_dict())
        summary = COMMANDS[run.command](run, out)
        _finish(run, out, argv, started)
    except (DataValidationError, CheckpointError, NumericalError, FileNotFoundError) as exc:
        logger.error("%s failed: %s", run.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    logger.info("%s finished: %s", run.command, summary)
    print(str(out))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
