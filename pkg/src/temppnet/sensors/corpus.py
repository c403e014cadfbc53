"""JSON Lines corpus: one object per walking test.

    {"patient_id": str, "label": 0|1, "t_days": float, "rate_hz": int,
     "outbound": [[x, y, z], ...], "return": [...], "rest": [...],
     "quaternions": {"outbound": [[x, y, z, w], ...], ...}}   # optional

A patient's lines must be contiguous. When quaternions are present the samples are
local-frame and are rotated to the global frame on load.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from temppnet.errors import DataValidationError
from temppnet.evidence.stable_json import write_jsonl
from temppnet.sensors.preprocessing import to_global_frame
from temppnet.sensors.records import SEGMENT_NAMES, PatientRecord, WalkingTest

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_DAYS = 14.0
_REQUIRED_KEYS = ("patient_id", "label", "t_days", "rate_hz", *SEGMENT_NAMES)


def _parse_line(raw: str, where: str) -> tuple[str, int, float, WalkingTest]:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{where}: malformed JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise DataValidationError(f"{where}: expected a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise DataValidationError(f"{where}: missing keys {', '.join(missing)}")

    patient_id = obj["patient_id"]
    if not isinstance(patient_id, str) or not patient_id:
        raise DataValidationError(f"{where}: patient_id must be a non-empty string")
    label = obj["label"]
    if label not in (0, 1) or isinstance(label, bool):
        raise DataValidationError(f"{where}: label must be 0 or 1")
    try:
        t_days = float(obj["t_days"])
        rate_hz = int(obj["rate_hz"])
    except (TypeError, ValueError):
        raise DataValidationError(f"{where}: t_days and rate_hz must be numeric") from None

    quaternions: Any = obj.get("quaternions")
    segments: list[np.ndarray] = []
    try:
        for pos, name in enumerate(SEGMENT_NAMES):
            samples = np.asarray(obj[name], dtype=np.float64).reshape(-1, 3)
            if quaternions is not None:
                q = quaternions[name] if isinstance(quaternions, dict) else quaternions[pos]
                q_arr = np.array(
                    [[np.nan] * 4 if row is None else row for row in q], dtype=np.float64
                )
                result = to_global_frame(samples, q_arr)
                if result.dropped:
                    logger.warning("%s: %s dropped %d samples", where, name, result.dropped)
                samples = result.samples
            segments.append(samples)
        test = WalkingTest(t_days, tuple(segments), rate_hz)  # type: ignore[arg-type]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise DataValidationError(f"{where}: invalid segment data ({exc})") from None
    return patient_id, int(label), t_days, test


def _build_record(
    patient_id: str, label: int, tests: list[WalkingTest], window_days: float
) -> PatientRecord:
    tests = sorted(tests, key=lambda t: t.test_time_days)
    times = [t.test_time_days for t in tests]
    if len(set(times)) != len(times):
        raise DataValidationError(f"{patient_id}: duplicate test times")
    origin = times[0]
    rebased = tuple(t.with_time(t.test_time_days - origin) for t in tests)
    span = rebased[-1].test_time_days
    if span > window_days:
        raise DataValidationError(
            f"{patient_id}: test at day {span:g} lies outside the {window_days:g}-day window"
        )
    return PatientRecord(patient_id, rebased, label)


def load_corpus(path: str | Path, window_days: float = DEFAULT_WINDOW_DAYS) -> list[PatientRecord]:
    """Load, validate and re-base a corpus; patients are returned sorted by id."""

    p = Path(path)
    if not p.is_file():
        raise DataValidationError(f"Corpus file not found: {p}")

    groups: dict[str, tuple[int, list[WalkingTest]]] = {}
    current: str | None = None
    with p.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            where = f"{p.name}:{lineno}"
            patient_id, label, _, test = _parse_line(raw, where)
            if patient_id != current:
                if patient_id in groups:
                    raise DataValidationError(f"{where}: duplicate patient_id {patient_id!r}")
                groups[patient_id] = (label, [])
                current = patient_id
            expected_label, tests = groups[patient_id]
            if label != expected_label:
                raise DataValidationError(f"{where}: {patient_id} has conflicting labels")
            tests.append(test)

    records = [
        _build_record(pid, label, tests, window_days)
        for pid, (label, tests) in sorted(groups.items())
    ]
    logger.info("Loaded %d patients from %s", len(records), p)
    return records


def record_rows(record: PatientRecord) -> list[dict[str, Any]]:
    return [
        {
            "patient_id": record.patient_id,
            "label": record.label,
            "t_days": test.test_time_days,
            "rate_hz": test.rate_hz,
            **{name: seg.tolist() for name, seg in zip(SEGMENT_NAMES, test.segments, strict=True)},
        }
        for test in record.tests
    ]


def write_corpus(records: list[PatientRecord], path: str | Path) -> Path:
    rows: list[dict[str, Any]] = []
    for record in records:
        rows.extend(record_rows(record))
    return write_jsonl(path, rows, make_parents=True)
