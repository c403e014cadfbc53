"""Prototype sources, input importance and per-patient interpretation reports."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from temppnet.autodiff import ops
from temppnet.autodiff.tensor import Tensor, backward, no_grad
from temppnet.errors import DataValidationError
from temppnet.evidence.stable_json import write_json
from temppnet.evidence.tables import write_csv
from temppnet.interpret.svg import Series, line_chart
from temppnet.methods.gait_features import StrideSummary, stride_interval_summary, walking_samples
from temppnet.model.encoder import ReceptiveField, patches_per_segment, receptive_field
from temppnet.model.network import PreparedPatient, TempPNet, predict_proba, prepare_patient
from temppnet.sensors.preprocessing import MODEL_RATE_HZ
from temppnet.sensors.records import PatientRecord

logger = logging.getLogger(__name__)

IMPORTANCE_THRESHOLD = 1e-8
SAMPLES_PER_DAY = 4
JACOBIAN_CHUNK = 32
REPORT_NAME = "report.json"


@dataclass(frozen=True, slots=True)
class PrototypeSource:
    """Where symptom prototype ``m`` presents most strongly. ``patch`` is 1-based."""

    symptom: int
    patient_index: int
    patient_id: str
    test_index: int
    patch: int
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "symptom": self.symptom,
            "patient_index": self.patient_index,
            "patient_id": self.patient_id,
            "test_index": self.test_index,
            "patch": self.patch,
            "score": self.score,
        }


@dataclass(frozen=True, slots=True, eq=False)
class ImportanceResult:
    patch: int
    arithmetic_field: ReceptiveField
    scores: np.ndarray
    field_start: int | None
    field_end: int | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "patch": self.patch,
            "arithmetic_field": self.arithmetic_field.to_dict(),
            "importance_field": None
            if self.field_start is None
            else {"start": self.field_start, "end": self.field_end},
            "max_importance": float(self.scores.max()),
        }


def _prepared(
    patients: Sequence[PatientRecord | PreparedPatient], rate_hz: int
) -> list[PreparedPatient]:
    return [p if isinstance(p, PreparedPatient) else prepare_patient(p, rate_hz) for p in patients]


def patch_score_table(model: TempPNet, patient: PreparedPatient) -> np.ndarray:
    """Eval-mode (N, n_o, M) symptom scores for every test and patch."""

    with no_grad():
        h = model.encoder.encode(patient.inputs, training=False)
        return np.array(model.symptoms.patch_scores(h).data)


def locate_prototype_source(
    patients: Sequence[PatientRecord | PreparedPatient],
    model: TempPNet,
    m: int,
    rate_hz: int = MODEL_RATE_HZ,
) -> PrototypeSource:
    """Exhaustive argmax of patch score over (patient, test, patch); ties to the lowest index."""

    if not patients:
        raise DataValidationError("locate_prototype_source needs a nonempty corpus")
    if not 0 <= m < model.config.n_symptoms:
        raise DataValidationError(f"symptom index must lie in 0..{model.config.n_symptoms - 1}")
    best: PrototypeSource | None = None
    for u, patient in enumerate(_prepared(patients, rate_hz)):
        scores = patch_score_table(model, patient)[:, :, m]
        flat = int(np.argmax(scores))
        i, o = np.unravel_index(flat, scores.shape)
        score = float(scores[i, o])
        if best is None or score > best.score:
            best = PrototypeSource(
                symptom=m,
                patient_index=u,
                patient_id=patient.patient_id,
                test_index=int(i),
                patch=int(o) + 1,
                score=score,
            )
    assert best is not None
    return best


def importance_scores(test: np.ndarray, model: TempPNet, patch: int) -> ImportanceResult:
    """Per-timepoint Frobenius norm of d H_patch / d input over the patch's own segment.

    ``test`` is one prepared (3, 3, L) test and ``patch`` is 1-based. The segment is
    replicated so each copy back-propagates one embedding coordinate.
    """

    field = receptive_field(patch, model.config)
    position = (patch - 1) % patches_per_segment(model.config)
    segment = np.asarray(test, dtype=np.float64)[field.segment - 1]
    n_e = model.config.n_e
    squared = np.zeros(segment.shape[1], dtype=np.float64)

    for start in range(0, n_e, JACOBIAN_CHUNK):
        coords = np.arange(start, min(start + JACOBIAN_CHUNK, n_e))
        x = Tensor(np.repeat(segment[None], coords.size, axis=0), requires_grad=True)
        h = model.encoder.forward_segments(x, training=False)
        picked = h[np.arange(coords.size), coords, position]
        backward(ops.sum_(picked))
        assert x.grad is not None
        squared += (x.grad**2).sum(axis=(0, 1))
    model.store.zero_grad()

    scores = np.sqrt(squared)
    above = np.flatnonzero(scores > IMPORTANCE_THRESHOLD)
    return ImportanceResult(
        patch=patch,
        arithmetic_field=field,
        scores=scores,
        field_start=int(above[0]) if above.size else None,
        field_end=int(above[-1]) if above.size else None,
    )


def trend_grid(model: TempPNet, samples_per_day: int = SAMPLES_PER_DAY) -> np.ndarray:
    """Day grid over [0, horizon + window] with ``samples_per_day`` steps per day."""

    if samples_per_day < 1:
        raise DataValidationError("samples_per_day must be >= 1")
    span = model.config.horizon_days + model.config.window_days
    n = int(round(span * samples_per_day)) + 1
    return np.linspace(0.0, span, n)


def write_trend_files(
    model: TempPNet, k: int, out_dir: Path, samples_per_day: int = SAMPLES_PER_DAY
) -> dict[str, str]:
    if model.trends is None:
        raise DataValidationError(f"the {model.ablation} variant has no trend prototypes")
    grid = trend_grid(model, samples_per_day)
    curve = model.trends.trend_curve(k, grid)
    n_symptoms = curve.shape[1]
    header = ["t_days", *(f"severity_{m}" for m in range(n_symptoms))]
    csv_path = write_csv(
        out_dir / f"trend_{k}.csv",
        header,
        ([float(t), *(float(v) for v in row)] for t, row in zip(grid, curve, strict=True)),
    )
    tag = "depression" if model.trends.is_depression(k) else "non-depression"
    svg = line_chart(
        [Series(f"symptom {m}", grid, curve[:, m]) for m in range(n_symptoms)],
        title=f"Trend prototype {k} ({tag})",
        x_label="days",
        y_range=(0.0, 1.0),
    )
    svg_path = out_dir / f"trend_{k}.svg"
    svg_path.write_text(svg, encoding="utf-8", newline="\n")
    return {"csv": csv_path.name, "svg": svg_path.name}


def write_symptom_files(
    prepared_test: np.ndarray, importance: ImportanceResult, m: int, out_dir: Path
) -> dict[str, str]:
    segment = np.asarray(prepared_test)[importance.arithmetic_field.segment - 1]
    idx = np.arange(segment.shape[1])
    csv_path = write_csv(
        out_dir / f"symptom_{m}.csv",
        ["sample_index", "x", "y", "z", "importance"],
        (
            [int(i), float(segment[0, i]), float(segment[1, i]), float(segment[2, i]), float(s)]
            for i, s in zip(idx, importance.scores, strict=True)
        ),
    )
    svg = line_chart(
        [Series(axis, idx.astype(np.float64), segment[a]) for a, axis in enumerate("xyz")],
        title=f"Symptom prototype {m}: {importance.arithmetic_field.segment_name} segment",
        x_label="sample",
        band=importance.scores,
    )
    svg_path = out_dir / f"symptom_{m}.svg"
    svg_path.write_text(svg, encoding="utf-8", newline="\n")
    return {"csv": csv_path.name, "svg": svg_path.name}


def usual_gait(
    records: Sequence[PatientRecord], min_separation: int = 3
) -> dict[str, float] | None:
    """Mean stride summary over every test of the non-depressed patients."""

    rows = [
        stride_interval_summary(walking_samples(t), t.rate_hz, min_separation).to_dict()
        for r in records
        if r.label == 0
        for t in r.tests
    ]
    if not rows:
        return None
    return {key: float(np.mean([row[key] for row in rows])) for key in rows[0]}


def source_gait(record: PatientRecord, source: PrototypeSource, model: TempPNet) -> StrideSummary:
    test = record.tests[source.test_index]
    segment = test.segments[receptive_field(source.patch, model.config).segment - 1]
    return stride_interval_summary(segment, test.rate_hz)


def top_symptom(progression: np.ndarray) -> int:
    """Symptom with the highest mean severity; ties to the lower index."""

    return int(np.argmax(np.asarray(progression).mean(axis=1)))


def render_report(
    patient: PatientRecord,
    model: TempPNet,
    out_dir: str | Path,
    *,
    corpus: Sequence[PatientRecord] | None = None,
    rate_hz: int = MODEL_RATE_HZ,
    samples_per_day: int = SAMPLES_PER_DAY,
    top_trends: int = 1,
) -> Path:
    """Write report.json plus trend and symptom CSV/SVG files for one patient.

    ``corpus`` is searched for the top symptom's source and supplies the
    non-depressed baseline; it defaults to the patient alone.
    """

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataValidationError(f"Cannot write report to {out}: {exc}") from exc
    pool = list(corpus) if corpus else [patient]

    prepared = prepare_patient(patient, rate_hz)
    prediction = predict_proba(prepared, model)
    files: dict[str, Any] = {"trends": {}, "symptoms": {}}

    ranked = prediction.ranked_trends()
    trends = []
    for rank, (k, strength, tag) in enumerate(ranked):
        entry: dict[str, Any] = {"rank": rank + 1, "k": k, "strength": strength, "class": tag}
        if prediction.start_times is not None:
            entry["start_time_days"] = float(prediction.start_times[k])
        trends.append(entry)
    for k, _, _ in ranked[:top_trends]:
        files["trends"][str(k)] = write_trend_files(model, k, out, samples_per_day)

    m = top_symptom(prediction.progression)
    source = locate_prototype_source(pool, model, m, rate_hz)
    source_record = pool[source.patient_index]
    source_test = prepare_patient(source_record, rate_hz).inputs[source.test_index]
    importance = importance_scores(source_test, model, source.patch)
    files["symptoms"][str(m)] = write_symptom_files(source_test, importance, m, out)

    grid = trend_grid(model, samples_per_day)
    report: dict[str, Any] = {
        "patient_id": patient.patient_id,
        "label": patient.label,
        "ablation": model.ablation,
        "probability": prediction.probability,
        "logit": prediction.logit,
        "predicted_label": prediction.predicted_label,
        "timepoints": prediction.timepoints.tolist(),
        "progression": prediction.progression.tolist(),
        "trends": trends,
        "trend_interval_days": [float(grid[0]), float(grid[-1])],
        "samples_per_day": samples_per_day,
        "top_symptom": {
            "m": m,
            "severity_series": prediction.progression[m].tolist(),
            "source": source.to_dict(),
            "importance": importance.to_dict(),
            "gait_summary_proxy": source_gait(source_record, source, model).to_dict(),
            "usual_case_proxy": usual_gait(pool),
        },
        "files": files,
    }
    path = write_json(out / REPORT_NAME, report)
    logger.info("Wrote interpretation report for %s to %s", patient.patient_id, out)
    return path


def render_prototype_gallery(
    corpus: Sequence[PatientRecord],
    model: TempPNet,
    out_dir: str | Path,
    *,
    rate_hz: int = MODEL_RATE_HZ,
    samples_per_day: int = SAMPLES_PER_DAY,
) -> Path:
    """Curves for all trend prototypes and source locations for all symptom prototypes."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prepared = _prepared(corpus, rate_hz)
    trends: list[dict[str, Any]] = []
    if model.trends is not None:
        for k in range(model.trends.n_trends):
            files = write_trend_files(model, k, out, samples_per_day)
            tag = "depression" if model.trends.is_depression(k) else "non-depression"
            trends.append({"k": k, "class": tag, "files": files})

    symptoms: list[dict[str, Any]] = []
    for m in range(model.config.n_symptoms):
        source = locate_prototype_source(prepared, model, m)
        field = receptive_field(source.patch, model.config)
        symptoms.append({"source": source.to_dict(), "receptive_field": field.to_dict()})

    path = write_json(
        out / "gallery.json",
        {"ablation": model.ablation, "trends": trends, "symptoms": symptoms},
    )
    logger.info(
        "Wrote prototype gallery (%d trends, %d symptoms) to %s", len(trends), len(symptoms), out
    )
    return path
