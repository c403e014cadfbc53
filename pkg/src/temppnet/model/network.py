from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import special

from temppnet.autodiff import ops
from temppnet.autodiff.tensor import Tensor, no_grad
from temppnet.config import ModelConfig, validate_ablation
from temppnet.errors import DataValidationError, NumericalError
from temppnet.evaluation.metrics import MetricsRow, compute_metrics
from temppnet.model.encoder import Encoder
from temppnet.model.parameters import ParameterStore
from temppnet.model.prototypes import (
    StartTimeNet,
    SymptomLayer,
    SymptomProgressionMatrix,
    TrendLayer,
)
from temppnet.sensors.preprocessing import MODEL_RATE_HZ, prepare_test
from temppnet.sensors.records import PatientRecord, WalkingTest

INIT_STREAM = 0x1417


@dataclass(frozen=True, slots=True, eq=False)
class PreparedPatient:
    """Model-ready tests: (N, 3, 3, 300) inputs with their day offsets, in time order."""

    patient_id: str
    label: int
    timepoints: np.ndarray
    inputs: np.ndarray

    @property
    def n_tests(self) -> int:
        return int(self.inputs.shape[0])

    def with_inputs(self, inputs: np.ndarray) -> PreparedPatient:
        return PreparedPatient(self.patient_id, self.label, self.timepoints, inputs)


def prepare_tests(
    tests: Sequence[WalkingTest], rate_hz: int = MODEL_RATE_HZ
) -> tuple[np.ndarray, np.ndarray]:
    ordered = sorted(tests, key=lambda t: t.test_time_days)
    if not ordered:
        raise DataValidationError("at least one walking test is required")
    inputs = np.stack([prepare_test(t, rate_hz) for t in ordered])
    times = np.array([t.test_time_days for t in ordered], dtype=np.float64)
    return inputs, times


def prepare_patient(record: PatientRecord, rate_hz: int = MODEL_RATE_HZ) -> PreparedPatient:
    inputs, times = prepare_tests(record.tests, rate_hz)
    return PreparedPatient(record.patient_id, record.label, times, inputs)


@dataclass(frozen=True, slots=True, eq=False)
class PatientForward:
    logit: Tensor
    progression: Tensor
    patch_scores: Tensor
    timepoints: np.ndarray
    trend_strengths: Tensor | None = None
    start_times: Tensor | None = None


@dataclass(frozen=True, slots=True, eq=False)
class Prediction:
    patient_id: str
    probability: float
    logit: float
    progression: np.ndarray
    timepoints: np.ndarray
    patch_scores: np.ndarray
    trend_strengths: np.ndarray | None
    start_times: np.ndarray | None
    n_trends_per_class: int

    @property
    def predicted_label(self) -> int:
        return int(self.probability > 0.5)

    def ranked_trends(self) -> list[tuple[int, float, str]]:
        """(k, strength, class tag) sorted by strength, ties to the lower k."""

        if self.trend_strengths is None:
            return []
        strengths = self.trend_strengths
        order = sorted(range(strengths.size), key=lambda k: (-strengths[k], k))
        return [
            (
                k,
                float(strengths[k]),
                "depression" if k < self.n_trends_per_class else "non-depression",
            )
            for k in order
        ]


class TempPNet:
    """The full model or one of its ablation variants.

    ``none`` and ``no_t0`` classify with trend strengths; ``last_severity`` and
    ``avg_severity`` drop the trend layer for a linear classifier over S.
    """

    def __init__(self, config: ModelConfig | None = None, ablation: str = "none", seed: int = 0):
        self.config = config or ModelConfig()
        self.ablation = validate_ablation(ablation)
        self.store = ParameterStore()
        rng = np.random.default_rng(np.random.SeedSequence([seed, INIT_STREAM]))
        self.encoder = Encoder(self.store, self.config, rng)
        self.symptoms = SymptomLayer(self.store, self.config, rng)
        self.trends: TrendLayer | None = None
        self.start_net: StartTimeNet | None = None
        self.classifier_weight: Tensor | None = None
        self.classifier_bias: Tensor | None = None
        if self.uses_trends:
            self.trends = TrendLayer(self.store, self.config, rng)
            if self.ablation == "none":
                self.start_net = StartTimeNet(self.store, self.config, rng)
        else:
            self.classifier_weight = self.store.add(
                "classifier.weight", rng.normal(0.0, self.config.init_scale, self.config.n_symptoms)
            )
            self.classifier_bias = self.store.add("classifier.bias", np.zeros(1))

    @property
    def uses_trends(self) -> bool:
        return self.ablation in ("none", "no_t0")

    # -- forward -----------------------------------------------------------

    def start_times(self, progression: Tensor, timepoints: np.ndarray) -> Tensor | None:
        if self.start_net is None:
            return None
        return self.start_net(progression, timepoints)

    def head(
        self, progression: Tensor, timepoints: np.ndarray
    ) -> tuple[Tensor, Tensor | None, Tensor | None]:
        """(logit, trend strengths, start times) from one patient's M x N matrix."""

        if self.trends is not None:
            t0 = self.start_times(progression, timepoints)
            strengths, _ = self.trends.strengths(progression, timepoints, t0)
            k = self.config.n_trends_per_class
            logit = ops.sub(ops.sum_(strengths[:k]), ops.sum_(strengths[k:]))
            return logit, strengths, t0

        assert self.classifier_weight is not None and self.classifier_bias is not None
        if self.ablation == "last_severity":
            features = progression[:, progression.shape[1] - 1]
        else:
            features = ops.mean(progression, axis=1)
        logit = ops.add(ops.matmul(self.classifier_weight, features), self.classifier_bias[0])
        return logit, None, None

    def forward(
        self,
        batch: Sequence[PreparedPatient],
        *,
        training: bool,
        update_stats: bool = True,
    ) -> list[PatientForward]:
        """Encode every test of the batch in one pass, then score each patient."""

        if not batch:
            raise DataValidationError("forward needs at least one patient")
        inputs = np.concatenate([p.inputs for p in batch], axis=0)
        h = self.encoder.encode(inputs, training=training, update_stats=update_stats)
        scores = self.symptoms.patch_scores(h)

        outputs: list[PatientForward] = []
        offset = 0
        for patient in batch:
            n = patient.n_tests
            patient_scores = scores[offset : offset + n]
            offset += n
            progression = self.symptoms.progression(patient_scores)
            logit, strengths, t0 = self.head(progression, patient.timepoints)
            outputs.append(
                PatientForward(
                    logit=logit,
                    progression=progression,
                    patch_scores=patient_scores,
                    timepoints=patient.timepoints,
                    trend_strengths=strengths,
                    start_times=t0,
                )
            )
        return outputs

    def predict(self, patient: PreparedPatient) -> Prediction:
        with no_grad():
            out = self.forward([patient], training=False)[0]
        logit = out.logit.item()
        return Prediction(
            patient_id=patient.patient_id,
            probability=float(special.expit(logit)),
            logit=logit,
            progression=np.array(out.progression.data),
            timepoints=np.array(patient.timepoints),
            patch_scores=np.array(out.patch_scores.data),
            trend_strengths=None
            if out.trend_strengths is None
            else np.array(out.trend_strengths.data),
            start_times=None if out.start_times is None else np.array(out.start_times.data),
            n_trends_per_class=self.config.n_trends_per_class,
        )


def ablate(config: ModelConfig, flag: str, seed: int = 0) -> TempPNet:
    """Build the variant named by ``flag``; unknown flags are rejected."""

    return TempPNet(config, ablation=validate_ablation(flag), seed=seed)


def _as_prepared(patient: PatientRecord | PreparedPatient, rate_hz: int) -> PreparedPatient:
    if isinstance(patient, PreparedPatient):
        return patient
    return prepare_patient(patient, rate_hz)


def predict_proba(
    patient: PatientRecord | PreparedPatient, model: TempPNet, rate_hz: int = MODEL_RATE_HZ
) -> Prediction:
    """P(y=1 | X) with the evidence behind it: all 2K strengths and the progression matrix."""

    return model.predict(_as_prepared(patient, rate_hz))


def build_progression_matrix(
    tests: Sequence[WalkingTest], model: TempPNet, rate_hz: int = MODEL_RATE_HZ
) -> SymptomProgressionMatrix:
    inputs, times = prepare_tests(tests, rate_hz)
    with no_grad():
        h = model.encoder.encode(inputs, training=False)
        progression = model.symptoms.progression(model.symptoms.patch_scores(h))
    return SymptomProgressionMatrix(values=np.array(progression.data), timepoints=times)


def infer_start_time(
    model: TempPNet, progression: np.ndarray, timepoints: np.ndarray, k: int
) -> float:
    """t0 of trend ``k``; 0 for the variant without start-time inference."""

    if model.start_net is None:
        return 0.0
    with no_grad():
        t0 = model.start_net(Tensor(progression), np.asarray(timepoints, dtype=np.float64))
    return float(t0.data[k])


def trend_strength(
    model: TempPNet, progression: np.ndarray, timepoints: np.ndarray, k: int
) -> float:
    if model.trends is None:
        raise DataValidationError(f"the {model.ablation} variant has no trend prototypes")
    with no_grad():
        s = Tensor(progression)
        t0 = model.start_times(s, np.asarray(timepoints, dtype=np.float64))
        strengths, _ = model.trends.strengths(s, timepoints, t0)
    return float(strengths.data[k])


def sample_progression(
    model: TempPNet,
    k: int,
    timepoints: np.ndarray,
    rng: np.random.Generator,
    *,
    reference: np.ndarray | None = None,
    zero_noise: bool = False,
) -> SymptomProgressionMatrix:
    """Generate S from trend ``k``.

    t0 comes from the inference net run on ``reference`` (an observed M x N matrix at
    the same timepoints); without a reference the trend is sampled unshifted.
    """

    if model.trends is None:
        raise DataValidationError(f"the {model.ablation} variant has no trend prototypes")
    t0 = 0.0 if reference is None else infer_start_time(model, reference, timepoints, k)
    return model.trends.sample_progression(k, timepoints, rng, t0=t0, zero_noise=zero_noise)


# ---------------------------------------------------------------------------
# Objective


@dataclass(frozen=True, slots=True, eq=False)
class LossBreakdown:
    total: Tensor
    bce: float
    r_s: float
    r_t: float


def _class_rows(labels: np.ndarray, value: int) -> np.ndarray:
    return np.flatnonzero(labels == value)


def binary_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    y = np.asarray(labels, dtype=np.float64)
    ll = ops.add(
        ops.mul(ops.log_sigmoid(logits), y),
        ops.mul(ops.log_sigmoid(ops.neg(logits)), 1.0 - y),
    )
    return ops.neg(ops.mean(ll))


def symptom_regularizer(avg_severity: Tensor, labels: np.ndarray) -> Tensor:
    """Mean over symptoms of (non-depressed mean - depressed mean) of per-patient averages.

    A class missing from the batch contributes 0.
    """

    labels = np.asarray(labels)
    total: Tensor = Tensor(0.0)
    neg_rows = _class_rows(labels, 0)
    pos_rows = _class_rows(labels, 1)
    if neg_rows.size:
        total = ops.add(total, ops.mean(avg_severity[neg_rows]))
    if pos_rows.size:
        total = ops.sub(total, ops.mean(avg_severity[pos_rows]))
    return total


def trend_regularizer(strengths: Tensor, labels: np.ndarray, n_per_class: int) -> Tensor:
    """Per-class mean of (max wrong-class strength - min right-class strength)."""

    labels = np.asarray(labels)
    k = n_per_class
    total: Tensor = Tensor(0.0)
    pos_rows = _class_rows(labels, 1)
    neg_rows = _class_rows(labels, 0)
    if pos_rows.size:
        rows = strengths[pos_rows]
        gap = ops.add(ops.max_(rows[:, k:], axis=1), ops.max_(ops.neg(rows[:, :k]), axis=1))
        total = ops.add(total, ops.mean(gap))
    if neg_rows.size:
        rows = strengths[neg_rows]
        gap = ops.add(ops.max_(rows[:, :k], axis=1), ops.max_(ops.neg(rows[:, k:]), axis=1))
        total = ops.add(total, ops.mean(gap))
    return total


def _require_finite(stage: str, tensor: Tensor) -> None:
    if not np.all(np.isfinite(tensor.data)):
        raise NumericalError(f"non-finite {stage} in the training objective")


def objective(
    forwards: Sequence[PatientForward], labels: Sequence[int] | np.ndarray, config: ModelConfig
) -> LossBreakdown:
    """Mean cross-entropy + lambda_S * R_S + lambda_T * R_T over one batch."""

    y = np.asarray(labels, dtype=np.int64)
    if len(forwards) != y.size or y.size == 0:
        raise DataValidationError(f"{len(forwards)} forward passes but {y.size} labels")
    logits = ops.stack([f.logit for f in forwards])
    _require_finite("logits", logits)
    bce = binary_cross_entropy(logits, y)
    total = bce

    avg = ops.stack([ops.mean(f.progression, axis=1) for f in forwards])
    _require_finite("symptom progressions", avg)
    r_s = symptom_regularizer(avg, y)
    if config.lambda_s:
        total = ops.add(total, ops.mul(r_s, config.lambda_s))

    r_t_value = 0.0
    if forwards[0].trend_strengths is not None:
        strengths = ops.stack([f.trend_strengths for f in forwards])  # type: ignore[misc]
        _require_finite("trend strengths", strengths)
        r_t = trend_regularizer(strengths, y, config.n_trends_per_class)
        r_t_value = r_t.item()
        if config.lambda_t:
            total = ops.add(total, ops.mul(r_t, config.lambda_t))

    _require_finite("loss", total)
    return LossBreakdown(total=total, bce=bce.item(), r_s=r_s.item(), r_t=r_t_value)


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True, slots=True)
class EvaluationResult:
    patient_ids: tuple[str, ...]
    probabilities: np.ndarray
    labels: np.ndarray
    metrics: MetricsRow


def evaluate(
    patients: Sequence[PatientRecord | PreparedPatient],
    model: TempPNet,
    rate_hz: int = MODEL_RATE_HZ,
) -> EvaluationResult:
    prepared = [_as_prepared(p, rate_hz) for p in patients]
    if not prepared:
        raise DataValidationError("evaluation needs at least one patient")
    probs = np.array([model.predict(p).probability for p in prepared], dtype=np.float64)
    labels = np.array([p.label for p in prepared], dtype=np.int64)
    return EvaluationResult(
        patient_ids=tuple(p.patient_id for p in prepared),
        probabilities=probs,
        labels=labels,
        metrics=compute_metrics(probs, labels),
    )
