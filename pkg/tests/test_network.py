from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from temppnet.autodiff.gradcheck import gradcheck
from temppnet.autodiff.tensor import Tensor
from temppnet.errors import DataValidationError, NumericalError
from temppnet.model.network import (
    TempPNet,
    ablate,
    binary_cross_entropy,
    build_progression_matrix,
    evaluate,
    infer_start_time,
    objective,
    predict_proba,
    prepare_patient,
    sample_progression,
    symptom_regularizer,
    trend_regularizer,
    trend_strength,
)
from tests.fixtures import patient_record, small_model_config


@pytest.fixture(scope="module")
def model() -> TempPNet:
    return TempPNet(small_model_config(), seed=3)


def _micro_corpus():
    return [
        prepare_patient(patient_record("P1", 1, times=(0.0, 2.0, 5.0), seed=1)),
        prepare_patient(patient_record("P2", 0, times=(0.0, 4.0), seed=2)),
    ]


def test_prediction_carries_its_evidence(model: TempPNet) -> None:
    prediction = predict_proba(patient_record(), model)

    assert 0.0 < prediction.probability < 1.0
    assert prediction.progression.shape == (2, 3)
    assert prediction.patch_scores.shape == (3, 15, 2)
    assert prediction.trend_strengths is not None
    assert prediction.trend_strengths.shape == (2,)
    assert prediction.start_times is not None
    assert prediction.predicted_label == int(prediction.probability > 0.5)


def test_logit_is_depression_strength_minus_non_depression(model: TempPNet) -> None:
    prediction = predict_proba(patient_record(), model)
    s = prediction.trend_strengths

    assert prediction.logit == pytest.approx(s[0] - s[1])
    assert prediction.probability == pytest.approx(1.0 / (1.0 + math.exp(-prediction.logit)))


def test_ranked_trends_sorted_by_strength(model: TempPNet) -> None:
    ranked = predict_proba(patient_record(), model).ranked_trends()

    assert len(ranked) == 2
    assert ranked[0][1] >= ranked[1][1]
    assert {tag for _, _, tag in ranked} == {"depression", "non-depression"}


def test_progression_matrix_ignores_input_order(model: TempPNet) -> None:
    record = patient_record(seed=5)

    forward = build_progression_matrix(record.tests, model)
    backward_order = build_progression_matrix(tuple(reversed(record.tests)), model)

    np.testing.assert_allclose(forward.values, backward_order.values)
    np.testing.assert_array_equal(backward_order.timepoints, [0.0, 2.0, 5.0])
    np.testing.assert_allclose(forward.values, predict_proba(record, model).progression)
    assert np.all((forward.values > 0.0) & (forward.values < 1.0))


def test_same_seed_same_parameters() -> None:
    a = TempPNet(small_model_config(), seed=1)
    b = TempPNet(small_model_config(), seed=1)
    c = TempPNet(small_model_config(), seed=2)

    for name, tensor in a.store.items():
        np.testing.assert_array_equal(tensor.data, b.store[name].data)
    name = "symptoms.prototypes"
    assert not np.array_equal(a.store[name].data, c.store[name].data)


def test_ablation_variants_have_the_expected_parts() -> None:
    config = small_model_config()
    no_t0 = ablate(config, "no_t0")
    last = ablate(config, "last_severity")

    assert no_t0.trends is not None and no_t0.start_net is None
    assert last.trends is None and "classifier.weight" in last.store
    assert infer_start_time(no_t0, np.full((2, 2), 0.5), np.array([0.0, 1.0]), 0) == 0.0
    assert predict_proba(patient_record(), last).ranked_trends() == []
    with pytest.raises(DataValidationError, match="Unknown ablation"):
        ablate(config, "no_trends")


@pytest.mark.parametrize("flag", ["last_severity", "avg_severity"])
def test_severity_classifiers_are_linear_in_s(flag: str) -> None:
    variant = ablate(small_model_config(), flag, seed=4)
    prediction = predict_proba(patient_record(), variant)
    s = prediction.progression
    features = s[:, -1] if flag == "last_severity" else s.mean(axis=1)

    w = variant.store["classifier.weight"].data
    b = variant.store["classifier.bias"].data[0]
    assert prediction.logit == pytest.approx(float(w @ features + b))
    assert prediction.trend_strengths is None


def test_trend_queries_reject_variants_without_trends(model: TempPNet) -> None:
    variant = ablate(small_model_config(), "avg_severity")
    s = np.full((2, 2), 0.5)
    times = np.array([0.0, 1.0])

    with pytest.raises(DataValidationError, match="no trend prototypes"):
        trend_strength(variant, s, times, 0)
    with pytest.raises(DataValidationError, match="no trend prototypes"):
        sample_progression(variant, 0, times, np.random.default_rng(0))
    assert 0.0 < trend_strength(model, s, times, 1) < 1.0


def test_sample_progression_uses_reference_start_time(model: TempPNet) -> None:
    times = np.array([0.0, 1.0, 3.0])
    reference = np.full((2, 3), 0.3)
    t0 = infer_start_time(model, reference, times, 0)

    sampled = sample_progression(
        model, 0, times, np.random.default_rng(0), reference=reference, zero_noise=True
    )

    expected = model.trends.trend_curve(0, times - t0).T
    np.testing.assert_allclose(sampled.values, expected)


def test_binary_cross_entropy_of_zero_logits() -> None:
    loss = binary_cross_entropy(Tensor([0.0, 0.0]), np.array([1, 0]))

    assert loss.item() == pytest.approx(math.log(2.0))


def test_symptom_regularizer_example() -> None:
    avg = Tensor([[0.1], [0.8]])

    assert symptom_regularizer(avg, np.array([0, 1])).item() == pytest.approx(-0.7)
    assert symptom_regularizer(avg, np.array([1, 1])).item() == pytest.approx(-0.45)


def test_trend_regularizer_example() -> None:
    strengths = Tensor([[0.9, 0.2]])

    assert trend_regularizer(strengths, np.array([1]), 1).item() == pytest.approx(-0.7)
    assert trend_regularizer(strengths, np.array([0]), 1).item() == pytest.approx(0.7)


def test_objective_without_regularizers_is_cross_entropy() -> None:
    config = small_model_config(lambda_s=0.0, lambda_t=0.0)
    variant = TempPNet(config, seed=0)
    batch = _micro_corpus()

    forwards = variant.forward(batch, training=False)
    loss = objective(forwards, [p.label for p in batch], config)

    assert loss.total.item() == pytest.approx(loss.bce)


def test_objective_adds_weighted_regularizers(model: TempPNet) -> None:
    batch = _micro_corpus()

    forwards = model.forward(batch, training=False)
    loss = objective(forwards, [1, 0], model.config)

    expected = loss.bce + model.config.lambda_s * loss.r_s + model.config.lambda_t * loss.r_t
    assert loss.total.item() == pytest.approx(expected)
    with pytest.raises(DataValidationError):
        objective(forwards, [1], model.config)


@pytest.mark.parametrize(
    ("field_name", "stage"),
    [("logit", "logits"), ("progression", "symptom progressions")],
)
def test_objective_rejects_non_finite_forward_values(
    model: TempPNet, field_name: str, stage: str
) -> None:
    forwards = model.forward(_micro_corpus(), training=False)
    clean = getattr(forwards[0], field_name)
    poisoned = replace(forwards[0], **{field_name: Tensor(np.full(clean.shape, np.nan))})

    with pytest.raises(NumericalError, match=f"non-finite {stage}"):
        objective([poisoned, forwards[1]], [1, 0], model.config)


def test_full_objective_gradients_match_central_differences() -> None:
    config = small_model_config(n_d=2)
    variant = TempPNet(config, seed=11)
    batch = _micro_corpus()
    labels = [p.label for p in batch]

    def fn() -> Tensor:
        forwards = variant.forward(batch, training=True, update_stats=False)
        return objective(forwards, labels, config).total

    names = ["symptoms.prototypes", "trends.coefficients", "start.readout", "encoder.bn4.gamma"]
    result = gradcheck(fn, [variant.store[n] for n in names])

    assert result.max_rel_error < 1e-4, result


def test_evaluate_reports_metrics(model: TempPNet) -> None:
    result = evaluate(_micro_corpus(), model)

    assert result.patient_ids == ("P1", "P2")
    assert result.labels.tolist() == [1, 0]
    assert 0.0 <= result.metrics.f1 <= 1.0
    with pytest.raises(DataValidationError):
        evaluate([], model)
