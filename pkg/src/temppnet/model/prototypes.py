"""Symptom prototypes, time encoding, trend prototypes and the start-time inference net."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from temppnet.autodiff import ops
from temppnet.autodiff.tensor import Tensor, as_tensor, no_grad
from temppnet.config import ModelConfig
from temppnet.errors import ShapeError
from temppnet.model.parameters import ParameterStore

logger = logging.getLogger(__name__)

SEVERITY_FLOOR = 1e-6
SEVERITY_CEIL = 1.0 - 1e-6
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, slots=True)
class SymptomScore:
    severity: float
    patch_scores: np.ndarray
    best_patch: int


@dataclass(frozen=True, slots=True, eq=False)
class SymptomProgressionMatrix:
    """M x N severities with one column per test, columns in time order."""

    values: np.ndarray
    timepoints: np.ndarray

    @property
    def n_symptoms(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_tests(self) -> int:
        return int(self.values.shape[1])


# ---------------------------------------------------------------------------
# Pure functions


def symptom_severity(
    feature_matrix: np.ndarray, prototypes: np.ndarray, m: int, gamma: float = -1e-4
) -> SymptomScore:
    """exp(gamma - ||H_o - p_m||^2) per patch and its maximum over patches.

    ``feature_matrix`` is n_e x n_o; ``prototypes`` is M x n_e.
    """

    h = np.asarray(feature_matrix, dtype=np.float64)
    p = np.asarray(prototypes, dtype=np.float64)
    if not 0 <= m < p.shape[0]:
        raise ShapeError("symptom_severity", p.shape, detail=f"m={m}")
    if h.shape[0] != p.shape[1]:
        raise ShapeError("symptom_severity", h.shape, p.shape)
    d2 = ((h - p[m][:, None]) ** 2).sum(axis=0)
    scores = np.exp(gamma - d2)
    best = int(np.argmax(scores))
    return SymptomScore(severity=float(scores[best]), patch_scores=scores, best_patch=best)


def time_encode(
    t: Tensor | np.ndarray | float, omega: Tensor | np.ndarray, theta: Tensor | np.ndarray
) -> Tensor:
    """sqrt(1/n_d) [cos(omega t + theta), sin(omega t + theta)] along a new last axis."""

    t, omega, theta = as_tensor(t), as_tensor(omega), as_tensor(theta)
    if omega.shape != theta.shape or omega.ndim != 1:
        raise ShapeError("time_encode", omega.shape, theta.shape)
    arg = ops.add(ops.mul(ops.reshape(t, (*t.shape, 1)), omega), theta)
    phi = ops.concat([ops.cos(arg), ops.sin(arg)], axis=-1)
    return ops.mul(phi, math.sqrt(1.0 / omega.shape[0]))


def logistic_normal_logpdf(z: Tensor | np.ndarray, mu: Tensor | np.ndarray) -> Tensor:
    """Log density of the identity-covariance logistic-normal, reduced over the last axis.

        sum_m log(1 / (z_m (1 - z_m))) - (M/2) log(2 pi) - 0.5 ||logit(z) - mu||^2

    ``z`` and ``mu`` broadcast against each other. Entries outside [1e-6, 1 - 1e-6] are
    clamped with a warning.
    """

    z, mu = as_tensor(z), as_tensor(mu)
    if z.shape[-1] != mu.shape[-1]:
        raise ShapeError("logistic_normal_logpdf", z.shape, mu.shape)
    if np.any((z.data < SEVERITY_FLOOR) | (z.data > SEVERITY_CEIL)):
        logger.warning("logistic_normal_logpdf: clamping values outside (0, 1) boundaries")
        z = ops.clip(z, SEVERITY_FLOOR, SEVERITY_CEIL)
    m = z.shape[-1]
    barrier = ops.sum_(ops.neg(ops.add(ops.log(z), ops.log(ops.sub(1.0, z)))), axis=-1)
    quad = ops.sum_(ops.square(ops.sub(ops.logit(z), mu)), axis=-1)
    return ops.sub(ops.sub(barrier, ops.mul(quad, 0.5)), 0.5 * m * LOG_2PI)


def logistic_normal_sample(
    mu: np.ndarray, rng: np.random.Generator, *, zero_noise: bool = False
) -> np.ndarray:
    """sigmoid(mu + eps) with eps ~ N(0, I)."""

    mu = np.asarray(mu, dtype=np.float64)
    eps = np.zeros_like(mu) if zero_noise else rng.standard_normal(mu.shape)
    return special.expit(mu + eps)


# ---------------------------------------------------------------------------
# Parameterized layers


class TimeEncoding:
    def __init__(
        self, store: ParameterStore, prefix: str, config: ModelConfig, rng: np.random.Generator
    ):
        self.prefix = prefix
        self.omega = store.add(
            f"{prefix}.omega",
            np.geomspace(config.omega_min, config.omega_max, config.n_d),
        )
        self.theta = store.add(f"{prefix}.theta", rng.uniform(0.0, 2.0 * np.pi, config.n_d))

    def __call__(self, t: Tensor | np.ndarray | float) -> Tensor:
        return time_encode(t, self.omega, self.theta)


class SymptomLayer:
    def __init__(self, store: ParameterStore, config: ModelConfig, rng: np.random.Generator):
        self.gamma = config.gamma
        self.prototypes = store.add(
            "symptoms.prototypes",
            rng.normal(0.0, config.init_scale, (config.n_symptoms, config.n_e)),
        )

    def patch_scores(self, h: Tensor) -> Tensor:
        """(N, n_o, n_e) patch embeddings to (N, n_o, M) patch scores."""

        n, n_o, n_e = h.shape
        diff = ops.sub(ops.reshape(h, (n, n_o, 1, n_e)), self.prototypes)
        d2 = ops.sum_(ops.square(diff), axis=-1)
        return ops.exp(ops.sub(self.gamma, d2))

    def progression(self, scores: Tensor) -> Tensor:
        """Max over patches, clamped, as the M x N progression matrix."""

        severities = ops.clip(ops.max_(scores, axis=1), SEVERITY_FLOOR, SEVERITY_CEIL)
        return ops.transpose(severities, (1, 0))


class TrendLayer:
    """2K trend prototypes; rows 0..K-1 are depression trends, K..2K-1 non-depression."""

    def __init__(self, store: ParameterStore, config: ModelConfig, rng: np.random.Generator):
        self.n_per_class = config.n_trends_per_class
        self.coefficients = store.add(
            "trends.coefficients",
            rng.normal(
                0.0, config.init_scale, (config.n_trends, config.n_symptoms, 2 * config.n_d)
            ),
        )
        self.encoding = TimeEncoding(store, "trends.time", config, rng)

    @property
    def n_trends(self) -> int:
        return int(self.coefficients.shape[0])

    def is_depression(self, k: int) -> bool:
        return k < self.n_per_class

    def pre_sigmoid(self, aligned_times: Tensor | np.ndarray) -> Tensor:
        """(2K, N) aligned times to (2K, N, M) trend means."""

        phi = self.encoding(aligned_times)
        return ops.matmul(phi, ops.transpose(self.coefficients, (0, 2, 1)))

    def trend_value(self, k: int, t: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(sigmoid value, pre-sigmoid value) of trend ``k`` at time(s) ``t``; shape (..., M)."""

        with no_grad():
            phi = self.encoding(np.asarray(t, dtype=np.float64))
            tilde = ops.matmul(phi, ops.transpose(self.coefficients[k], (1, 0)))
        return special.expit(tilde.data), np.array(tilde.data)

    def trend_curve(self, k: int, t_grid: np.ndarray) -> np.ndarray:
        """(len(t_grid), M) curve of trend ``k``."""

        return self.trend_value(k, np.asarray(t_grid, dtype=np.float64).reshape(-1))[0]

    def strengths(
        self, progression: Tensor, timepoints: np.ndarray, t0: Tensor | None
    ) -> tuple[Tensor, Tensor]:
        """sigmoid(sum_i logpdf(S_i | mean_k(t_i - t0_k))) per trend, plus the log-likelihoods."""

        times = np.asarray(timepoints, dtype=np.float64)[None, :]
        n_trends = self.n_trends
        if t0 is None:
            aligned: Tensor | np.ndarray = np.repeat(times, n_trends, axis=0)
        else:
            aligned = ops.sub(times, ops.reshape(t0, (n_trends, 1)))
        mu = self.pre_sigmoid(aligned)
        columns = ops.transpose(progression, (1, 0))
        log_lik = ops.sum_(logistic_normal_logpdf(columns, mu), axis=-1)
        return ops.sigmoid(log_lik), log_lik

    def sample_progression(
        self,
        k: int,
        timepoints: np.ndarray,
        rng: np.random.Generator,
        *,
        t0: float = 0.0,
        zero_noise: bool = False,
    ) -> SymptomProgressionMatrix:
        """Draw S column by column from the logistic-normal around trend ``k``."""

        times = np.asarray(timepoints, dtype=np.float64)
        _, tilde = self.trend_value(k, times - t0)
        values = logistic_normal_sample(tilde, rng, zero_noise=zero_noise)
        return SymptomProgressionMatrix(values=values.T, timepoints=times)


class StartTimeNet:
    """GRU over S_i concatenated with a separate time encoding; t0_k = -n_w sigmoid(w_k . h_N)."""

    def __init__(self, store: ParameterStore, config: ModelConfig, rng: np.random.Generator):
        hidden = config.n_e
        n_in = config.n_symptoms + 2 * config.n_d
        bound = 1.0 / math.sqrt(hidden)
        self.hidden = hidden
        self.horizon = config.horizon_days
        self.w_ih = store.add("start.gru.w_ih", rng.uniform(-bound, bound, (3 * hidden, n_in)))
        self.w_hh = store.add("start.gru.w_hh", rng.uniform(-bound, bound, (3 * hidden, hidden)))
        self.b_ih = store.add("start.gru.b_ih", rng.uniform(-bound, bound, 3 * hidden))
        self.b_hh = store.add("start.gru.b_hh", rng.uniform(-bound, bound, 3 * hidden))
        self.readout = store.add(
            "start.readout", rng.normal(0.0, config.init_scale, (config.n_trends, hidden))
        )
        self.encoding = TimeEncoding(store, "start.time", config, rng)

    def last_hidden(self, progression: Tensor, timepoints: np.ndarray) -> Tensor:
        phi = self.encoding(np.asarray(timepoints, dtype=np.float64))
        h: Tensor = Tensor(np.zeros(self.hidden))
        for i in range(progression.shape[1]):
            x = ops.concat([progression[:, i], phi[i]], axis=0)
            h = ops.gru_cell(x, h, self.w_ih, self.w_hh, self.b_ih, self.b_hh)
        return h

    def __call__(self, progression: Tensor, timepoints: np.ndarray) -> Tensor:
        h = self.last_hidden(progression, timepoints)
        return ops.mul(ops.sigmoid(ops.matmul(self.readout, h)), -self.horizon)
