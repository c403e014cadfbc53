"""Quaternion [x, y, z, w] to rotation-matrix conversion and random rotations."""

from __future__ import annotations

import numpy as np

from temppnet.errors import DataValidationError

UNIT_TOLERANCE = 1e-3


def rotation_matrices(quaternions: np.ndarray) -> np.ndarray:
    """Vectorized rotation matrices for an (..., 4) array of unit quaternions."""

    q = np.asarray(quaternions, dtype=np.float64)
    x, y, z, w = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    r = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    r[..., 0, 0] = w * w + x * x - y * y - z * z
    r[..., 0, 1] = 2 * x * y - 2 * w * z
    r[..., 0, 2] = 2 * x * z + 2 * w * y
    r[..., 1, 0] = 2 * x * y + 2 * w * z
    r[..., 1, 1] = w * w - x * x + y * y - z * z
    r[..., 1, 2] = 2 * y * z - 2 * w * x
    r[..., 2, 0] = 2 * x * z - 2 * w * y
    r[..., 2, 1] = 2 * y * z + 2 * w * x
    r[..., 2, 2] = w * w - x * x - y * y + z * z
    return r


def quaternion_to_rotation(q: np.ndarray | list[float]) -> np.ndarray:
    """3x3 rotation matrix of ``q``; a non-unit quaternion is normalized first."""

    arr = np.asarray(q, dtype=np.float64)
    if arr.shape != (4,):
        raise DataValidationError(f"quaternion must have 4 components, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise DataValidationError("cannot build a rotation from a zero or non-finite quaternion")
    return rotation_matrices(arr / norm)


def sample_random_quaternion(
    rng: np.random.Generator, theta: float | None = None
) -> np.ndarray:
    """Axis from three normalized Uniform(0, 1) draws, angle from Uniform(0, 2*pi).

    An all-zero axis draw is redrawn. ``theta`` pins the angle (theta=0 gives identity).
    """

    while True:
        axis = rng.uniform(0.0, 1.0, size=3)
        norm = float(np.linalg.norm(axis))
        if norm > 0.0:
            break
    axis = axis / norm
    angle = rng.uniform(0.0, 2.0 * np.pi) if theta is None else float(theta)
    half = angle / 2.0
    return np.array([*(axis * np.sin(half)), np.cos(half)], dtype=np.float64)
