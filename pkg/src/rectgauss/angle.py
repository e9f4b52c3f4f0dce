"""Pairwise row angles from joint exceedance frequencies.

For ``z ~ N(0, I)`` and non-zero ``u, v`` at angle ``theta``,
``P(u.z > 0, v.z > 0) = (pi - theta) / (2 pi)``. With a non-negative bias,
``x_i > b_i`` exactly when ``W_i . z > 0``.
"""
from __future__ import annotations

import math

import numpy as np

from .core import SampleMatrix


def orthant_prob_to_angle(p_hat: float) -> float:
    """Invert the orthant identity, clipped to ``[0, pi]``."""
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"probability out of range: {p_hat}")
    return min(max(math.pi - 2.0 * math.pi * p_hat, 0.0), math.pi)


def _data(samples) -> np.ndarray:
    return samples.data if isinstance(samples, SampleMatrix) else np.asarray(samples, dtype=float)


def joint_exceedance(samples, i: int, j: int, b_hat) -> float:
    x = _data(samples)
    if x.shape[0] == 0:
        raise ValueError("no samples")
    b_hat = np.asarray(b_hat, dtype=float)
    return float(np.mean((x[:, i] > b_hat[i]) & (x[:, j] > b_hat[j])))


def estimate_angle(samples, i: int, j: int, b_hat) -> float:
    if i == j:
        raise ValueError("need two distinct coordinates")
    return orthant_prob_to_angle(joint_exceedance(samples, i, j, b_hat))


def exceedance_matrix(samples, b_hat) -> np.ndarray:
    """All pairwise joint exceedance frequencies at once (``d x d``).

    Entry ``(i, j)`` counts rows with ``x_i > b_i`` and ``x_j > b_j``; the
    count is accumulated in float64, which is exact below 2**53 rows.
    """
    x = _data(samples)
    if x.shape[0] == 0:
        raise ValueError("no samples")
    ind = (x > np.asarray(b_hat, dtype=float)).astype(np.float64)
    return (ind.T @ ind) / x.shape[0]


def angle_matrix(samples, b_hat) -> np.ndarray:
    p = np.clip(exceedance_matrix(samples, b_hat), 0.0, 1.0)
    theta = np.clip(np.pi - 2.0 * np.pi * p, 0.0, np.pi)
    np.fill_diagonal(theta, 0.0)
    return theta
