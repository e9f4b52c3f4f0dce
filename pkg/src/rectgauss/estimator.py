"""One-layer estimators: the truncated-MLE + angle pipeline and the zero-bias noisy moment method."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .angle import angle_matrix
from .core import EstimatedModel, RandomStream, SampleMatrix
from .truncated_mle import SgdConfig, norm_bias_estimate

THREADS_ENV = "RECTGAUSS_THREADS"
BISECTION_ITERS = 60


def thread_cap(default: Optional[int] = None) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return default or (os.cpu_count() or 1)


def assemble_entry(sii: float, sjj: float, theta: float) -> float:
    return math.sqrt(sii * sjj) * math.cos(theta)


def _assemble(diag: np.ndarray, theta: np.ndarray) -> np.ndarray:
    d = diag.shape[0]
    sigma = np.diag(diag.astype(float))
    for i in range(d):
        for j in range(i + 1, d):
            sigma[i, j] = sigma[j, i] = assemble_entry(diag[i], diag[j], theta[i, j])
    return sigma


def _as_array(samples) -> np.ndarray:
    return samples.data if isinstance(samples, SampleMatrix) else np.asarray(samples, dtype=float)


def fit_one_layer(
    samples,
    cfg: SgdConfig = SgdConfig(),
    stream: Optional[RandomStream] = None,
    workers: Optional[int] = None,
) -> EstimatedModel:
    """Estimate ``(W W^T, b)`` from non-negative one-layer samples.

    Coordinate ``i`` uses substream ``i`` of ``stream``, so the result does
    not depend on ``workers``.
    """
    x = _as_array(samples)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("samples must be a non-empty n x d array")
    if np.any(x < 0):
        raise ValueError("samples must be non-negative (ReLU outputs)")
    stream = stream or RandomStream(0)
    n, d = x.shape
    diagnostics = []

    def one(i: int):
        col = x[:, i]
        pos = col[col > 0]
        if pos.size == 0:
            return None
        return norm_bias_estimate(pos, cfg, stream.substream(i))

    workers = min(d, workers or thread_cap())
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(d)))
    else:
        results = [one(i) for i in range(d)]

    b_hat = np.zeros(d)
    diag = np.zeros(d)
    for i, res in enumerate(results):
        if res is None:
            diagnostics.append(f"coordinate {i}: no positive samples; b=0, row zeroed")
            continue
        mu, var = res
        if var == 0.0:
            diagnostics.append(f"coordinate {i}: constant value {mu!r}; zero row")
        b_hat[i] = max(0.0, mu)
        diag[i] = var

    theta = angle_matrix(x, b_hat)
    return EstimatedModel(_assemble(diag, theta), b_hat, diagnostics)


def arccos_kernel(theta):
    """``sin t + (pi - t) cos t``: ``2 pi E[ReLU(u.z) ReLU(v.z)]`` for unit ``u, v`` at angle ``t``.

    Decreases strictly from ``pi`` at 0 to 0 at ``pi``.
    """
    return np.sin(theta) + (np.pi - theta) * np.cos(theta)


def invert_arccos_kernel(value: float) -> float:
    """Angle ``t`` in ``[0, pi]`` with ``arccos_kernel(t) == value`` by bisection."""
    lo, hi = 0.0, math.pi
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if arccos_kernel(mid) > value:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_zero_bias_noisy(samples, noise_sigma: float = 0.0) -> EstimatedModel:
    """Moment estimator for ``x = ReLU(W z) + noise`` with known noise level.

    ``E[x_i^2] = ||W_i||^2 / 2 + noise_sigma^2`` and, for ``i != j``,
    ``E[x_i x_j] = ||W_i|| ||W_j|| arccos_kernel(theta_ij) / (2 pi)``.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    x = _as_array(samples)
    n, d = x.shape
    if n == 0:
        raise ValueError("no samples")
    moments = (x.T @ x) / n
    diag = 2.0 * (np.diag(moments) - noise_sigma ** 2)
    diagnostics = []
    for i in np.flatnonzero(diag <= 0):
        diagnostics.append(f"coordinate {i}: corrected second moment <= 0; zero row")
    diag = np.where(diag > 0, diag, 0.0)

    theta = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            if diag[i] == 0 or diag[j] == 0:
                theta[i, j] = theta[j, i] = math.pi / 2
                continue
            target = 2.0 * math.pi * moments[i, j] / math.sqrt(diag[i] * diag[j])
            if not 0.0 <= target <= math.pi:
                diagnostics.append(f"pair ({i},{j}): cross moment out of range; clamped")
                target = min(max(target, 0.0), math.pi)
            theta[i, j] = theta[j, i] = invert_arccos_kernel(target)
    return EstimatedModel(_assemble(diag, theta), np.zeros(d), diagnostics)
