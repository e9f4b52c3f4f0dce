"""Univariate normal estimation from samples truncated to ``(lower, inf)``.

Maximum likelihood runs as projected SGD in the natural parameters
``v = [1/sigma^2, mu/sigma^2]``, where the negative log-likelihood is convex.
Data are standardized first and the result is mapped back afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numba
import numpy as np

from .core import RandomStream, uniform_at
from .sampler import (
    DEFAULT_MAX_ATTEMPTS,
    TruncationExhausted,
    TruncationInterval,
    sample_truncated_normal,
    truncated_normal_kernel,
)

# below ~8e5 steps the averaged iterate still carries visible warm-up error at n <= 1e5
MIN_STEPS = 800_000


class DegenerateConstant(ValueError):
    """All samples (numerically) equal ``value``; no variance to fit."""

    def __init__(self, value: float):
        super().__init__(f"samples are constant ({value!r})")
        self.value = value


@dataclass(frozen=True)
class ReparamPoint:
    v1: float  # 1 / sigma^2
    v2: float  # mu / sigma^2

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2])

    def decode(self) -> Tuple[float, float]:
        """``(mu, sigma^2)``."""
        return self.v2 / self.v1, 1.0 / self.v1


@dataclass(frozen=True)
class SgdConfig:
    """Projected-SGD hyper-parameters.

    ``steps=None`` means ``max(min_steps, steps_per_sample * batch_size)``
    per batch.
    """

    steps: Optional[int] = None
    min_steps: int = MIN_STEPS
    steps_per_sample: int = 2
    lam: float = 0.1
    radius: float = 3.0
    batches: int = 1
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self) -> None:
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batches < 1:
            raise ValueError("batches must be >= 1")
        if not self.radius > 1:
            raise ValueError("radius must be > 1")
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def steps_for(self, batch_size: int) -> int:
        if self.steps is not None:
            return self.steps
        return max(self.min_steps, self.steps_per_sample * batch_size)


@dataclass(frozen=True)
class Standardization:
    mu0: float
    sigma0: float

    def __post_init__(self) -> None:
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")

    def to_original(self, mu: float, sigma_sq: float) -> Tuple[float, float]:
        return self.sigma0 * mu + self.mu0, self.sigma0 ** 2 * sigma_sq


def standardize(samples) -> Tuple[np.ndarray, Standardization, TruncationInterval]:
    """Shift/scale to empirical mean 0, variance 1 (population variance).

    The truncation set ``(0, inf)`` maps to ``(-mu0/sigma0, inf)``.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("no samples")
    if np.any(x <= 0):
        raise ValueError("samples must be strictly positive")
    mu0 = float(x.mean())
    var0 = float(np.mean((x - mu0) ** 2))
    if var0 < 1e-12:
        raise DegenerateConstant(mu0)
    sigma0 = math.sqrt(var0)
    y = (x - mu0) / sigma0
    # remove the rounding residue so the moments hold to ~1e-16
    y = y - y.mean()
    y = y / math.sqrt(np.mean(y * y))
    return y, Standardization(mu0, sigma0), TruncationInterval(-mu0 / sigma0)


def gradient_from_draw(x: float, z: float) -> np.ndarray:
    """Stochastic gradient ``[x^2/2 - z^2/2, z - x]`` for data ``x`` and model draw ``z``."""
    return np.array([0.5 * x * x - 0.5 * z * z, z - x])


def gradient_estimate(
    v: ReparamPoint,
    x: float,
    trunc: TruncationInterval,
    stream: RandomStream,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> np.ndarray:
    """Unbiased gradient of the expected truncated NLL at ``v``."""
    mu, sigma_sq = v.decode()
    z = sample_truncated_normal(mu, math.sqrt(sigma_sq), trunc, stream, max_attempts)
    return gradient_from_draw(x, z)


def project_domain(v: ReparamPoint, r: float) -> ReparamPoint:
    """Clamp onto the box ``1/r <= v1 <= r, |v2| <= r``."""
    return ReparamPoint(min(max(v.v1, 1.0 / r), r), min(max(v.v2, -r), r))


@numba.njit(cache=True, nogil=True)
def _proj_sgd_kernel(data, lower, steps, lam, r, key, counter, max_attempts, trace):
    n = data.size
    v1, v2 = 1.0, 0.0
    s1, s2 = 0.0, 0.0
    lo = 1.0 / r
    record = trace.shape[0] > 0
    for t in range(1, steps + 1):
        idx = int(uniform_at(key, counter) * n)
        counter += np.uint64(1)
        if idx >= n:
            idx = n - 1
        x = data[idx]
        z, counter, attempts = truncated_normal_kernel(
            v2 / v1, np.sqrt(1.0 / v1), lower, key, counter, max_attempts
        )
        if attempts < 0:
            return v1, v2, counter, t
        step = 1.0 / (lam * t)
        v1 -= (0.5 * x * x - 0.5 * z * z) * step
        v2 -= (z - x) * step
        v1 = min(max(v1, lo), r)
        v2 = min(max(v2, -r), r)
        if record:
            trace[t - 1, 0] = v1
            trace[t - 1, 1] = v2
        s1 += v1
        s2 += v2
    return s1 / steps, s2 / steps, counter, 0


GradFn = Callable[[ReparamPoint, float, TruncationInterval, RandomStream, int], np.ndarray]


def proj_sgd(
    samples,
    trunc: TruncationInterval,
    cfg: SgdConfig,
    stream: RandomStream,
    grad_fn: Optional[GradFn] = None,
    trace: Optional[list] = None,
) -> ReparamPoint:
    """Projected SGD from ``v = [1, 0]`` with steps ``1/(lam t)``; returns the iterate average.

    Each step draws its data point uniformly with replacement from ``samples``
    (one uniform from ``stream``), then the gradient draw. With ``grad_fn`` or
    ``trace`` given, a plain Python loop runs instead of the compiled kernel;
    both consume the stream identically. ``trace`` receives every iterate.
    """
    x = np.ascontiguousarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("no samples")
    steps = cfg.steps_for(x.size)
    r = cfg.radius

    if grad_fn is None and trace is None:
        v1, v2, counter, failed = _proj_sgd_kernel(
            x, trunc.bound, steps, cfg.lam, r, np.uint64(stream.key),
            np.uint64(stream.counter), cfg.max_attempts, np.empty((0, 2)),
        )
        stream.counter = int(counter)
        if failed:
            raise TruncationExhausted(cfg.max_attempts, v2 / v1, 1 / math.sqrt(v1), trunc.bound)
        return ReparamPoint(float(v1), float(v2))

    grad_fn = grad_fn or gradient_estimate
    v = ReparamPoint(1.0, 0.0)
    total = np.zeros(2)
    for t in range(1, steps + 1):
        idx = min(int(stream.uniform() * x.size), x.size - 1)
        g = grad_fn(v, float(x[idx]), trunc, stream, cfg.max_attempts)
        step = 1.0 / (cfg.lam * t)
        v = project_domain(ReparamPoint(v.v1 - g[0] * step, v.v2 - g[1] * step), r)
        if trace is not None:
            trace.append(v)
        total += (v.v1, v.v2)
    return ReparamPoint(float(total[0] / steps), float(total[1] / steps))


def medoid_select(candidates: Sequence[ReparamPoint]) -> ReparamPoint:
    """Candidate with the smallest summed distance to all others (first on ties)."""
    if not candidates:
        raise ValueError("no candidates")
    pts = np.array([c.as_array() for c in candidates])
    cost = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1).sum(axis=1)
    return candidates[int(np.argmin(cost))]


def norm_bias_estimate(samples, cfg: SgdConfig, stream: RandomStream) -> Tuple[float, float]:
    """Estimate ``(mu, sigma^2)`` from the positive part of one coordinate.

    Constant input short-circuits to ``(constant, 0)``.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("no positive samples")
    try:
        y, st, trunc = standardize(x)
    except DegenerateConstant as exc:
        return exc.value, 0.0
    batches = np.array_split(y, min(cfg.batches, y.size))
    candidates: List[ReparamPoint] = [
        proj_sgd(batch, trunc, cfg, stream.substream(b)) for b, batch in enumerate(batches)
    ]
    mu, sigma_sq = medoid_select(candidates).decode()
    return st.to_original(mu, sigma_sq)
