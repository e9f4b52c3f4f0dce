"""Synthetic data: rectified Gaussian samples, truncated normals, random models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .core import GenerativeModel, RandomStream, SampleMatrix, normal_at, uniform_at

DEFAULT_MAX_ATTEMPTS = 1000


class TruncationExhausted(RuntimeError):
    """Rejection sampler ran out of attempts; the truncation mass is implausibly small."""

    def __init__(self, attempts: int, mu: float, sigma: float, lower: float):
        super().__init__(
            f"no accepted draw after {attempts} attempts "
            f"(mu={mu:.4g}, sigma={sigma:.4g}, lower={lower:.4g})"
        )
        self.attempts = attempts


@dataclass(frozen=True)
class TruncationInterval:
    """The set ``{x : x > lower}``; ``lower=None`` means no truncation."""

    lower: Optional[float] = None

    def __post_init__(self) -> None:
        if self.lower is not None and not math.isfinite(self.lower):
            raise ValueError("finite lower bound required (use None for no truncation)")

    @property
    def bound(self) -> float:
        return -math.inf if self.lower is None else float(self.lower)

    def contains(self, x) -> np.ndarray:
        return np.asarray(x) > self.bound


@numba.njit(cache=True, nogil=True)
def truncated_normal_kernel(mu, sigma, lower, key, counter, max_attempts):
    """Draw from N(mu, sigma^2) restricted to (lower, inf).

    Returns ``(value, new_counter, attempts)``; ``attempts == -1`` on exhaustion.
    When the standardized bound ``a`` is <= 0 (acceptance >= 1/2) plain
    rejection from the normal is used. Above the mean the exponential-proposal
    sampler of Robert (1995) is used instead, which keeps acceptance >= 0.7 at
    any depth.
    """
    a = (lower - mu) / sigma
    one = np.uint64(1)
    two = np.uint64(2)
    if a <= 0.0:
        for attempt in range(1, max_attempts + 1):
            z = normal_at(key, counter)
            counter += two
            if z > a:
                return mu + sigma * z, counter, attempt
        return np.nan, counter, -1
    rate = 0.5 * (a + np.sqrt(a * a + 4.0))
    for attempt in range(1, max_attempts + 1):
        u1 = uniform_at(key, counter)
        u2 = uniform_at(key, counter + one)
        counter += two
        z = a - np.log(u1) / rate
        if z > a and u2 <= np.exp(-0.5 * (z - rate) ** 2):
            return mu + sigma * z, counter, attempt
    return np.nan, counter, -1


def sample_truncated_normal(
    mu: float,
    sigma: float,
    trunc: TruncationInterval,
    stream: RandomStream,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    return_attempts: bool = False,
):
    """One draw from ``N(mu, sigma^2)`` conditioned on ``trunc``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    value, counter, attempts = truncated_normal_kernel(
        float(mu), float(sigma), trunc.bound, np.uint64(stream.key),
        np.uint64(stream.counter), int(max_attempts),
    )
    stream.counter = int(counter)
    if attempts < 0:
        raise TruncationExhausted(max_attempts, mu, sigma, trunc.bound)
    return (value, attempts) if return_attempts else value


def _check_one_layer(model: GenerativeModel, n: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.weight.shape[0] != model.bias.shape[0]:
        raise ValueError("weight/bias dimension mismatch")


def _rectified_latents(model: GenerativeModel, n: int, stream: RandomStream) -> np.ndarray:
    z = stream.normal((n, model.k))
    return np.maximum(z @ model.weight.T + model.bias, 0.0)


def sample_one_layer(model: GenerativeModel, n: int, stream: RandomStream) -> SampleMatrix:
    """Rows ``ReLU(W z + b) + noise_sigma * xi``; noise is added after rectification."""
    if model.outer is not None:
        raise ValueError("model has an outer matrix; use sample_two_layer")
    _check_one_layer(model, n)
    seed = stream.seed
    x = _rectified_latents(model, n, stream)
    if model.noise_sigma > 0:
        x = x + model.noise_sigma * stream.normal((n, model.d))
    return SampleMatrix(x, seed=seed)


def sample_two_layer(model: GenerativeModel, n: int, stream: RandomStream) -> SampleMatrix:
    """Rows ``A ReLU(W z + b)``."""
    if model.outer is None:
        raise ValueError("two-layer sampling needs model.outer")
    _check_one_layer(model, n)
    seed = stream.seed
    m = _rectified_latents(model, n, stream)
    return SampleMatrix(m @ model.outer.T, seed=seed)


def random_orthonormal(rows: int, cols: int, stream: RandomStream) -> np.ndarray:
    """Haar-distributed matrix with orthonormal columns (``rows >= cols``)."""
    g = stream.normal((rows, cols))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def make_random_model(
    d: int,
    k: int,
    kappa: float = 1.0,
    bias_mode: str = "nonneg",
    stream: Optional[RandomStream] = None,
    eta: float = 0.0,
    outer_dim: Optional[int] = None,
) -> GenerativeModel:
    """Random ``W = U diag(s) V^T`` with ``cond(W W^T) = kappa``.

    Singular values are geometrically spaced on ``[1, sqrt(kappa)]``.
    ``bias_mode`` is ``"nonneg"`` (ReLU of a standard normal vector),
    ``"zero"``, or ``"negative"`` (nonneg draw minus ``eta * ||W_i|| * u_i``,
    ``u_i ~ U[0, 1]``). With ``outer_dim`` a Gaussian ``outer_dim x d`` outer
    matrix is attached.
    """
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    if not kappa >= 1:
        raise ValueError("kappa must be >= 1")
    if k < d and kappa != 1:
        raise ValueError("W W^T is rank deficient when k < d; kappa is undefined")
    if stream is None:
        stream = RandomStream(0)
    rank = min(d, k)
    u = random_orthonormal(d, rank, stream)
    v = random_orthonormal(k, rank, stream)
    expo = np.arange(rank) / (rank - 1) if rank > 1 else np.zeros(1)
    s = kappa ** (0.5 * expo)
    w = (u * s) @ v.T

    if bias_mode == "zero":
        b = np.zeros(d)
    elif bias_mode in ("nonneg", "negative"):
        b = np.maximum(stream.normal(d), 0.0)
        if bias_mode == "negative":
            if eta < 0:
                raise ValueError("eta must be non-negative")
            b = b - eta * np.linalg.norm(w, axis=1) * stream.uniform(d)
    else:
        raise ValueError(f"unknown bias_mode {bias_mode!r}")

    outer = stream.normal((outer_dim, d)) if outer_dim else None
    return GenerativeModel(w, b, outer=outer)


def sample(model: GenerativeModel, n: int, stream: RandomStream) -> SampleMatrix:
    """Dispatch to the one- or two-layer sampler."""
    if model.outer is None:
        return sample_one_layer(model, n, stream)
    return sample_two_layer(model, n, stream)
