"""Shared domain types, the counter-based random stream, and matrix helpers.

The random stream is a SplitMix64 generator addressed by ``(key, counter)``:
the ``c``-th raw 64-bit word of a stream is ``mix64(key + (c + 1) * GOLDEN)``.
Uniforms take the top 53 bits, offset by half an ulp so they lie strictly in
(0, 1). Normals use the cosine branch of Box-Muller and consume two words
each. Substreams hash ``(key, id)`` into a fresh key, so parallel tasks never
share state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_SUBSTREAM_SALT = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (wraps to 64 bits)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# numba kernels; all arithmetic stays in uint64 so it wraps like the Python path
# ---------------------------------------------------------------------------

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_U1 = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, nogil=True)
def raw_word(key, counter):
    z = key + (counter + _U1) * _U_GOLDEN
    z = (z ^ (z >> _U30)) * _U_MIX1
    z = (z ^ (z >> _U27)) * _U_MIX2
    return z ^ (z >> _U31)


@numba.njit(cache=True, nogil=True)
def uniform_at(key, counter):
    return (float(raw_word(key, counter) >> _U11) + 0.5) * _INV53


@numba.njit(cache=True, nogil=True)
def normal_at(key, counter):
    """Box-Muller normal from words ``counter`` and ``counter + 1``."""
    u1 = uniform_at(key, counter)
    u2 = uniform_at(key, counter + _U1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@numba.njit(cache=True, nogil=True)
def _fill_uniform(key, counter, out):
    for i in range(out.size):
        out[i] = uniform_at(key, counter + np.uint64(i))


@numba.njit(cache=True, nogil=True)
def _fill_normal(key, counter, out):
    for i in range(out.size):
        out[i] = normal_at(key, counter + np.uint64(2 * i))


@dataclass
class RandomStream:
    """Deterministic, splittable source of uniform and normal variates.

    Two streams with the same ``seed`` produce the same sequence. ``counter``
    counts consumed 64-bit words and is the only mutable state.
    """

    seed: int
    counter: int = 0

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & MASK64
        self.key = mix64(self.seed + GOLDEN)

    def substream(self, stream_id: int) -> "RandomStream":
        """Independent child stream keyed by ``(seed, stream_id)``."""
        return RandomStream(mix64(self.key ^ mix64(int(stream_id) ^ _SUBSTREAM_SALT)))

    def _advance(self, words: int) -> np.uint64:
        start = np.uint64(self.counter)
        self.counter += words
        return start

    def uniform(self, size: Optional[int] = None):
        n = 1 if size is None else int(size)
        out = np.empty(n)
        _fill_uniform(np.uint64(self.key), self._advance(n), out)
        return float(out[0]) if size is None else out

    def normal(self, size=None):
        """Standard normals; ``size`` may be an int or a shape tuple."""
        shape = () if size is None else (size if isinstance(size, tuple) else (int(size),))
        n = int(np.prod(shape)) if shape else 1
        out = np.empty(n)
        _fill_normal(np.uint64(self.key), self._advance(2 * n), out)
        return float(out[0]) if size is None else out.reshape(shape)


def standard_normal(stream: RandomStream) -> float:
    """One N(0, 1) variate from ``stream``."""
    return stream.normal()


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenerativeModel:
    """Ground truth ``x = outer @ ReLU(weight @ z + bias) + noise_sigma * xi``.

    ``outer`` is present only for two-layer models; noise is only used by the
    zero-bias noisy estimator.
    """

    weight: np.ndarray
    bias: np.ndarray
    outer: Optional[np.ndarray] = None
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        w = np.array(self.weight, dtype=float, ndmin=2)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("weight must have finite entries")
        if b.shape[0] != w.shape[0]:
            raise ValueError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        if self.outer is not None:
            a = np.array(self.outer, dtype=float, ndmin=2)
            if a.shape[1] != w.shape[0]:
                raise ValueError(f"outer has {a.shape[1]} columns, weight has {w.shape[0]} rows")
            object.__setattr__(self, "outer", a)

    @property
    def d(self) -> int:
        return self.weight.shape[0]

    @property
    def k(self) -> int:
        return self.weight.shape[1]

    @property
    def covariance(self) -> np.ndarray:
        return self.weight @ self.weight.T


@dataclass
class EstimatedModel:
    """Estimator output: ``sigma_hat`` (symmetric, raw) and ``b_hat`` (clamped >= 0)."""

    sigma_hat: np.ndarray
    b_hat: np.ndarray
    diagnostics: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.sigma_hat = np.asarray(self.sigma_hat, dtype=float)
        self.b_hat = np.asarray(self.b_hat, dtype=float)
        s = self.sigma_hat
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] != self.b_hat.shape[0]:
            raise ValueError("sigma_hat must be d x d with d = len(b_hat)")
        if not np.array_equal(s, s.T):
            raise ValueError("sigma_hat must be exactly symmetric")
        if np.any(self.b_hat < 0) or np.any(np.diag(s) < 0):
            raise ValueError("b_hat and diag(sigma_hat) must be non-negative")

    @property
    def d(self) -> int:
        return self.b_hat.shape[0]


@dataclass(frozen=True)
class SampleMatrix:
    """``n x d`` observations, one per row, with provenance."""

    data: np.ndarray
    seed: int = 0
    model_id: str = ""

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(self.data, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("samples must be a non-empty 2-D array")
        object.__setattr__(self, "data", x)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def clip_psd(m: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Replace eigenvalues below ``floor`` by ``floor``."""
    w, v = np.linalg.eigh(m)
    return (v * np.maximum(w, floor)) @ v.T


def cholesky_psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square-root factor ``L`` with ``L @ L.T`` equal to ``m`` with negative eigenvalues zeroed.

    Uses the eigendecomposition, so it works for singular and mildly
    indefinite input where a plain Cholesky would fail.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(np.linalg.norm(m), 1e-300)
    if np.linalg.norm(m - m.T) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return v * np.sqrt(np.maximum(w, 0.0))
