"""File formats.

Models are JSON ``{d, k, weight, bias, outer?, noise_sigma}`` with matrices
stored as flat row-major lists. Sample files are the magic ``b"RGS1"``,
then ``n`` and ``d`` as little-endian u64, then ``n * d`` little-endian
float64 values in row-major order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import EstimatedModel, GenerativeModel, SampleMatrix

MAGIC = b"RGS1"
_HEADER = struct.Struct("<4sQQ")


class FormatError(ValueError):
    pass


def _flat(m: np.ndarray) -> list:
    return [float(v) for v in np.asarray(m, dtype=float).reshape(-1)]


def _matrix(values, rows: int, cols: int, name: str) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.size != rows * cols:
        raise FormatError(f"{name}: expected {rows * cols} entries, got {a.size}")
    return a.reshape(rows, cols)


def model_to_dict(model: GenerativeModel) -> dict:
    out = {
        "d": model.d,
        "k": model.k,
        "weight": _flat(model.weight),
        "bias": _flat(model.bias),
        "noise_sigma": float(model.noise_sigma),
    }
    if model.outer is not None:
        out["outer"] = _flat(model.outer)
    return out


def model_from_dict(obj: dict) -> GenerativeModel:
    try:
        d, k = int(obj["d"]), int(obj["k"])
        weight = _matrix(obj["weight"], d, k, "weight")
        bias = np.asarray(obj["bias"], dtype=float)
        outer = obj.get("outer")
        if outer is not None:
            outer = np.asarray(outer, dtype=float)
            if outer.size % d:
                raise FormatError("outer size is not a multiple of d")
            outer = outer.reshape(-1, d)
        return GenerativeModel(weight, bias, outer=outer, noise_sigma=float(obj.get("noise_sigma", 0.0)))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed model: {exc}") from exc
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_model(model: GenerativeModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2))


def load_model(path) -> GenerativeModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not JSON ({exc})") from exc


def estimate_to_dict(est: EstimatedModel) -> dict:
    return {
        "d": est.d,
        "sigma_hat": _flat(est.sigma_hat),
        "b_hat": _flat(est.b_hat),
        "diagnostics": list(est.diagnostics),
    }


def estimate_from_dict(obj: dict) -> EstimatedModel:
    try:
        d = int(obj["d"])
        return EstimatedModel(_matrix(obj["sigma_hat"], d, d, "sigma_hat"),
                              np.asarray(obj["b_hat"], dtype=float), list(obj.get("diagnostics", [])))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed estimate: {exc}") from exc


def save_estimate(est: EstimatedModel, path, **extra) -> None:
    obj = estimate_to_dict(est)
    obj.update(extra)
    Path(path).write_text(json.dumps(obj, indent=2))


def load_estimate(path) -> EstimatedModel:
    return estimate_from_dict(json.loads(Path(path).read_text()))


def save_matrix(m: np.ndarray, path) -> None:
    m = np.atleast_2d(m)
    Path(path).write_text(json.dumps({"rows": m.shape[0], "cols": m.shape[1], "data": _flat(m)}, indent=2))


def load_matrix(path) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    return _matrix(obj["data"], int(obj["rows"]), int(obj["cols"]), "matrix")


def samples_to_bytes(samples: SampleMatrix) -> bytes:
    body = np.ascontiguousarray(samples.data, dtype="<f8").tobytes()
    return _HEADER.pack(MAGIC, samples.n, samples.d) + body


def samples_from_bytes(buf: bytes) -> SampleMatrix:
    if len(buf) < _HEADER.size:
        raise FormatError("sample file too short")
    magic, n, d = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if len(buf) != _HEADER.size + 8 * n * d:
        raise FormatError(f"expected {n}x{d} values, file size does not match")
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).reshape(n, d)
    return SampleMatrix(data.astype(float))


def save_samples(samples: SampleMatrix, path) -> None:
    Path(path).write_bytes(samples_to_bytes(samples))


def load_samples(path) -> SampleMatrix:
    return samples_from_bytes(Path(path).read_bytes())
