"""Experiment harness: error-vs-(n, d, kappa) sweeps and the two-layer success-rate table.

Every grid point is the cartesian product of ``n_grid x d_grid x kappa_grid``.
Run ``s`` draws its model, samples, and SGD noise from
``RandomStream(seed).substream(s)``, so all grid points share random numbers
for the same run index (paired comparisons across the grid).
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np

from .core import RandomStream
from .estimator import fit_one_layer, thread_cap
from .metrics import DegenerateCovariance, kl_estimate, param_errors
from .sampler import make_random_model, sample_one_layer, sample_two_layer
from .truncated_mle import MIN_STEPS, SgdConfig
from .two_layer import (
    CONE_TOL,
    DEDUP_TOL,
    AnchorCountError,
    RankDeficientAnchors,
    aligned_truth,
    fit_two_layer,
)

MODES = ("sweep_n", "sweep_d", "sweep_kappa", "table1", "single")
COLUMNS = ("mode", "n", "d", "k", "kappa", "eta", "seed", "sigma_rel_err", "bias_rel_err",
           "kl", "tv_bound", "wall_ms", "success", "status")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "single"
    n_grid: List[int] = field(default_factory=lambda: [500_000])
    d_grid: List[int] = field(default_factory=lambda: [5])
    kappa_grid: List[float] = field(default_factory=lambda: [1.0])
    k: Optional[int] = None  # latent dimension; None means k = d
    bias_mode: str = "nonneg"
    eta: float = 0.0
    seeds: int = 10
    seed: int = 0
    batches: int = 1
    radius: float = 3.0
    lam: float = 0.1
    steps: Optional[int] = None
    min_steps: int = MIN_STEPS
    outer_dim: int = 10  # table1 only: rows of A
    tol: float = CONE_TOL
    dedup_tol: float = DEDUP_TOL
    output: Optional[str] = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for name in ("n_grid", "d_grid", "kappa_grid"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if any(n < 1 for n in self.n_grid) or any(d < 1 for d in self.d_grid):
            raise ConfigError("grid sizes must be >= 1")
        if any(not kap >= 1 for kap in self.kappa_grid):
            raise ConfigError("kappa values must be >= 1")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.bias_mode not in ("nonneg", "zero", "negative"):
            raise ConfigError(f"unknown bias_mode {self.bias_mode!r}")
        try:
            self.sgd_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not JSON ({exc})") from exc
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def sgd_config(self) -> SgdConfig:
        return SgdConfig(steps=self.steps, min_steps=self.min_steps, lam=self.lam,
                         radius=self.radius, batches=self.batches)

    def grid(self):
        return list(itertools.product(self.n_grid, self.d_grid, self.kappa_grid))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def run_one(cfg: ExperimentConfig, n: int, d: int, kappa: float, seed_index: int) -> Dict:
    """One seeded run at one grid point; exceptions become ``status=error`` rows."""
    k = cfg.k or d
    row = dict(mode=cfg.mode, n=n, d=d, k=k, kappa=float(kappa), eta=float(cfg.eta),
               seed=seed_index, status="ok")
    t0 = time.perf_counter()
    run = RandomStream(cfg.seed).substream(seed_index)
    try:
        truth = make_random_model(d, k, kappa, cfg.bias_mode, run.substream(0), eta=cfg.eta,
                                  outer_dim=cfg.outer_dim if cfg.mode == "table1" else None)
        if cfg.mode == "table1":
            row["d"], row["k"] = cfg.outer_dim, d
            x = sample_two_layer(truth, n, run.substream(1))
            try:
                fit = fit_two_layer(x, cfg.sgd_config(), run.substream(2), tol=cfg.tol,
                                    dedup_tol=cfg.dedup_tol, workers=1)
                target = aligned_truth(truth, fit.a_hat)
            except (AnchorCountError, RankDeficientAnchors):
                fit, target = None, None
            row["success"] = int(target is not None)
            if target is None:
                return row
            est, truth = fit.model, target
        else:
            x = sample_one_layer(truth, n, run.substream(1))
            est = fit_one_layer(x, cfg.sgd_config(), run.substream(2), workers=1)
        row["sigma_rel_err"], row["bias_rel_err"] = param_errors(est, truth)
        try:
            kl = kl_estimate(est, truth)
            row["kl"], row["tv_bound"] = kl, math.sqrt(kl / 2.0)
        except DegenerateCovariance:
            pass
    except Exception as exc:  # noqa: BLE001 - a failed run must not stop the sweep
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    finally:
        row["wall_ms"] = round(1000.0 * (time.perf_counter() - t0), 1)
    return row


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[Dict]:
    """All rows in deterministic (grid point, seed) order, plus table1 summaries."""
    jobs = [(n, d, kap, s) for (n, d, kap) in cfg.grid() for s in range(cfg.seeds)]
    workers = workers or thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda j: run_one(cfg, *j), jobs))
    else:
        rows = [run_one(cfg, *j) for j in jobs]
    if cfg.mode != "table1":
        return rows
    out = []
    for i, (n, d, kap) in enumerate(cfg.grid()):
        chunk = rows[i * cfg.seeds:(i + 1) * cfg.seeds]
        out.extend(chunk)
        frac = float(np.mean([r.get("success", 0) for r in chunk]))
        out.append(dict(mode="table1", n=n, d=cfg.outer_dim, k=d, kappa=float(kap),
                        eta=float(cfg.eta), success=frac, status="summary"))
    return out


def write_csv(rows: Iterable[Dict], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])


def rows_to_csv(rows: Iterable[Dict]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def summarize(rows: Iterable[Dict], key: str, metric: str) -> Dict:
    """Mean of ``metric`` over successful per-seed rows, grouped by column ``key``."""
    groups: Dict = {}
    for r in rows:
        if r.get("status") != "ok" or r.get(metric) is None:
            continue
        groups.setdefault(r[key], []).append(r[metric])
    return {g: float(np.mean(v)) for g, v in groups.items()}
