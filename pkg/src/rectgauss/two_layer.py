"""Two-layer models ``x = A ReLU(W z + b)``: anchor extraction, then the one-layer fit.

Under separability every column of ``A`` appears (scaled) among the samples,
and the columns are exactly the normalized samples that are not conical
combinations of the other normalized samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.optimize import nnls

from .core import EstimatedModel, GenerativeModel, RandomStream, SampleMatrix
from .estimator import fit_one_layer
from .truncated_mle import SgdConfig

DEDUP_TOL = 1e-6
CONE_TOL = 1e-6
LATENT_TOL = 1e-6


class AnchorCountError(RuntimeError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"found {found} anchors, expected {expected}")
        self.found = found
        self.expected = expected


class RankDeficientAnchors(RuntimeError):
    pass


@dataclass
class AnchorSet:
    columns: np.ndarray  # d x p, unit-norm columns
    source_indices: List[int]
    residuals: List[float] = field(default_factory=list)  # distance of each anchor to the cone of the rest

    @property
    def count(self) -> int:
        return self.columns.shape[1]


def normalize_dedup(samples, dedup_tol: float = DEDUP_TOL, return_indices: bool = False):
    """Unit-normalize non-zero rows and drop near-duplicates.

    Rows are visited in order of decreasing norm (stable), so the retained
    representative of a duplicate group is its largest sample.
    """
    if not dedup_tol > 0:
        raise ValueError("dedup_tol must be positive")
    x = samples.data if isinstance(samples, SampleMatrix) else np.asarray(samples, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    order = [i for i in np.argsort(-norms, kind="stable") if norms[i] > 0]
    if not order:
        raise ValueError("all samples are zero")
    kept: List[np.ndarray] = []
    idx: List[int] = []
    for i in order:
        u = x[i] / norms[i]
        if kept and np.min(np.linalg.norm(np.asarray(kept) - u, axis=1)) <= dedup_tol:
            continue
        kept.append(u)
        idx.append(int(i))
    return (kept, idx) if return_indices else kept


def cone_distance(v, others) -> float:
    """Euclidean distance from ``v`` to the cone generated by ``others``."""
    v = np.asarray(v, dtype=float)
    if len(others) == 0:
        return float(np.linalg.norm(v))
    gens = np.asarray(others, dtype=float).T
    _, rnorm = nnls(gens, v, maxiter=50 * gens.shape[1] + 100)
    return float(rnorm)


def is_conical_combination(v, others, tol: float = CONE_TOL) -> bool:
    if len(others) == 0:
        return False
    return cone_distance(v, others) <= tol


def extract_anchors(unit_vectors, tol: float = CONE_TOL, source_indices=None) -> AnchorSet:
    """Keep the vectors that are not conical combinations of all the others.

    Every vector is tested against the full set first and the failures are
    removed together, so the result does not depend on the visiting order.
    """
    vecs = np.asarray(unit_vectors, dtype=float)
    if vecs.ndim != 2 or vecs.shape[0] == 0:
        raise ValueError("need a non-empty list of vectors")
    m = vecs.shape[0]
    src = list(range(m)) if source_indices is None else list(source_indices)
    keep, res = [], []
    for i in range(m):
        dist = cone_distance(vecs[i], np.delete(vecs, i, axis=0)) if m > 1 else 1.0
        if dist > tol:
            keep.append(i)
            res.append(dist)
    return AnchorSet(vecs[keep].T.reshape(vecs.shape[1], len(keep)), [src[i] for i in keep], res)


class TwoLayerFit(NamedTuple):
    a_hat: np.ndarray
    model: EstimatedModel
    anchors: AnchorSet


def recover_latents(a_hat: np.ndarray, x: np.ndarray, tol: float = LATENT_TOL):
    """Least-squares latents ``pinv(a_hat) @ x_i`` for each row, cleaned to be ReLU-valid.

    Entries within ``tol * ||x_i||`` of zero are rounding residue and set to
    0; more negative entries are counted as violations and also clamped.
    """
    m = np.linalg.lstsq(a_hat, x.T, rcond=None)[0].T
    band = tol * np.linalg.norm(x, axis=1, keepdims=True)
    violations = int(np.sum(m < -band))
    m[m <= band] = 0.0
    return m, violations


def fit_two_layer(
    samples,
    cfg: SgdConfig = SgdConfig(),
    stream: Optional[RandomStream] = None,
    p: Optional[int] = None,
    tol: float = CONE_TOL,
    dedup_tol: float = DEDUP_TOL,
    latent_tol: float = LATENT_TOL,
    workers: Optional[int] = None,
) -> TwoLayerFit:
    x = samples.data if isinstance(samples, SampleMatrix) else np.asarray(samples, dtype=float)
    vecs, idx = normalize_dedup(x, dedup_tol, return_indices=True)
    anchors = extract_anchors(vecs, tol, idx)
    if p is not None and anchors.count != p:
        raise AnchorCountError(anchors.count, p)
    a_hat = anchors.columns
    if anchors.count == 0:
        raise RankDeficientAnchors("no anchors found")
    sv = np.linalg.svd(a_hat, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0] or anchors.count > a_hat.shape[0]:
        raise RankDeficientAnchors(f"anchor matrix is rank deficient ({anchors.count} columns)")
    latents, violations = recover_latents(a_hat, x, latent_tol)
    est = fit_one_layer(latents, cfg, stream, workers=workers)
    est.diagnostics.insert(0, f"anchors: {anchors.count}; max cone residual "
                              f"{max(anchors.residuals, default=0.0):.3g}")
    if violations:
        est.diagnostics.append(f"{violations} recovered latent entries were negative; clamped to 0")
    return TwoLayerFit(a_hat, est, anchors)


def align_columns(a_hat, a_star, tol: float = 1e-6):
    """Match columns up to permutation and positive scaling.

    Returns ``(perm, scales)`` with ``a_hat[:, j] * scales[j] == a_star[:, perm[j]]``
    (within ``tol`` after normalization), or ``None``.
    """
    a_hat, a_star = np.asarray(a_hat, float), np.asarray(a_star, float)
    if a_hat.shape != a_star.shape:
        return None
    nh, ns = np.linalg.norm(a_hat, axis=0), np.linalg.norm(a_star, axis=0)
    if np.any(nh == 0) or np.any(ns == 0):
        return None
    uh, us = a_hat / nh, a_star / ns
    used = np.zeros(a_star.shape[1], dtype=bool)
    perm = []
    for j in range(a_hat.shape[1]):
        dist = np.linalg.norm(us - uh[:, [j]], axis=0)
        dist[used] = np.inf
        best = int(np.argmin(dist))
        if dist[best] > tol:
            return None
        used[best] = True
        perm.append(best)
    perm = np.array(perm)
    return perm, ns[perm] / nh


def match_columns_up_to_perm_scale(a_hat, a_star, tol: float = 1e-6) -> bool:
    return align_columns(a_hat, a_star, tol) is not None


def aligned_truth(truth: GenerativeModel, a_hat, tol: float = 1e-6) -> Optional[GenerativeModel]:
    """The one-layer model that the latents ``pinv(a_hat) x`` actually follow, if ``a_hat`` matches."""
    found = align_columns(a_hat, truth.outer, tol)
    if found is None:
        return None
    perm, scales = found
    return GenerativeModel(truth.weight[perm] * scales[:, None], truth.bias[perm] * scales)
