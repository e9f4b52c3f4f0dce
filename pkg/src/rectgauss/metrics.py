"""Parameter errors, Gaussian KL divergence and the Pinsker TV bound."""
from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .core import EstimatedModel, GenerativeModel, clip_psd


class DegenerateCovariance(ValueError):
    pass


def param_errors(
    est: EstimatedModel, truth: GenerativeModel, subset: Optional[Sequence[int]] = None
) -> Tuple[float, float]:
    """``||S_hat - W W^T||_F / ||W||_F^2`` and ``||b_hat - b||_2 / ||W||_F``.

    ``subset`` restricts everything (including ``W``) to those coordinates.
    """
    w, b = truth.weight, truth.bias
    s_hat, b_hat = est.sigma_hat, est.b_hat
    if subset is not None:
        idx = np.asarray(subset, dtype=int)
        w, b = w[idx], b[idx]
        s_hat, b_hat = s_hat[np.ix_(idx, idx)], b_hat[idx]
    if s_hat.shape != (w.shape[0], w.shape[0]) or b_hat.shape != b.shape:
        raise ValueError("shape mismatch between estimate and truth")
    wf = np.linalg.norm(w)
    if wf == 0:
        raise ValueError("||W||_F is zero; relative errors undefined")
    return (
        float(np.linalg.norm(s_hat - w @ w.T) / wf ** 2),
        float(np.linalg.norm(b_hat - b) / wf),
    )


def gaussian_kl(b1, s1, b2, s2) -> float:
    """``KL(N(b1, s1) || N(b2, s2))`` in closed form via the Cholesky factor of ``s2``."""
    b1, b2 = np.atleast_1d(np.asarray(b1, float)), np.atleast_1d(np.asarray(b2, float))
    s1, s2 = np.atleast_2d(np.asarray(s1, float)), np.atleast_2d(np.asarray(s2, float))
    d = b1.shape[0]
    try:
        c2, low = cho_factor(s2, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("second covariance is not positive definite") from exc
    logdet2 = 2.0 * np.sum(np.log(np.diag(c2)))
    try:
        c1 = np.linalg.cholesky(s1)
        logdet1 = 2.0 * np.sum(np.log(np.diag(c1)))
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(s1)
        if np.any(w <= 0):
            return math.inf
        logdet1 = float(np.sum(np.log(w)))
    trace = float(np.trace(cho_solve((c2, low), s1)))
    maha = solve_triangular(c2, b1 - b2, lower=True)
    return float(0.5 * (trace - d - (logdet1 - logdet2) + float(maha @ maha)))


def clipped_sigma(sigma_hat: np.ndarray) -> np.ndarray:
    floor = 1e-12 * max(float(np.trace(sigma_hat)), 1e-300)
    return clip_psd(sigma_hat, floor)


def kl_estimate(est: EstimatedModel, truth: GenerativeModel) -> float:
    """KL from the eigenvalue-clipped Gaussian fit to the true Gaussian ``N(b, W W^T)``."""
    sigma_star = truth.covariance
    try:
        np.linalg.cholesky(sigma_star)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance(
            "W W^T is singular: the TV bound is meaningless here, use param_errors"
        ) from exc
    return max(gaussian_kl(est.b_hat, clipped_sigma(est.sigma_hat), truth.bias, sigma_star), 0.0)


def tv_upper_bound(est: EstimatedModel, truth: GenerativeModel) -> float:
    """Pinsker bound ``sqrt(KL / 2)`` on the TV distance between the rectified Gaussians."""
    return math.sqrt(kl_estimate(est, truth) / 2.0)
