"""Robust local transform estimation from line vectors.

Rotation is estimated on translation-invariant line vectors by graduated
non-convexity over a truncated-least-squares loss (iteratively reweighted
closed-form alignment with the continuation parameter annealed each
iteration). Translation is the component-wise median of the rotated
residual vectors, robust to up to 50% outliers per axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correspondences import CorrespondenceSet
from .errors import DegenerateInput
from .geometry import RigidTransform, rotation_from_cross_covariance
from .local_sets import LineVectorSet


@dataclass(frozen=True)
class GncConfig:
    """Tuning for the graduated non-convexity rotation solver."""

    noise_bound: float = 0.05
    mu_update_factor: float = 1.4
    max_iterations: int = 100
    convergence_tol: float = 1e-6  # on total weight change between iterations

    def __post_init__(self):
        if self.noise_bound <= 0 or self.max_iterations <= 0 or self.convergence_tol <= 0:
            raise ValueError("GncConfig fields must be positive")
        if self.mu_update_factor <= 1:
            raise ValueError("mu_update_factor must exceed 1")


def _tls_weights(res_sq: np.ndarray, mu: float, eps_sq: float) -> np.ndarray:
    """Closed-form weights of the truncated-least-squares surrogate at mu."""
    lo = mu / (mu + 1.0) * eps_sq
    hi = (mu + 1.0) / mu * eps_sq
    w = np.zeros_like(res_sq)
    w[res_sq <= lo] = 1.0
    mid = (res_sq > lo) & (res_sq < hi)
    w[mid] = np.sqrt(eps_sq * mu * (mu + 1.0) / res_sq[mid]) - mu
    return np.clip(w, 0.0, 1.0)


def _check_source_span(v_source: np.ndarray):
    s = np.linalg.svd(v_source, compute_uv=False)
    if len(s) < 2 or s[1] <= s[0] * 1e-9 or s[0] == 0.0:
        raise DegenerateInput("line-vector source directions are parallel; rotation underdetermined")


def _solve_rotation(v_source, v_target, weights) -> np.ndarray:
    h = (weights[:, None] * v_source).T @ v_target
    return rotation_from_cross_covariance(h)


def estimate_rotation_gnc(lvs: LineVectorSet, cfg: GncConfig,
                          initial_rotation: np.ndarray | None = None,
                          trace: list | None = None) -> tuple[np.ndarray, bool]:
    """Robust rotation aligning the source line vectors onto the target ones.

    Minimizes sum_i min(||R v_src_i - v_tgt_i||^2, tau^2) by graduated
    non-convexity: weighted closed-form alignment alternated with the
    truncated-least-squares weight update while the continuation parameter
    grows geometrically. The best iterate under the truncated loss is
    returned together with a convergence flag; non-convergence still
    yields a proper rotation.

    Raises DegenerateInput when the source directions are all parallel.
    """
    a = lvs.v_source
    b = lvs.v_target
    if len(lvs) < 2:
        raise DegenerateInput("need at least 2 line vectors to estimate a rotation")
    _check_source_span(a)

    eps_sq = cfg.noise_bound ** 2
    rot = np.eye(3) if initial_rotation is None else np.asarray(initial_rotation, dtype=np.float64)
    res_sq = np.sum((a @ rot.T - b) ** 2, axis=1)

    max_res_sq = float(res_sq.max())
    if 2.0 * max_res_sq <= eps_sq:
        # Everything already within the noise bound: one plain solve suffices.
        rot = _solve_rotation(a, b, np.ones(len(a)))
        return rot, True

    mu = eps_sq / (2.0 * max_res_sq - eps_sq)
    best_rot = rot
    best_cost = float(np.minimum(res_sq, eps_sq).sum())
    prev_weights = None
    converged = False

    for _ in range(cfg.max_iterations):
        weights = _tls_weights(res_sq, mu, eps_sq)
        if np.count_nonzero(weights) < 2:
            break  # surrogate support collapsed; keep the best iterate
        wsse_before = float(np.sum(weights * res_sq))
        try:
            rot = _solve_rotation(a, b, weights)
        except DegenerateInput:
            break
        res_sq = np.sum((a @ rot.T - b) ** 2, axis=1)
        wsse_after = float(np.sum(weights * res_sq))
        cost = float(np.minimum(res_sq, eps_sq).sum())
        if cost < best_cost:
            best_cost = cost
            best_rot = rot
        if trace is not None:
            trace.append({"mu": mu, "weights": weights.copy(),
                          "wsse_before": wsse_before, "wsse_after": wsse_after,
                          "tls_cost": cost})
        if prev_weights is not None and float(np.abs(weights - prev_weights).sum()) < cfg.convergence_tol:
            converged = True
            break
        prev_weights = weights
        mu *= cfg.mu_update_factor

    return best_rot, converged


def estimate_translation(corrs: CorrespondenceSet, rotation: np.ndarray, cfg: GncConfig | None = None) -> np.ndarray:
    """Component-wise median of target - R @ source over the correspondences.

    Exactly the per-axis median (middle two averaged for even counts), so
    the estimate tolerates up to 50% outliers per axis.
    """
    if len(corrs) == 0:
        raise DegenerateInput("cannot estimate a translation from zero correspondences")
    rotation = np.asarray(rotation, dtype=np.float64)
    candidates = corrs.target - corrs.source @ rotation.T
    return np.median(candidates, axis=0)


def estimate_local_transform(basic_lvs: LineVectorSet, local_corrs: CorrespondenceSet,
                             cfg: GncConfig, initial_rotation: np.ndarray | None = None) -> RigidTransform:
    """Rigid transform from a basic line-vector sample plus its endpoint correspondences."""
    rot, _ = estimate_rotation_gnc(basic_lvs, cfg, initial_rotation=initial_rotation)
    tr = estimate_translation(local_corrs, rot, cfg)
    return RigidTransform(rot, tr)
