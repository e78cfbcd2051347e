"""Probabilistic revision of the local correspondence and line-vector sets.

After each interaction round the local set is revised against the current
global inlier set: correspondences that became global inliers are admitted
and local members that stopped being global inliers are evicted. A
correspondence that is on the same side of the residual threshold in two
consecutive rounds is handled deterministically; one that just crossed the
threshold is admitted/evicted probabilistically, comparing its true-inlier
probability (a chi-distribution survival in 3 dimensions) against a
uniformly drawn percent threshold.

Line vectors are maintained incrementally: eviction drops all incident
vectors, admission pairs the newcomer against every current member and
keeps pairs whose scale ratio falls in the retained ratio band.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .correspondences import Correspondence, CorrespondenceSet
from .errors import MissingResidual
from .local_sets import LineVectorSet, RatioRange

SIGMA_MODES = ("per-eval", "per-round", "fixed-half-tr")


class UpdateAction(enum.Enum):
    INCLUDE = "include"
    REMOVE = "remove"
    KEEP = "keep"
    SKIP = "skip"


class UpdateRule(enum.Enum):
    STABLE_INLIER = "stable-inlier"      # inlier in both rounds: admit outright
    NEW_INLIER = "new-inlier"            # just crossed below the threshold: probabilistic admit
    NEW_OUTLIER = "new-outlier"          # just crossed above the threshold: probabilistic evict
    STABLE_OUTLIER = "stable-outlier"    # outlier in both rounds: evict outright
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class UpdateDecision:
    correspondence_index: int
    action: UpdateAction
    rule: UpdateRule
    probability: float | None = None
    threshold: float | None = None


def true_inlier_probability(r: float, sigma: float) -> float:
    """Probability that a residual of magnitude r is inlier noise of scale sigma.

    Survival function of the noise-residual norm: the squared norm of an
    isotropic 3D Gaussian is sigma^2 times a chi-square with 3 degrees of
    freedom, so P = 1 - gamma_lower(3/2, r^2 / (2 sigma^2)) / Gamma(3/2),
    evaluated with the regularized upper incomplete gamma. Strictly
    decreasing in r; 1 at r = 0.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(gammaincc(1.5, (r * r) / (2.0 * sigma * sigma)))


def draw_probability_threshold(rng: np.random.Generator) -> float:
    """Uniform draw from {0.01, 0.02, ..., 1.00}."""
    return int(rng.integers(1, 101)) / 100.0


def draw_sigma(rng: np.random.Generator, residual_threshold: float) -> float:
    """Uniform draw from (0, residual_threshold]."""
    return residual_threshold - float(rng.uniform(0.0, residual_threshold))


def _require_curr(c: Correspondence) -> float:
    if c.curr_residual is None:
        raise MissingResidual("current residual required for a self-update decision")
    return c.curr_residual


def classify_inclusion(c: Correspondence, in_ir_glo: bool, in_c_sul: bool,
                       residual_threshold: float, rng: np.random.Generator,
                       sigma: float | None = None, index: int = -1) -> UpdateDecision:
    """Decide whether a global inlier outside the local set is admitted.

    A two-round inlier is admitted outright (probability 1, no random
    draw). A first-round-or-recovered inlier is admitted iff its
    true-inlier probability exceeds a freshly drawn percent threshold.
    """
    if not (in_ir_glo and not in_c_sul):
        return UpdateDecision(index, UpdateAction.KEEP, UpdateRule.NOT_APPLICABLE)
    curr = _require_curr(c)
    if c.prev_residual is not None and c.prev_residual < residual_threshold:
        return UpdateDecision(index, UpdateAction.INCLUDE, UpdateRule.STABLE_INLIER, probability=1.0)
    s = draw_sigma(rng, residual_threshold) if sigma is None else sigma
    prob = true_inlier_probability(curr, s)
    threshold = draw_probability_threshold(rng)
    action = UpdateAction.INCLUDE if prob > threshold else UpdateAction.SKIP
    return UpdateDecision(index, action, UpdateRule.NEW_INLIER, probability=prob, threshold=threshold)


def classify_removal(c: Correspondence, in_ir_glo: bool, in_c_sul: bool,
                     residual_threshold: float, rng: np.random.Generator,
                     sigma: float | None = None, index: int = -1) -> UpdateDecision:
    """Decide whether a local member that is no longer a global inlier is evicted.

    A two-round outlier is evicted outright (no random draw). One that was
    an inlier in the previous round (or has no history yet) is evicted iff
    its true-outlier probability (1 - P) exceeds a drawn percent threshold.
    """
    if not (in_c_sul and not in_ir_glo):
        return UpdateDecision(index, UpdateAction.KEEP, UpdateRule.NOT_APPLICABLE)
    curr = _require_curr(c)
    if c.prev_residual is not None and c.prev_residual >= residual_threshold:
        return UpdateDecision(index, UpdateAction.REMOVE, UpdateRule.STABLE_OUTLIER)
    s = draw_sigma(rng, residual_threshold) if sigma is None else sigma
    prob = true_inlier_probability(curr, s)
    threshold = draw_probability_threshold(rng)
    action = UpdateAction.REMOVE if (1.0 - prob) > threshold else UpdateAction.KEEP
    return UpdateDecision(index, action, UpdateRule.NEW_OUTLIER, probability=prob, threshold=threshold)


def _pair_block(corrs: CorrespondenceSet, new_id: int, member_ids: np.ndarray,
                ratio_range: RatioRange) -> LineVectorSet:
    """Line vectors between one admitted correspondence and the current members."""
    rows_new = corrs.rows_for([new_id])[0]
    rows_mem = corrs.rows_for(member_ids)
    lo = np.minimum(new_id, member_ids)
    hi = np.maximum(new_id, member_ids)
    # v_source = x_i - x_j with i < j by item id (canonical pair orientation)
    sign = np.where(member_ids > new_id, 1.0, -1.0)[:, None]
    vs = sign * (corrs.source[rows_new] - corrs.source[rows_mem])
    vt = sign * (corrs.target[rows_new] - corrs.target[rows_mem])
    ns = np.linalg.norm(vs, axis=1)
    nt = np.linalg.norm(vt, axis=1)
    keep = (ns > 0.0) & (nt > 0.0)
    ratio = np.zeros(len(lo))
    ratio[keep] = ns[keep] / nt[keep]
    keep &= np.asarray(ratio_range.contains(ratio), dtype=bool)
    return LineVectorSet(lo[keep], hi[keep], vs[keep], vt[keep], ratio[keep])


def update_local_sets(corrs: CorrespondenceSet, local_set: CorrespondenceSet,
                      lvs: LineVectorSet, ir_glo, residual_threshold: float,
                      ratio_range: RatioRange, rng: np.random.Generator,
                      sigma_mode: str = "per-eval"):
    """One self-update round over the local correspondence and line-vector sets.

    Eviction decisions run first (ascending id), then admissions
    (ascending id), so newcomers pair against the already-pruned set.
    Every examined candidate yields an UpdateDecision for the audit trail.

    Returns (new_local_set, new_line_vectors, decisions).
    """
    if sigma_mode not in SIGMA_MODES:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")
    sigma = None
    if sigma_mode == "per-round":
        sigma = draw_sigma(rng, residual_threshold)
    elif sigma_mode == "fixed-half-tr":
        sigma = residual_threshold / 2.0

    ir_set = set(int(g) for g in np.asarray(ir_glo).ravel())
    sul_set = set(int(g) for g in local_set.indices)
    decisions: list[UpdateDecision] = []

    removed = []
    for gid in sorted(sul_set - ir_set):
        row = corrs.rows_for([gid])[0]
        d = classify_removal(corrs.item(row), False, True, residual_threshold, rng,
                             sigma=sigma, index=gid)
        decisions.append(d)
        if d.action is UpdateAction.REMOVE:
            removed.append(gid)
    current = sorted(sul_set - set(removed))
    if removed:
        keep = ~(np.isin(lvs.i, removed) | np.isin(lvs.j, removed))
        lvs = lvs.take(np.nonzero(keep)[0])

    for gid in sorted(ir_set - sul_set):
        row = corrs.rows_for([gid])[0]
        d = classify_inclusion(corrs.item(row), True, False, residual_threshold, rng,
                               sigma=sigma, index=gid)
        decisions.append(d)
        if d.action is UpdateAction.INCLUDE:
            if current:
                block = _pair_block(corrs, gid, np.asarray(current, dtype=np.int64), ratio_range)
                if len(block):
                    lvs = lvs.extend(block)
            current.append(gid)
            current.sort()

    new_local = corrs.subset(corrs.rows_for(np.asarray(current, dtype=np.int64)))
    return new_local, lvs, decisions
