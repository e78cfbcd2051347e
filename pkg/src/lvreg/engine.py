"""Dual global/local RANSAC interaction loop.

One registration run alternates between a local RANSAC that generates
hypotheses from the filtered line-vector set and a global scorer that
evaluates them against the full correspondence set. The loop stops on
global confidence or after a fixed number of interaction rounds; between
rounds the local sets are revised probabilistically and per-correspondence
weights accumulate over the global inlier sets. The final transform is a
weighted least-squares alignment of the full set under those weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .correspondences import CorrespondenceSet
from .errors import (
    DegenerateDistribution,
    DegenerateInput,
    EmptyResult,
    TooFewCorrespondences,
)
from .geometry import RigidTransform, residuals, rotation_geodesic_angle, weighted_kabsch
from .local_sets import (
    Histogram,
    LineVectorSet,
    RatioRange,
    angle_histogram_filter,
    build_angle_histogram,
    build_line_vectors,
    length_ratio_filter,
)
from .normals import PointCloud, annotate_normals
from .self_update import SIGMA_MODES, update_local_sets
from .solver import GncConfig, estimate_local_transform

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RansacConfig:
    """Knobs of the registration engine (defaults follow the metric indoor setting)."""

    residual_threshold: float = 0.01
    confidence_target: float = 0.995
    r_max: int = 5
    alpha_pct: float = 10.0        # % of the line-vector set sampled once per round
    beta_pct: float = 30.0         # % of the round sample drawn per hypothesis
    rotation_term_tol: float = 0.01  # radians, local-vs-global agreement bound
    noise_bound: float = 0.05      # scene units, translation agreement + TLS bound
    rng_seed: int = 0
    max_local_iterations: int = 10000  # safety cap on hypothesis attempts per round
    k_normals: int = 20
    use_ahs_lvlp: bool = True      # angle-histogram + length-ratio construction of the local sets
    use_sus: bool = True           # probabilistic self-update between rounds
    sigma_mode: str = "per-eval"
    gnc_max_iterations: int = 100
    gnc_mu_factor: float = 1.4
    gnc_convergence_tol: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.confidence_target < 1.0):
            raise ValueError("confidence_target must lie in (0, 1)")
        if not (0.0 < self.alpha_pct <= 100.0 and 0.0 < self.beta_pct <= 100.0):
            raise ValueError("sampling percentages must lie in (0, 100]")
        for name in ("residual_threshold", "r_max", "rotation_term_tol", "noise_bound",
                     "max_local_iterations", "k_normals"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_mode not in SIGMA_MODES:
            raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")

    def gnc_config(self) -> GncConfig:
        return GncConfig(noise_bound=self.noise_bound,
                         mu_update_factor=self.gnc_mu_factor,
                         max_iterations=self.gnc_max_iterations,
                         convergence_tol=self.gnc_convergence_tol)


@dataclass
class RansacState:
    """Mutable bookkeeping of one registration run."""

    best_global: RigidTransform
    best_global_count: int
    t_glo: int = 0
    rounds_completed: int = 0
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass(frozen=True)
class LocalRoundResult:
    transform: RigidTransform
    iterations: int          # reported count (inherits the global count on early termination)
    raw_iterations: int      # hypotheses actually evaluated this round
    branch: str              # early-termination | confidence | iteration-cap
    n_local_inliers: int


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    t_glo: int
    t_lcl: int
    branch: str
    n_global_inliers: int
    global_confidence: float
    local_set_size: int
    line_vector_count: int
    ir_glo: np.ndarray
    weights_updated: bool


@dataclass(frozen=True)
class RegistrationResult:
    transform: RigidTransform
    rounds: int
    total_iterations: int
    final_confidence: float
    inlier_indices: np.ndarray
    per_round_trace: list
    exit_reason: str          # confidence | max-rounds
    accumulated_weights: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    angle_histogram: Histogram | None = None
    scale_ratio_histogram: Histogram | None = None
    sus_decisions: list = field(default_factory=list)  # one decision list per updated round


def confidence_level(inlier_rate: float, iterations: int) -> float:
    """Standard RANSAC stopping statistic 1 - (1 - rate)^iterations."""
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    return 1.0 - (1.0 - inlier_rate) ** iterations


def residual_inliers(t: RigidTransform, corrs: CorrespondenceSet, threshold: float) -> np.ndarray:
    """Row positions whose residual under t is strictly below the threshold."""
    return np.nonzero(residuals(t, corrs.source, corrs.target) < threshold)[0]


def transforms_converged(a: RigidTransform, b: RigidTransform,
                         rotation_tol: float, translation_tol: float) -> bool:
    """True when two transforms agree within the rotation/translation bounds."""
    if rotation_geodesic_angle(a.rotation, b.rotation) > rotation_tol:
        return False
    return float(np.linalg.norm(a.translation - b.translation)) <= translation_tol


def _sample_size(pct: float, total: int) -> int:
    return min(total, max(2, int(round(pct / 100.0 * total))))


def run_local_ransac(l_sul: LineVectorSet, c_sul: CorrespondenceSet,
                     received_glo: RigidTransform, t_glo: int,
                     cfg: RansacConfig, rng: np.random.Generator) -> LocalRoundResult:
    """One local-RANSAC round over the filtered line-vector set.

    Draws the round sample once, then repeatedly draws a basic subset,
    estimates a candidate transform (seeded by the received global
    rotation), and keeps the candidate with the most local inliers. The
    round ends when the best candidate agrees with the received global
    transform (reporting the combined iteration count, crediting global
    progress), when the local confidence target is met, or at the
    safety cap.
    """
    if len(l_sul) < 2:
        raise DegenerateInput("need at least 2 line vectors for local hypotheses")
    if len(c_sul) == 0:
        raise DegenerateInput("local correspondence set is empty")
    gnc_cfg = cfg.gnc_config()

    sub_rows = rng.choice(len(l_sul), _sample_size(cfg.alpha_pct, len(l_sul)), replace=False)
    l_sub = l_sul.take(sub_rows)
    basic_size = _sample_size(cfg.beta_pct, len(l_sub))

    best: RigidTransform | None = None
    best_count = -1
    t_lcl = 0
    attempts = 0
    while True:
        attempts += 1
        rows = rng.choice(len(l_sub), basic_size, replace=False)
        basic = l_sub.take(rows)
        endpoint_rows = c_sul.rows_for(basic.member_ids())
        try:
            candidate = estimate_local_transform(basic, c_sul.subset(endpoint_rows),
                                                 gnc_cfg, initial_rotation=received_glo.rotation)
        except DegenerateInput:
            if attempts >= cfg.max_local_iterations:
                if best is None:
                    raise DegenerateInput(
                        "no well-posed basic line-vector sample found within the iteration cap")
                return LocalRoundResult(best, t_lcl, t_lcl, "iteration-cap", best_count)
            continue
        t_lcl += 1
        count = len(residual_inliers(candidate, c_sul, cfg.residual_threshold))
        if count > best_count:
            best, best_count = candidate, count
        if transforms_converged(received_glo, best, cfg.rotation_term_tol, cfg.noise_bound):
            return LocalRoundResult(best, t_glo + t_lcl, t_lcl, "early-termination", best_count)
        cl = confidence_level(best_count / len(c_sul), t_lcl)
        if cl >= cfg.confidence_target:
            return LocalRoundResult(best, t_lcl, t_lcl, "confidence", best_count)
        if attempts >= cfg.max_local_iterations:
            return LocalRoundResult(best, t_lcl, t_lcl, "iteration-cap", best_count)


def _initial_local_sets(corrs: CorrespondenceSet, cfg: RansacConfig):
    """Build the filtered local sets with graceful fallbacks on degenerate input.

    Fallback ladder: filtered sets -> unfiltered pairs of the filtered
    correspondences -> unfiltered pairs of the full set. A filter that
    retains nothing (or cannot discriminate) must not abort registration.
    """
    angle_hist = None
    sr_hist = None
    local = corrs
    if cfg.use_ahs_lvlp:
        try:
            angle_hist = build_angle_histogram(corrs)
            local = angle_histogram_filter(corrs, angle_hist)
        except (EmptyResult, DegenerateDistribution) as exc:
            log.debug("angle filter fell back to the full set: %s", exc)
            local = corrs
        try:
            lvs_all = build_line_vectors(local)
            l_sul, ratio_range, sr_hist = length_ratio_filter(lvs_all)
        except TooFewCorrespondences:
            l_sul, ratio_range = LineVectorSet([], [], np.empty((0, 3)), np.empty((0, 3)), []), RatioRange.everything()
        if len(l_sul) < 2 and len(local) >= 2:
            l_sul, ratio_range = build_line_vectors(local), RatioRange.everything()
    else:
        l_sul, ratio_range = build_line_vectors(corrs), RatioRange.everything()
    if len(l_sul) < 2:
        local = corrs
        l_sul, ratio_range = build_line_vectors(corrs), RatioRange.everything()
        if len(l_sul) < 2:
            raise DegenerateInput("fewer than 2 usable line vectors in the full correspondence set")
    return local, l_sul, ratio_range, angle_hist, sr_hist


def run_registration(corrs: CorrespondenceSet, source: PointCloud, target: PointCloud,
                     cfg: RansacConfig) -> RegistrationResult:
    """Full registration pipeline; deterministic for a fixed rng_seed.

    Normal annotation, local-set construction, the round loop with
    confidence/round-cap termination, per-round weight accumulation and
    self-update, and the final weighted alignment of the full set.
    """
    n = len(corrs)
    if n < 3:
        raise TooFewCorrespondences("registration needs at least 3 correspondences")
    rng = np.random.default_rng(cfg.rng_seed)

    # Work on a private copy whose item ids equal row positions; the
    # caller's set is never mutated and outputs index into the input order.
    corrs = CorrespondenceSet(corrs.source, corrs.target,
                              source_normals=corrs.source_normals,
                              target_normals=corrs.target_normals)
    if cfg.use_ahs_lvlp:
        corrs = annotate_normals(corrs, source, target, cfg.k_normals)
    local_set, l_sul, ratio_range, angle_hist, sr_hist = _initial_local_sets(corrs, cfg)

    identity = RigidTransform.identity()
    state = RansacState(
        best_global=identity,
        best_global_count=len(residual_inliers(identity, corrs, cfg.residual_threshold)),
        weights=np.zeros(n, dtype=np.int64),
    )
    trace: list[RoundTrace] = []
    sus_decisions: list = []
    exit_reason = "max-rounds"

    while True:
        local_res = run_local_ransac(l_sul, local_set, state.best_global, state.t_glo, cfg, rng)
        cand_count = len(residual_inliers(local_res.transform, corrs, cfg.residual_threshold))
        if cand_count > state.best_global_count:
            state.best_global = local_res.transform
            state.best_global_count = cand_count
        state.t_glo += local_res.iterations

        corrs.prev_residuals = corrs.curr_residuals
        corrs.curr_residuals = residuals(state.best_global, corrs.source, corrs.target)
        ir_glo = np.nonzero(corrs.curr_residuals < cfg.residual_threshold)[0]
        cl_glo = confidence_level(len(ir_glo) / n, state.t_glo)

        terminated = cl_glo >= cfg.confidence_target
        if not terminated:
            state.weights[ir_glo] += 1
        trace.append(RoundTrace(
            round_index=len(trace) + 1, t_glo=state.t_glo, t_lcl=local_res.iterations,
            branch=local_res.branch, n_global_inliers=len(ir_glo), global_confidence=cl_glo,
            local_set_size=len(local_set), line_vector_count=len(l_sul),
            ir_glo=ir_glo, weights_updated=not terminated,
        ))
        if terminated:
            exit_reason = "confidence"
            break
        if cfg.use_sus:
            local_set, l_sul, decisions = update_local_sets(
                corrs, local_set, l_sul, ir_glo, cfg.residual_threshold,
                ratio_range, rng, sigma_mode=cfg.sigma_mode)
            sus_decisions.append(decisions)
            if len(l_sul) < 2 or len(local_set) == 0:
                # the update emptied the local sets; rebuild from the full set
                local_set = corrs
                l_sul = build_line_vectors(corrs)
                ratio_range = RatioRange.everything()
                if len(l_sul) < 2:
                    exit_reason = "degenerate-local-sets"
                    state.rounds_completed += 1
                    break
        state.rounds_completed += 1
        if state.rounds_completed >= cfg.r_max:
            break

    final_weights = state.weights
    if final_weights.sum() == 0:
        final_weights = np.zeros(n, dtype=np.int64)
        ir_last = trace[-1].ir_glo if trace else np.arange(0)
        final_weights[ir_last] = 1
    try:
        final = weighted_kabsch(corrs.source, corrs.target, final_weights)
    except DegenerateInput:
        log.debug("weighted alignment degenerate; returning the best sampled transform")
        final = state.best_global

    final_cl = trace[-1].global_confidence if trace else 0.0
    return RegistrationResult(
        transform=final,
        rounds=len(trace),
        total_iterations=state.t_glo,
        final_confidence=final_cl,
        inlier_indices=residual_inliers(final, corrs, cfg.residual_threshold),
        per_round_trace=trace,
        exit_reason=exit_reason,
        accumulated_weights=state.weights,
        angle_histogram=angle_hist,
        scale_ratio_histogram=sr_hist,
        sus_decisions=sus_decisions,
    )
