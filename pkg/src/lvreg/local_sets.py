"""Construction of the filtered local correspondence and line-vector sets.

Two cheap statistical filters bootstrap the local sets used by the local
RANSAC loop:

* the angle-histogram filter keeps correspondences whose source/target
  normal angle falls in unusually dense histogram bins, and
* the length-ratio filter keeps correspondence pairs ("line vectors")
  whose source/target segment-length ratio falls in the dominant
  scale-ratio bin and its immediate neighbors (rigid motion preserves
  lengths, so consistent pairs cluster at ratio 1).

Bin widths follow Scott's rule with the population standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correspondences import Correspondence, CorrespondenceSet
from .errors import (
    DegenerateDistribution,
    EmptyResult,
    MissingNormals,
    TooFewCorrespondences,
)

SCOTT_FACTOR = 3.49
# A Scott width this far below the domain scale means the sample has no
# usable spread (e.g. angles differing only by float noise); treat it as
# degenerate instead of allocating an absurd number of bins.
MAX_BINS = 100_000


def normal_angle(c: Correspondence) -> float:
    """Angle in [0, pi] between the source and target normals of a correspondence."""
    if c.source_normal is None or c.target_normal is None:
        raise MissingNormals("correspondence has no estimated normals")
    dot = float(np.dot(c.source_normal, c.target_normal))
    return float(np.arccos(np.clip(dot, -1.0, 1.0)))


def normal_angles(corrs: CorrespondenceSet) -> np.ndarray:
    """Vectorized normal angles for every correspondence."""
    if not corrs.has_normals():
        raise MissingNormals("correspondence set has no estimated normals")
    dots = np.sum(corrs.source_normals * corrs.target_normals, axis=1)
    return np.arccos(np.clip(dots, -1.0, 1.0))


def scotts_bin_width(values) -> float:
    """Scott's-rule bin width 3.49 * sigma / cbrt(n) with population sigma.

    Raises DegenerateDistribution for n < 2 or zero spread.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 2:
        raise DegenerateDistribution("need at least 2 values for a bin width")
    sigma = float(v.std())  # population std (divide by n)
    if sigma == 0.0:
        raise DegenerateDistribution("all values identical; bin width undefined")
    return SCOTT_FACTOR * sigma / float(np.cbrt(n))


@dataclass(frozen=True, eq=False)
class Histogram:
    """Fixed-width binning with per-bin item membership.

    Item with value v lands in bin floor((v - lower_bound) / bin_width);
    when `clamped_top` the index is clamped into the last bin so a value
    exactly at the domain's upper edge stays inside.
    """

    bin_width: float
    lower_bound: float
    counts: np.ndarray
    bin_members: list
    clamped_top: bool = False

    @classmethod
    def from_values(cls, values, bin_width: float, lower_bound: float, n_bins: int,
                    clamp_top: bool = False) -> "Histogram":
        v = np.asarray(values, dtype=np.float64)
        idx = np.floor((v - lower_bound) / bin_width).astype(np.int64)
        if clamp_top:
            idx = np.minimum(idx, n_bins - 1)
        if v.size and (idx.min() < 0 or idx.max() >= n_bins):
            raise ValueError("value outside the histogram domain")
        counts = np.bincount(idx, minlength=n_bins)
        order = np.argsort(idx, kind="stable")
        splits = np.searchsorted(idx[order], np.arange(1, n_bins))
        members = [m for m in np.split(order, splits)]
        return cls(bin_width=bin_width, lower_bound=lower_bound, counts=counts,
                   bin_members=members, clamped_top=clamp_top)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def bin_index(self, value: float) -> int:
        idx = int(np.floor((value - self.lower_bound) / self.bin_width))
        if self.clamped_top:
            idx = min(idx, self.n_bins - 1)
        return idx

    def edges(self) -> np.ndarray:
        return self.lower_bound + self.bin_width * np.arange(self.n_bins + 1)


def build_angle_histogram(corrs: CorrespondenceSet) -> Histogram:
    """Histogram of normal angles over [0, pi) with ceil(pi / w) bins.

    w comes from Scott's rule over all angles; an angle of exactly pi is
    placed in the last bin.
    """
    angles = normal_angles(corrs)
    w = scotts_bin_width(angles)
    n_bins = max(1, math.ceil(math.pi / w))
    if n_bins > MAX_BINS:
        raise DegenerateDistribution("angle spread is below histogram resolution")
    return Histogram.from_values(angles, w, 0.0, n_bins, clamp_top=True)


def angle_histogram_filter(corrs: CorrespondenceSet, hist: Histogram) -> CorrespondenceSet:
    """Keep correspondences from bins whose count strictly exceeds mean + std.

    The threshold is computed over the per-bin counts of `hist`. Original
    row order and item ids are preserved. Raises EmptyResult when no bin
    qualifies (callers typically fall back to the unfiltered set).
    """
    counts = hist.counts.astype(np.float64)
    threshold = counts.mean() + counts.std()
    qualified = np.nonzero(hist.counts > threshold)[0]
    if qualified.size == 0:
        raise EmptyResult("no histogram bin exceeds the frequency threshold")
    rows = np.sort(np.concatenate([hist.bin_members[b] for b in qualified]))
    return corrs.subset(rows)


def reduction_ratio(n_before: int, n_after: int) -> float:
    """Fraction of items removed by a filter step."""
    if n_before <= 0:
        return 0.0
    return (n_before - n_after) / n_before


@dataclass(frozen=True, eq=False)
class LineVector:
    """Difference vectors between two correspondences, with their length ratio."""

    i: int
    j: int
    v_source: np.ndarray
    v_target: np.ndarray
    scale_ratio: float


class LineVectorSet:
    """Struct-of-arrays collection of line vectors keyed by correspondence ids."""

    def __init__(self, i, j, v_source, v_target, scale_ratio, n_zero_skipped: int = 0):
        self.i = np.asarray(i, dtype=np.int64)
        self.j = np.asarray(j, dtype=np.int64)
        self.v_source = np.asarray(v_source, dtype=np.float64).reshape(-1, 3)
        self.v_target = np.asarray(v_target, dtype=np.float64).reshape(-1, 3)
        self.scale_ratio = np.asarray(scale_ratio, dtype=np.float64)
        self.n_zero_skipped = n_zero_skipped

    def __len__(self) -> int:
        return len(self.i)

    def __getitem__(self, row: int) -> LineVector:
        return LineVector(int(self.i[row]), int(self.j[row]), self.v_source[row],
                          self.v_target[row], float(self.scale_ratio[row]))

    def take(self, rows) -> "LineVectorSet":
        rows = np.asarray(rows)
        return LineVectorSet(self.i[rows], self.j[rows], self.v_source[rows],
                             self.v_target[rows], self.scale_ratio[rows])

    def drop_member(self, member_id: int) -> "LineVectorSet":
        keep = (self.i != member_id) & (self.j != member_id)
        return self.take(np.nonzero(keep)[0])

    def extend(self, other: "LineVectorSet") -> "LineVectorSet":
        return LineVectorSet(
            np.concatenate([self.i, other.i]),
            np.concatenate([self.j, other.j]),
            np.concatenate([self.v_source, other.v_source]),
            np.concatenate([self.v_target, other.v_target]),
            np.concatenate([self.scale_ratio, other.scale_ratio]),
        )

    def member_ids(self) -> np.ndarray:
        return np.unique(np.concatenate([self.i, self.j]))

    def pair_set(self) -> set:
        return set(zip(self.i.tolist(), self.j.tolist()))


def build_line_vectors(c_sul: CorrespondenceSet) -> LineVectorSet:
    """All unordered pairs (i < j by item id) as line vectors.

    Pairs whose source or target difference has zero norm are skipped and
    counted in `n_zero_skipped` (duplicate feature points occur in real
    correspondence sets).
    """
    n = len(c_sul)
    if n < 2:
        raise TooFewCorrespondences("need at least 2 correspondences for line vectors")
    r, s = np.triu_indices(n, k=1)
    ids = c_sul.indices
    vs = c_sul.source[r] - c_sul.source[s]
    vt = c_sul.target[r] - c_sul.target[s]
    ns = np.linalg.norm(vs, axis=1)
    nt = np.linalg.norm(vt, axis=1)
    keep = (ns > 0.0) & (nt > 0.0)
    skipped = int(np.count_nonzero(~keep))
    ratio = np.zeros(len(r))
    ratio[keep] = ns[keep] / nt[keep]
    return LineVectorSet(ids[r[keep]], ids[s[keep]], vs[keep], vt[keep],
                         ratio[keep], n_zero_skipped=skipped)


@dataclass(frozen=True)
class RatioRange:
    """Membership test for retained scale ratios.

    Uses the same floor-based bin arithmetic that built the histogram, so
    incremental updates agree exactly with a from-scratch rebuild. The
    `exact` mode handles the degenerate all-identical-ratio case and `low`
    equality; `everything` accepts any ratio (filter disabled).
    """

    low: float
    high: float
    mode: str = "interval"  # interval | exact | everything
    lower_bound: float = 0.0
    bin_width: float = 1.0
    first_bin: int = 0
    last_bin: int = 0

    @classmethod
    def everything(cls) -> "RatioRange":
        return cls(low=0.0, high=math.inf, mode="everything")

    @classmethod
    def exact(cls, value: float) -> "RatioRange":
        return cls(low=value, high=value, mode="exact")

    def contains(self, ratio) -> np.ndarray | bool:
        if self.mode == "everything":
            return np.full(np.shape(ratio), True) if np.ndim(ratio) else True
        if self.mode == "exact":
            return np.equal(ratio, self.low)
        idx = np.floor((np.asarray(ratio, dtype=np.float64) - self.lower_bound) / self.bin_width)
        result = (idx >= self.first_bin) & (idx <= self.last_bin)
        return result if np.ndim(ratio) else bool(result)


def length_ratio_filter(lvs: LineVectorSet) -> tuple[LineVectorSet, RatioRange, Histogram | None]:
    """Keep line vectors from the dominant scale-ratio bin and its neighbors.

    Builds the scale-ratio histogram (Scott's rule width), selects the
    maximal-count bin (ties broken toward the lower index) plus the
    immediate left/right neighbors when they exist, and returns the
    retained set together with the ratio interval for later incremental
    updates.

    When every ratio is identical the full set is returned with a
    zero-width exact range (and no histogram).
    """
    if len(lvs) == 0:
        raise TooFewCorrespondences("cannot filter an empty line-vector set")
    ratios = lvs.scale_ratio
    try:
        w = scotts_bin_width(ratios)
    except DegenerateDistribution:
        return lvs, RatioRange.exact(float(ratios[0])), None
    lower = float(ratios.min())
    n_bins = int(np.floor((ratios.max() - lower) / w)) + 1
    if n_bins > MAX_BINS:
        return lvs, RatioRange.everything(), None
    hist = Histogram.from_values(ratios, w, lower, n_bins)
    top = int(np.argmax(hist.counts))  # argmax takes the first (lowest) maximal bin
    first = max(0, top - 1)
    last = min(n_bins - 1, top + 1)
    ratio_range = RatioRange(
        low=lower + first * w, high=lower + (last + 1) * w,
        lower_bound=lower, bin_width=w, first_bin=first, last_bin=last,
    )
    rows = np.sort(np.concatenate([hist.bin_members[b] for b in range(first, last + 1)]))
    return lvs.take(rows), ratio_range, hist
