"""Binary classifiers on [0,1], nested classes, and exact version spaces.

Two backends share one interface:

* exact — unions of at most k closed intervals (``IntervalVersionSpace``)
  and threshold classifiers (``ThresholdVersionSpace``), with version
  spaces represented by their consistency constraints and all
  disagreement-region geometry computed by an O(n) sweep over the
  constraint points;
* enumerated — explicit finite hypothesis lists on an endpoint grid
  (``EnumeratedClass``) with survivor masks (``MaskedVersionSpace``),
  which is what the agnostic algorithms need since their version spaces
  are error balls, not consistency sets.

Every hypothesis has an interval-structured positive set, so masses
(disagreement regions, symmetric differences) are exact interval
arithmetic, never Monte Carlo.

Labels are +1 / -1. The instance distribution is uniform on [0,1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

POS = 1
NEG = -1

# hypotheses with more than this many survivors are chunked in bulk
# prediction/err-count passes to bound peak memory
_CHUNK_CELLS = 1 << 24


class ExhaustionError(RuntimeError):
    """No class index up to K_max admits a consistent hypothesis. Signals
    the nested sequence was materialized too shallow for the target."""


class EmptyVersionSpaceError(ValueError):
    """Operation requires a nonempty version space."""


class LabeledExample(NamedTuple):
    x: float
    y: int


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    """Predicts +1 on [w, 1] and -1 on [0, w)."""

    w: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"threshold must lie in [0,1], got {self.w}")


@dataclass(frozen=True)
class IntervalUnion:
    """Predicts +1 on a union of disjoint, sorted, closed intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        prev_hi = -math.inf
        for lo, hi in self.intervals:
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"bad interval [{lo}, {hi}]")
            if lo <= prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi


@dataclass(frozen=True)
class Indexed:
    """Reference to a member of an enumerated class."""

    class_id: str
    index: int


Hypothesis = Union[Threshold, IntervalUnion, Indexed]

ALWAYS_NEGATIVE = IntervalUnion(())


def positive_segments(h: Hypothesis) -> tuple[tuple[float, float], ...]:
    if isinstance(h, Threshold):
        return ((h.w, 1.0),)
    if isinstance(h, IntervalUnion):
        return h.intervals
    raise TypeError(f"cannot take segments of {type(h).__name__}; resolve it first")


def predict(h: Hypothesis, x: float) -> int:
    """Deterministic +/-1 prediction at a point."""
    for lo, hi in positive_segments(h):
        if lo <= x <= hi:
            return POS
        if x < lo:
            break
    return NEG


def predict_batch(h: Hypothesis, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    out = np.zeros(xs.shape, dtype=bool)
    for lo, hi in positive_segments(h):
        out |= (xs >= lo) & (xs <= hi)
    return np.where(out, POS, NEG).astype(np.int8)


def positive_mass(h: Hypothesis) -> float:
    return float(sum(hi - lo for lo, hi in positive_segments(h)))


def ball_radius_pair_distance(h: Hypothesis, h2: Hypothesis) -> float:
    """Lebesgue measure of the symmetric difference of the positive sets;
    equals Pr[h(x) != h2(x)] under the uniform instance distribution."""
    return segments_mass(symmetric_difference_segments(h, h2))


# ---------------------------------------------------------------------------
# Segment arithmetic (sorted, disjoint (lo, hi) lists over [0,1])
# ---------------------------------------------------------------------------


def segments_mass(segments: Sequence[tuple[float, float]]) -> float:
    return float(sum(hi - lo for lo, hi in segments))


def intersect_segments(
    a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]
) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def symmetric_difference_segments(
    h: Hypothesis, h2: Hypothesis
) -> list[tuple[float, float]]:
    """Where the two positive sets differ, as disjoint segments."""
    segs_a, segs_b = positive_segments(h), positive_segments(h2)
    breaks = sorted({0.0, 1.0, *(v for lo, hi in segs_a for v in (lo, hi)),
                     *(v for lo, hi in segs_b for v in (lo, hi))})
    out: list[tuple[float, float]] = []
    for lo, hi in zip(breaks, breaks[1:]):
        if lo == hi:
            continue
        mid = 0.5 * (lo + hi)
        if predict(h, mid) != predict(h2, mid):
            if out and out[-1][1] == lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
    return out


# ---------------------------------------------------------------------------
# Disagreement-region geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionOfDisagreement:
    """Finite union of disjoint segments whose interiors are in DIS(V).

    ``mass`` is the exact Lebesgue measure (segment boundaries are a null
    set; pointwise membership at boundaries is the version space's
    ``dis_contains``, which is exact).
    """

    segments: tuple[tuple[float, float], ...]
    mass: float

    def contains(self, x: float) -> bool:
        for lo, hi in self.segments:
            if lo < x < hi:
                return True
            if x <= lo:
                break
        return False


class Partition:
    """Piecewise classification of [0,1] induced by a version space.

    Breakpoints split [0,1] into open segments on which every member's
    prediction is constant; each segment (and each breakpoint) is either
    in the disagreement region or carries the unanimous label.
    """

    def __init__(
        self,
        breaks: np.ndarray,
        seg_dis: np.ndarray,
        seg_label: np.ndarray,
        pt_dis: np.ndarray,
        pt_label: np.ndarray,
    ):
        self.breaks = breaks
        self.seg_dis = seg_dis
        self.seg_label = seg_label
        self.pt_dis = pt_dis
        self.pt_label = pt_label

    def classify(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per point: (in disagreement region, unanimous label or 0)."""
        xs = np.asarray(xs, dtype=np.float64)
        idx = np.searchsorted(self.breaks, xs, side="right") - 1
        idx = np.clip(idx, 0, len(self.breaks) - 2)
        in_dis = self.seg_dis[idx].copy()
        labels = self.seg_label[idx].copy()
        # points landing exactly on a breakpoint get the pointwise verdict;
        # the right endpoint of the final segment needs its own check
        pt_idx = np.where(xs == self.breaks[-1], len(self.breaks) - 1, idx)
        exact = xs == self.breaks[pt_idx]
        if np.any(exact):
            where = np.nonzero(exact)[0]
            in_dis[where] = self.pt_dis[pt_idx[where]]
            labels[where] = self.pt_label[pt_idx[where]]
        labels = np.where(in_dis, 0, labels)
        return in_dis, labels.astype(np.int8)

    def dis_region(self) -> RegionOfDisagreement:
        segs: list[tuple[float, float]] = []
        n_seg = len(self.seg_dis)
        i = 0
        while i < n_seg:
            if not self.seg_dis[i]:
                i += 1
                continue
            lo = self.breaks[i]
            j = i
            # extend across breakpoints that are themselves in DIS
            while (
                j + 1 < n_seg
                and self.seg_dis[j + 1]
                and self.pt_dis[j + 1]
            ):
                j += 1
            segs.append((float(lo), float(self.breaks[j + 1])))
            i = j + 1
        mass = segments_mass(segs)
        return RegionOfDisagreement(tuple(segs), mass)


# ---------------------------------------------------------------------------
# Exact backend: unions of <= k closed intervals
# ---------------------------------------------------------------------------


def _dedup_examples(
    examples: Iterable[tuple[float, int]],
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Sorted distinct constraint points. Returns (xs, ys, conflict)."""
    pts: dict[float, int] = {}
    conflict = False
    for x, y in examples:
        y = int(y)
        if y not in (POS, NEG):
            raise ValueError(f"label must be +/-1, got {y}")
        if x in pts and pts[x] != y:
            conflict = True
        pts[x] = pts.get(x, y)
    xs = np.array(sorted(pts), dtype=np.float64)
    ys = np.array([pts[x] for x in xs], dtype=np.int8)
    return xs, ys, conflict


def positive_run_count(examples: Iterable[tuple[float, int]]) -> int | None:
    """Number of maximal runs of consecutive +1 labels in x-sorted order,
    or None when some point carries both labels (no classifier fits)."""
    xs, ys, conflict = _dedup_examples(examples)
    if conflict:
        return None
    return _count_runs(ys)


def is_realizable_by_k_intervals(
    examples: Iterable[tuple[float, int]], k: int
) -> bool:
    """True iff some union of <= k closed intervals fits every example."""
    runs = positive_run_count(examples)
    return runs is not None and runs <= k


class IntervalVersionSpace:
    """H_k(S): unions of at most k closed intervals consistent with S."""

    def __init__(self, k: int, examples: Iterable[tuple[float, int]] = ()):
        self.k = k
        self.xs, self.ys, conflict = _dedup_examples(examples)
        self._runs = None if conflict else _count_runs(self.ys)
        self._partition: Partition | None = None

    @property
    def vc_dim(self) -> int:
        return 2 * self.k

    def is_empty(self) -> bool:
        return self._runs is None or self._runs > self.k

    def examples(self) -> list[LabeledExample]:
        return [LabeledExample(float(x), int(y)) for x, y in zip(self.xs, self.ys)]

    def with_examples(
        self, extra: Iterable[tuple[float, int]]
    ) -> "IntervalVersionSpace":
        merged = list(zip(self.xs, self.ys)) + [(float(x), int(y)) for x, y in extra]
        return IntervalVersionSpace(self.k, merged)

    # Feasibility deltas for inserting a forced label into a gap: a new
    # positive between two negatives opens a run (+1); a new negative
    # between two consecutive positives splits their run (+1); everything
    # else leaves the run count unchanged.  Gap neighbors outside [0,1]
    # count as negative.
    def _gap_deltas(self, left_pos: bool, right_pos: bool) -> tuple[int, int]:
        d_pos = 0 if (left_pos or right_pos) else 1
        d_neg = 1 if (left_pos and right_pos) else 0
        return d_pos, d_neg

    def _feasible_labels(self, gap_index: int) -> tuple[bool, bool]:
        """(can force +1, can force -1) inside gap ``gap_index``; gaps are
        indexed 0..n with gap i lying between constraint i-1 and i."""
        runs = self._runs
        assert runs is not None
        left_pos = gap_index > 0 and self.ys[gap_index - 1] == POS
        right_pos = gap_index < len(self.xs) and self.ys[gap_index] == POS
        d_pos, d_neg = self._gap_deltas(left_pos, right_pos)
        return runs + d_pos <= self.k, runs + d_neg <= self.k

    def contains(self, h: Hypothesis) -> bool:
        """Membership: at most k intervals and consistent with every
        constraint."""
        if self.is_empty():
            return False
        segs = positive_segments(h)
        if len(segs) > self.k:
            return False
        return all(
            predict(h, float(x)) == int(y) for x, y in zip(self.xs, self.ys)
        )

    def dis_contains(self, x: float) -> bool:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space has no DIS")
        i = int(np.searchsorted(self.xs, x))
        if i < len(self.xs) and self.xs[i] == x:
            return False  # constraint point: label forced
        ok_pos, ok_neg = self._feasible_labels(i)
        return ok_pos and ok_neg

    def agreement_label(self, x: float) -> int:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        i = int(np.searchsorted(self.xs, x))
        if i < len(self.xs) and self.xs[i] == x:
            return int(self.ys[i])
        ok_pos, ok_neg = self._feasible_labels(i)
        if ok_pos and ok_neg:
            raise ValueError(f"x={x} lies in the disagreement region")
        return POS if ok_pos else NEG

    def partition(self) -> Partition:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        if self._partition is None:
            runs = self._runs
            n = len(self.xs)
            pos = self.ys == POS
            # gap g in 0..n lies between constraint g-1 and constraint g
            left_pos = np.zeros(n + 1, dtype=bool)
            left_pos[1:] = pos
            right_pos = np.zeros(n + 1, dtype=bool)
            right_pos[:n] = pos
            d_pos = np.where(left_pos | right_pos, 0, 1)
            d_neg = np.where(left_pos & right_pos, 1, 0)
            ok_pos = runs + d_pos <= self.k
            ok_neg = runs + d_neg <= self.k
            gap_dis = ok_pos & ok_neg
            gap_label = np.where(ok_pos, POS, NEG).astype(np.int8)
            gap_label[gap_dis] = 0

            raw = np.concatenate(([0.0], self.xs, [1.0]))
            keep = raw[1:] > raw[:-1]  # drop zero-length end gaps
            seg_dis = gap_dis[keep]
            seg_label = gap_label[keep]
            breaks = np.unique(raw)

            ci = np.searchsorted(self.xs, breaks)
            is_constraint = np.zeros(len(breaks), dtype=bool)
            if n > 0:
                in_range = ci < n
                is_constraint[in_range] = self.xs[ci[in_range]] == breaks[in_range]
            pt_dis = np.zeros(len(breaks), dtype=bool)
            pt_label = np.zeros(len(breaks), dtype=np.int8)
            if n > 0:
                pt_label[is_constraint] = self.ys[ci[is_constraint]]
            # non-constraint breakpoints are only 0 and 1; they inherit the
            # verdict of the gap they open/close
            for b in np.nonzero(~is_constraint)[0]:
                g = int(np.searchsorted(self.xs, breaks[b]))
                pt_dis[b] = gap_dis[g]
                pt_label[b] = gap_label[g]
            self._partition = Partition(breaks, seg_dis, seg_label, pt_dis, pt_label)
        return self._partition

    def dis_region(self) -> RegionOfDisagreement:
        return self.partition().dis_region()

    def canonical_member(self) -> IntervalUnion:
        """Minimal consistent hypothesis: one closed interval per positive
        run, spanning exactly that run's constraint points."""
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        intervals: list[tuple[float, float]] = []
        start = None
        for x, y in zip(self.xs, self.ys):
            if y == POS:
                if start is None:
                    start = float(x)
                end = float(x)
            elif start is not None:
                intervals.append((start, end))
                start = None
        if start is not None:
            intervals.append((start, end))
        return IntervalUnion(tuple(intervals))

    def erm(self, sample: Iterable[tuple[float, int]]) -> IntervalUnion:
        """Exact backend supports only the consistent case (error 0)."""
        refined = self.with_examples(sample)
        if refined.is_empty():
            raise EmptyVersionSpaceError(
                "no member of the exact version space fits the sample; "
                "use the enumerated backend for agnostic ERM"
            )
        return refined.canonical_member()


def _count_runs(ys: np.ndarray) -> int:
    pos = np.asarray(ys) == POS
    if pos.size == 0:
        return 0
    starts = pos.copy()
    starts[1:] &= ~pos[:-1]
    return int(starts.sum())


class ThresholdVersionSpace:
    """Thresholds h_w with w constrained to an interval of [0,1].

    Consistency with examples gives w in (max negative x, min positive x];
    the binary-search driver also builds half-open ranges directly.
    """

    def __init__(self, lo: float, hi: float, lo_closed: bool, hi_closed: bool):
        self.lo = lo
        self.hi = hi
        self.lo_closed = lo_closed
        self.hi_closed = hi_closed
        self._partition: Partition | None = None

    vc_dim = 1

    @classmethod
    def from_examples(
        cls, examples: Iterable[tuple[float, int]] = ()
    ) -> "ThresholdVersionSpace":
        lo, lo_closed = 0.0, True
        hi, hi_closed = 1.0, True
        for x, y in examples:
            if y == POS:
                if x < hi:
                    hi, hi_closed = float(x), True
            elif y == NEG:
                if x > lo or (x == lo and lo_closed):
                    lo, lo_closed = float(x), False
            else:
                raise ValueError(f"label must be +/-1, got {y}")
        return cls(lo, hi, lo_closed, hi_closed)

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def with_examples(
        self, extra: Iterable[tuple[float, int]]
    ) -> "ThresholdVersionSpace":
        lo, lo_closed, hi, hi_closed = self.lo, self.lo_closed, self.hi, self.hi_closed
        for x, y in extra:
            if y == POS:
                if x < hi:
                    hi, hi_closed = float(x), True
            else:
                if x > lo or (x == lo and lo_closed):
                    lo, lo_closed = float(x), False
        return ThresholdVersionSpace(lo, hi, lo_closed, hi_closed)

    def contains(self, h: Hypothesis) -> bool:
        if self.is_empty() or not isinstance(h, Threshold):
            return False
        above = (h.w >= self.lo) if self.lo_closed else (h.w > self.lo)
        below = (h.w <= self.hi) if self.hi_closed else (h.w < self.hi)
        return above and below

    def dis_contains(self, x: float) -> bool:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space has no DIS")
        # disagreement at x needs one member w <= x and another w > x
        has_leq = (x >= self.lo) if self.lo_closed else (x > self.lo)
        has_gt = x < self.hi
        return has_leq and has_gt

    def agreement_label(self, x: float) -> int:
        if self.dis_contains(x):
            raise ValueError(f"x={x} lies in the disagreement region")
        has_leq = (x >= self.lo) if self.lo_closed else (x > self.lo)
        return POS if has_leq else NEG

    def partition(self) -> Partition:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        if self._partition is None:
            breaks = np.unique(np.array([0.0, self.lo, self.hi, 1.0]))
            mids = 0.5 * (breaks[:-1] + breaks[1:])
            seg_dis = np.array([self.dis_contains(m) for m in mids])
            seg_label = np.array(
                [0 if d else self.agreement_label(m) for d, m in zip(seg_dis, mids)],
                dtype=np.int8,
            )
            pt_dis = np.array([self.dis_contains(b) for b in breaks])
            pt_label = np.array(
                [0 if d else self.agreement_label(b) for d, b in zip(pt_dis, breaks)],
                dtype=np.int8,
            )
            self._partition = Partition(breaks, seg_dis, seg_label, pt_dis, pt_label)
        return self._partition

    def dis_region(self) -> RegionOfDisagreement:
        return self.partition().dis_region()

    def canonical_member(self) -> Threshold:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        # minimal positive set: the largest surviving threshold
        return Threshold(self.hi if self.hi_closed else np.nextafter(self.hi, 0.0))

    def erm(self, sample: Iterable[tuple[float, int]]) -> Threshold:
        refined = self.with_examples(sample)
        if refined.is_empty():
            raise EmptyVersionSpaceError("no consistent threshold for the sample")
        return refined.canonical_member()


# ---------------------------------------------------------------------------
# Enumerated backend
# ---------------------------------------------------------------------------

_EMPTY_SLOT = 1.5  # sentinel endpoint outside [0,1]: empty interval slot


class EnumeratedClass:
    """Finite hypothesis class stored as an (n, slots, 2) endpoint array.

    Unused interval slots hold the out-of-range sentinel so vectorized
    prediction and measure formulas need no masking. ``kind`` only decides
    how a member materializes (Threshold vs IntervalUnion).
    """

    def __init__(
        self,
        class_id: str,
        k: int,
        vc_dim: int,
        bounds: np.ndarray,
        kind: str = "intervals",
        grid: np.ndarray | None = None,
    ):
        self.class_id = class_id
        self.k = k
        self.vc_dim = vc_dim
        self.bounds = bounds
        self.kind = kind
        self.grid = grid

    def __len__(self) -> int:
        return self.bounds.shape[0]

    def hypothesis(self, index: int) -> Hypothesis:
        row = self.bounds[index]
        real = row[row[:, 0] <= 1.0]
        if self.kind == "thresholds":
            return Threshold(float(real[0, 0]))
        return IntervalUnion(tuple((float(lo), float(hi)) for lo, hi in real))

    def resolve(self, ref: Indexed) -> Hypothesis:
        if ref.class_id != self.class_id:
            raise KeyError(
                f"reference to {ref.class_id!r} cannot resolve in "
                f"{self.class_id!r}"
            )
        return self.hypothesis(ref.index)

    def index_of(self, h: Hypothesis) -> int | None:
        """Canonical index of an exact member, or None."""
        if isinstance(h, Indexed):
            return h.index if h.class_id == self.class_id else None
        for j in range(len(self)):
            if self.hypothesis(j) == h:
                return j
        return None

    def predictions(
        self, xs: np.ndarray, indices: np.ndarray | None = None
    ) -> np.ndarray:
        """Boolean positive-prediction matrix, rows = hypotheses."""
        xs = np.asarray(xs, dtype=np.float64)
        b = self.bounds if indices is None else self.bounds[indices]
        inside = (xs[None, None, :] >= b[:, :, 0:1]) & (
            xs[None, None, :] <= b[:, :, 1:2]
        )
        return inside.any(axis=1)

    def err_counts(
        self,
        xs: np.ndarray,
        ys: np.ndarray,
        indices: np.ndarray | None = None,
    ) -> np.ndarray:
        """Exact integer error counts of each (selected) hypothesis."""
        xs = np.asarray(xs, dtype=np.float64)
        y_pos = np.asarray(ys) == POS
        b = self.bounds if indices is None else self.bounds[indices]
        n = b.shape[0]
        if n == 0 or xs.size == 0:
            return np.zeros(n, dtype=np.int64)
        chunk = max(1, _CHUNK_CELLS // max(1, xs.size))
        out = np.empty(n, dtype=np.int64)
        for s in range(0, n, chunk):
            bb = b[s : s + chunk]
            inside = (xs[None, None, :] >= bb[:, :, 0:1]) & (
                xs[None, None, :] <= bb[:, :, 1:2]
            )
            pred_pos = inside.any(axis=1)
            out[s : s + len(bb)] = (pred_pos != y_pos[None, :]).sum(axis=1)
        return out

    def consistent_mask(self, examples: Iterable[tuple[float, int]]) -> np.ndarray:
        exs = list(examples)
        if not exs:
            return np.ones(len(self), dtype=bool)
        xs = np.array([e[0] for e in exs])
        ys = np.array([e[1] for e in exs])
        return self.err_counts(xs, ys) == 0

    def distances_from(self, h: Hypothesis) -> np.ndarray:
        """Exact symmetric-difference measure from h to every member."""
        segs = positive_segments(h)
        b = self.bounds
        lengths = np.clip(b[:, :, 1] - b[:, :, 0], 0.0, None)
        mass_members = np.where(b[:, :, 0] <= 1.0, lengths, 0.0).sum(axis=1)
        mass_h = positive_mass(h)
        overlap = np.zeros(len(self))
        for lo, hi in segs:
            cut_lo = np.maximum(b[:, :, 0], lo)
            cut_hi = np.minimum(b[:, :, 1], hi)
            overlap += np.clip(cut_hi - cut_lo, 0.0, None).sum(axis=1)
        return mass_h + mass_members - 2.0 * overlap


class MaskedVersionSpace:
    """Survivor mask over an enumerated class."""

    def __init__(self, cls: EnumeratedClass, mask: np.ndarray | None = None):
        self.cls = cls
        self.mask = (
            np.ones(len(cls), dtype=bool) if mask is None else mask.astype(bool)
        )
        self._partition: Partition | None = None

    @property
    def vc_dim(self) -> int:
        return self.cls.vc_dim

    @property
    def k(self) -> int:
        return self.cls.k

    def is_empty(self) -> bool:
        return not bool(self.mask.any())

    def survivor_count(self) -> int:
        return int(self.mask.sum())

    def survivor_indices(self) -> np.ndarray:
        return np.nonzero(self.mask)[0]

    def replace_mask(self, mask: np.ndarray) -> "MaskedVersionSpace":
        return MaskedVersionSpace(self.cls, mask)

    def contains(self, h: Hypothesis) -> bool:
        idx = self.cls.index_of(h)
        return idx is not None and bool(self.mask[idx])

    def with_examples(
        self, extra: Iterable[tuple[float, int]]
    ) -> "MaskedVersionSpace":
        return self.replace_mask(self.mask & self.cls.consistent_mask(extra))

    def _breakpoints(self) -> np.ndarray:
        b = self.cls.bounds[self.mask]
        pts = b[b <= 1.0]
        return np.unique(np.concatenate(([0.0, 1.0], pts.ravel())))

    def partition(self) -> Partition:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        if self._partition is None:
            idx = self.survivor_indices()
            breaks = self._breakpoints()
            mids = 0.5 * (breaks[:-1] + breaks[1:])
            pred_seg = self.cls.predictions(mids, idx)
            pred_pt = self.cls.predictions(breaks, idx)
            seg_dis = pred_seg.any(axis=0) & ~pred_seg.all(axis=0)
            seg_label = np.where(pred_seg.all(axis=0), POS, NEG).astype(np.int8)
            seg_label[seg_dis] = 0
            pt_dis = pred_pt.any(axis=0) & ~pred_pt.all(axis=0)
            pt_label = np.where(pred_pt.all(axis=0), POS, NEG).astype(np.int8)
            pt_label[pt_dis] = 0
            self._partition = Partition(breaks, seg_dis, seg_label, pt_dis, pt_label)
        return self._partition

    def dis_contains(self, x: float) -> bool:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space has no DIS")
        preds = self.cls.predictions(np.array([x]), self.survivor_indices())[:, 0]
        return bool(preds.any() and not preds.all())

    def agreement_label(self, x: float) -> int:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        preds = self.cls.predictions(np.array([x]), self.survivor_indices())[:, 0]
        if preds.any() and not preds.all():
            raise ValueError(f"x={x} lies in the disagreement region")
        return POS if preds[0] else NEG

    def dis_region(self) -> RegionOfDisagreement:
        return self.partition().dis_region()

    def canonical_member(self) -> Hypothesis:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        return self.cls.hypothesis(int(self.survivor_indices()[0]))

    def err_counts(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.cls.err_counts(xs, ys, self.survivor_indices())

    def erm(self, sample: Iterable[tuple[float, int]]) -> Hypothesis:
        """Empirical risk minimizer; ties go to the lowest canonical index."""
        idx, _ = self.erm_index(sample)
        return self.cls.hypothesis(idx)

    def erm_index(self, sample: Iterable[tuple[float, int]]) -> tuple[int, int]:
        if self.is_empty():
            raise EmptyVersionSpaceError("empty version space")
        exs = list(sample)
        idx = self.survivor_indices()
        if not exs:
            return int(idx[0]), 0
        xs = np.array([e[0] for e in exs])
        ys = np.array([e[1] for e in exs])
        counts = self.cls.err_counts(xs, ys, idx)
        best = int(np.argmin(counts))  # argmin keeps the lowest index on ties
        return int(idx[best]), int(counts[best])


# ---------------------------------------------------------------------------
# Nested class sequences
# ---------------------------------------------------------------------------

VersionSpace = Union[IntervalVersionSpace, ThresholdVersionSpace, MaskedVersionSpace]


class NestedClassSequence:
    """H_0 subset H_1 subset ... up to a materialized K_max.

    The interval family uses d_0 = 0 and d_k = 2k. Enumerated sequences
    keep each class as a prefix of the next, so canonical indices agree
    across levels and nesting holds by construction.
    """

    def __init__(
        self,
        backend: str,
        K_max: int,
        class_dims: dict[int, int],
        classes: list[EnumeratedClass] | None = None,
        grid: np.ndarray | None = None,
    ):
        self.backend = backend
        self.K_max = K_max
        self.class_dims = class_dims
        self.classes = classes
        self.grid = grid

    @classmethod
    def exact_intervals(cls, K_max: int) -> "NestedClassSequence":
        dims = {k: (0 if k == 0 else 2 * k) for k in range(K_max + 1)}
        return cls("exact-intervals", K_max, dims)

    @classmethod
    def enumerated_intervals(
        cls, K_max: int, resolution: int = 21
    ) -> "NestedClassSequence":
        # class size grows like resolution^(2k); 21 points keep the k=2,3
        # unions enumerable (thousands to ~100k rows), finer grids are for
        # single-interval or threshold classes
        grid = np.linspace(0.0, 1.0, resolution)
        dims = {k: (0 if k == 0 else 2 * k) for k in range(K_max + 1)}
        classes = []
        prev = np.full((1, K_max if K_max > 0 else 1, 2), _EMPTY_SLOT)
        classes.append(
            EnumeratedClass("intervals_k0", 0, 0, prev.copy(), "intervals", grid)
        )
        for k in range(1, K_max + 1):
            new_rows = _exact_k_interval_rows(grid, k, K_max)
            bounds = np.concatenate([classes[-1].bounds, new_rows], axis=0)
            classes.append(
                EnumeratedClass(f"intervals_k{k}", k, dims[k], bounds, "intervals", grid)
            )
        return cls("enumerated", K_max, dims, classes, grid)

    @classmethod
    def threshold_grid(cls, resolution: int = 201) -> EnumeratedClass:
        """Standalone finite threshold class (not part of a sequence)."""
        grid = np.linspace(0.0, 1.0, resolution)
        bounds = np.full((resolution, 1, 2), _EMPTY_SLOT)
        bounds[:, 0, 0] = grid
        bounds[:, 0, 1] = 1.0
        return EnumeratedClass(
            f"thresholds_r{resolution}", 1, 1, bounds, "thresholds", grid
        )

    def d(self, k: int) -> int:
        return self.class_dims[k]

    def version_space(
        self, k: int, examples: Iterable[tuple[float, int]] = ()
    ) -> VersionSpace:
        if k > self.K_max:
            raise ExhaustionError(f"class index {k} above K_max={self.K_max}")
        if self.backend == "exact-intervals":
            return IntervalVersionSpace(k, examples)
        assert self.classes is not None
        cls_k = self.classes[k]
        return MaskedVersionSpace(cls_k, cls_k.consistent_mask(examples))

    def is_realizable(self, k: int, examples: Iterable[tuple[float, int]]) -> bool:
        if self.backend == "exact-intervals":
            return is_realizable_by_k_intervals(examples, k)
        assert self.classes is not None
        return bool(self.classes[k].consistent_mask(examples).any())

    def min_consistent_index(
        self, examples: Iterable[tuple[float, int]], k_lo: int = 0
    ) -> int:
        exs = list(examples)
        if self.backend == "exact-intervals":
            runs = positive_run_count(exs)
            if runs is not None:
                k = max(k_lo, runs)
                if k <= self.K_max:
                    return k
            raise ExhaustionError(
                f"no consistent class at any k in [{k_lo}, {self.K_max}]"
            )
        for k in range(k_lo, self.K_max + 1):
            if self.is_realizable(k, exs):
                return k
        raise ExhaustionError(
            f"no consistent class at any k in [{k_lo}, {self.K_max}]"
        )


def _exact_k_interval_rows(grid: np.ndarray, k: int, slots: int) -> np.ndarray:
    """All unions of exactly k disjoint nonempty closed grid intervals."""
    r = len(grid)
    rows: list[list[float]] = []

    def rec(start: int, chosen: list[tuple[int, int]]):
        if len(chosen) == k:
            row = []
            for a, b in chosen:
                row.extend((grid[a], grid[b]))
            rows.append(row)
            return
        remaining = k - len(chosen) - 1  # intervals still to place afterwards
        for a in range(start, r - remaining):
            for b in range(a, r - remaining):
                rec(b + 1, chosen + [(a, b)])

    rec(0, [])
    out = np.full((len(rows), slots, 2), _EMPTY_SLOT)
    for i, row in enumerate(rows):
        for j in range(k):
            out[i, j, 0] = row[2 * j]
            out[i, j, 1] = row[2 * j + 1]
    return out


# ---------------------------------------------------------------------------
# Spec-facing functional wrappers
# ---------------------------------------------------------------------------


def dis_contains(vs: VersionSpace, x: float) -> bool:
    return vs.dis_contains(x)


def dis_region(vs: VersionSpace) -> RegionOfDisagreement:
    return vs.dis_region()


def agreement_label(vs: VersionSpace, x: float) -> int:
    return vs.agreement_label(x)


def erm(vs: VersionSpace, sample: Iterable[tuple[float, int]]) -> Hypothesis:
    return vs.erm(sample)


def min_consistent_index(
    seq: NestedClassSequence, examples: Iterable[tuple[float, int]], k_lo: int = 0
) -> int:
    return seq.min_consistent_index(examples, k_lo)


def disagreement_coefficient_estimate(
    vs: MaskedVersionSpace,
    center: Hypothesis | None = None,
    r: float = 0.05,
    n_radii: int = 16,
    max_centers: int = 64,
) -> float:
    """Grid lower bound on sup over centers h in V and radii r' >= r of
    Pr[DIS(B_V(h, r'))] / r'.

    Centers default to an evenly spaced subsample of the survivors; radii
    run a geometric grid from r to 1. Ball masses are exact.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0,1], got {r}")
    if vs.is_empty():
        raise EmptyVersionSpaceError("empty version space")
    if center is not None:
        centers = [center]
    else:
        idx = vs.survivor_indices()
        take = idx[np.linspace(0, len(idx) - 1, min(max_centers, len(idx))).astype(int)]
        centers = [vs.cls.hypothesis(int(i)) for i in np.unique(take)]
    if r >= 1.0:
        radii = np.array([1.0])
    else:
        radii = np.geomspace(r, 1.0, n_radii)
    best = 0.0
    for h in centers:
        dists = vs.cls.distances_from(h)
        for rp in radii:
            ball = vs.mask & (dists <= rp + 1e-12)
            if not ball.any():
                continue
            mass = MaskedVersionSpace(vs.cls, ball).dis_region().mass
            best = max(best, mass / rp)
    return best


# ---------------------------------------------------------------------------
# JSON schema (documented in README; used by the harness golden tests)
# ---------------------------------------------------------------------------


def hypothesis_to_json(h: Hypothesis) -> dict:
    if isinstance(h, Threshold):
        return {"type": "threshold", "w": h.w}
    if isinstance(h, IntervalUnion):
        return {"type": "interval_union", "intervals": [list(p) for p in h.intervals]}
    return {"type": "indexed", "class_id": h.class_id, "index": h.index}


def hypothesis_from_json(obj: dict) -> Hypothesis:
    t = obj["type"]
    if t == "threshold":
        return Threshold(float(obj["w"]))
    if t == "interval_union":
        return IntervalUnion(tuple((float(a), float(b)) for a, b in obj["intervals"]))
    if t == "indexed":
        return Indexed(obj["class_id"], int(obj["index"]))
    raise ValueError(f"unknown hypothesis type {t!r}")


def examples_to_json(examples: Iterable[tuple[float, int]]) -> list[dict]:
    return [{"x": float(x), "y": int(y)} for x, y in examples]


def examples_from_json(items: Iterable[dict]) -> list[LabeledExample]:
    return [LabeledExample(float(o["x"]), int(o["y"])) for o in items]


def dumps_hypothesis(h: Hypothesis) -> str:
    return json.dumps(hypothesis_to_json(h), sort_keys=True)
