"""Anytime cost-amortized learner and its subroutines.

Instead of a target accuracy, this learner takes a SEARCH-to-LABEL cost
ratio tau and keeps improving until a cost budget runs out. It buys one
SEARCH after every (at most) tau LABEL queries, so class upgrades arrive
as early as the budget allows. Between probes it runs selective sampling
with per-step version-space pruning; an error check against a structural
minimum over all higher classes can force an upgrade even sooner.

A SEARCH that returns None *verifies* the current iteration: the working
dataset becomes the trusted snapshot and the empirical minimizer of the
surviving hypotheses becomes the stored solution. A counterexample (or a
failed error check) instead discards everything gathered since the last
snapshot and restarts on the upgraded class.

State bookkeeping relies on the fact that the trusted snapshot is always
a prefix of the working dataset, and that nested enumerated classes are
stored prefix-first, so one error-count vector over the top class serves
every class and version space at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bounds import sigma
from .hypotheses import (
    POS,
    Hypothesis,
    LabeledExample,
    MaskedVersionSpace,
    NestedClassSequence,
)
from .oracles import DrawnExample, OracleBundle, QueryLedger, sal_step

__all__ = [
    "AalarchDiagnostics",
    "AalarchResult",
    "AnytimeTraceRow",
    "TimelineRow",
    "error_at_cost",
    "error_check",
    "prune_version_space",
    "run_aalarch",
    "timeline_to_csv",
    "true_error",
    "upgrade_version_space",
]


def true_error(h: Hypothesis, bundle: OracleBundle) -> float:
    """Exact err(h) under the bundle's noise model: eta + (1-2 eta) times
    the symmetric-difference mass under rcn, the mass alone when
    realizable, pool averaging for pointwise tables."""
    return bundle.exact_error(h)


def _delta_of_class(delta: float, k: int) -> float:
    return delta / ((k + 1) * (k + 2))


def _as_xy(labeled: Sequence) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([e[0] for e in labeled], dtype=np.float64)
    ys = np.array([e[1] for e in labeled], dtype=np.int8)
    return xs, ys


def error_check(
    vs: MaskedVersionSpace,
    labeled: Sequence,
    delta: float,
    seq: NestedClassSequence,
    k: int | None = None,
) -> bool:
    """True iff the version space's best empirical error is implausibly
    high against the structural bound

        gamma = min over k' >= k, h in H_k' of
                err(h,L) + 2 sqrt(err(h,L) s_k') + 3 s_k',

    i.e. min over V of err(h,L) > gamma + 2 sqrt(gamma s_k) + 3 s_k,
    with s_j = sigma(d_j, |L|, delta/((j+1)(j+2))). The structural min is
    truncated at the sequence's K_max. Empty datasets never trip it."""
    if k is None:
        k = vs.k
    l = len(labeled)
    if l == 0 or vs.is_empty():
        return False
    xs, ys = _as_xy(labeled)
    assert seq.classes is not None
    gamma = math.inf
    for kp in range(k, seq.K_max + 1):
        counts = seq.classes[kp].err_counts(xs, ys)
        b = counts.min() / l
        s = sigma(seq.d(kp), l, _delta_of_class(delta, kp))
        gamma = min(gamma, b + 2.0 * math.sqrt(b * s) + 3.0 * s)
    b_vs = vs.err_counts(xs, ys).min() / l
    s_k = sigma(seq.d(k), l, _delta_of_class(delta, k))
    return b_vs > gamma + 2.0 * math.sqrt(gamma * s_k) + 3.0 * s_k


def prune_version_space(
    vs: MaskedVersionSpace,
    labeled: Sequence,
    delta: float,
    k: int | None = None,
) -> MaskedVersionSpace:
    """Keep the hypotheses whose empirical error is within the Bernstein
    ball of the version space's own minimizer:

        err(h,L) <= b + 2 sqrt(b s) + 3 s,  b = min over V of err(h,L).

    Never empties (the minimizer always survives); an empty dataset prunes
    nothing."""
    if k is None:
        k = vs.k
    l = len(labeled)
    if l == 0 or vs.is_empty():
        return vs
    xs, ys = _as_xy(labeled)
    idx = vs.survivor_indices()
    counts = vs.cls.err_counts(xs, ys, idx)
    b = counts.min() / l
    s = sigma(vs.vc_dim, l, _delta_of_class(delta, k))
    keep = counts / l <= b + 2.0 * math.sqrt(b * s) + 3.0 * s
    mask = np.zeros(len(vs.cls), dtype=bool)
    mask[idx[keep]] = True
    return vs.replace_mask(mask)


def upgrade_version_space(
    k: int,
    s: list[LabeledExample],
    seed_example: LabeledExample | None,
    seq: NestedClassSequence,
) -> tuple[int, list[LabeledExample], MaskedVersionSpace]:
    """Add the optional counterexample to the seed set and move to the
    least class index above k consistent with it. Raises ExhaustionError
    past K_max."""
    s_new = list(s) + ([seed_example] if seed_example is not None else [])
    k_new = seq.min_consistent_index(s_new, k_lo=k + 1)
    vs = seq.version_space(k_new, s_new)
    assert isinstance(vs, MaskedVersionSpace)
    return k_new, s_new, vs


# ---------------------------------------------------------------------------
# Incremental error counts over the prefix-nested top class
# ---------------------------------------------------------------------------


class _CountTracker:
    """Per-hypothesis error counts of the working dataset over the top
    class, with a committed copy for snapshot rollbacks. Because each
    class is a prefix of the next, slice [:|H_k|] serves class k."""

    def __init__(self, seq: NestedClassSequence):
        assert seq.classes is not None
        self.seq = seq
        self.top = seq.classes[seq.K_max]
        self.counts = np.zeros(len(self.top), dtype=np.int64)
        self.committed = self.counts.copy()

    def append(self, x: float, y: int) -> None:
        wrong = self.top.predictions(np.array([x]))[:, 0] != (y == POS)
        self.counts += wrong

    def commit(self) -> None:
        self.committed = self.counts.copy()

    def rollback(self) -> None:
        self.counts = self.committed.copy()

    def class_min(self, k: int, committed: bool = False) -> int:
        src = self.committed if committed else self.counts
        return int(src[: len(self.seq.classes[k])].min())

    def survivor_counts(
        self, vs: MaskedVersionSpace, committed: bool = False
    ) -> np.ndarray:
        src = self.committed if committed else self.counts
        return src[vs.survivor_indices()]


def _ec_fast(
    tracker: _CountTracker,
    vs: MaskedVersionSpace,
    l: int,
    delta: float,
    seq: NestedClassSequence,
) -> bool:
    if l == 0 or vs.is_empty():
        return False
    gamma = math.inf
    for kp in range(vs.k, seq.K_max + 1):
        b = tracker.class_min(kp) / l
        s = sigma(seq.d(kp), l, _delta_of_class(delta, kp))
        gamma = min(gamma, b + 2.0 * math.sqrt(b * s) + 3.0 * s)
    b_vs = tracker.survivor_counts(vs).min() / l
    s_k = sigma(seq.d(vs.k), l, _delta_of_class(delta, vs.k))
    return b_vs > gamma + 2.0 * math.sqrt(gamma * s_k) + 3.0 * s_k


def _pvs_fast(
    tracker: _CountTracker,
    vs: MaskedVersionSpace,
    l: int,
    delta: float,
    seq: NestedClassSequence,
    committed: bool = False,
) -> MaskedVersionSpace:
    if l == 0 or vs.is_empty():
        return vs
    idx = vs.survivor_indices()
    counts = tracker.survivor_counts(vs, committed=committed)
    b = counts.min() / l
    s = sigma(seq.d(vs.k), l, _delta_of_class(delta, vs.k))
    keep = counts / l <= b + 2.0 * math.sqrt(b * s) + 3.0 * s
    mask = np.zeros(len(vs.cls), dtype=bool)
    mask[idx[keep]] = True
    return vs.replace_mask(mask)


# ---------------------------------------------------------------------------
# The anytime driver
# ---------------------------------------------------------------------------


@dataclass
class TimelineRow:
    cost: float
    label_queries: int
    search_queries: int
    k: int
    verified_size: int
    solution_error: float  # nan until a solution is stored
    verified: bool

    def to_csv(self) -> str:
        err = "" if math.isnan(self.solution_error) else f"{self.solution_error:.10g}"
        return (
            f"{self.cost:.10g},{self.label_queries},{self.search_queries},"
            f"{self.k},{self.verified_size},{err},{int(self.verified)}"
        )


TIMELINE_HEADER = (
    "cost,label_queries,search_queries,k,verified_size,"
    "exact_error_of_solution,verified"
)


def timeline_to_csv(timeline: list[TimelineRow]) -> str:
    return "\n".join([TIMELINE_HEADER] + [r.to_csv() for r in timeline])


def error_at_cost(timeline: list[TimelineRow], cost: float) -> float:
    """Exact error of the stored solution at the moment the spent cost
    first reaches ``cost`` (nan if no solution was stored by then)."""
    err = math.nan
    for row in timeline:
        if row.cost > cost:
            break
        if not math.isnan(row.solution_error):
            err = row.solution_error
    return err


@dataclass
class AnytimeTraceRow:
    event: str  # "ec-upgrade" | "counterexample" | "verified" | "budget"
    i: int
    k: int
    working_size: int
    verified_size: int
    labels_since_reset: int
    ledger: dict
    max_survivor_error: float | None = None
    errh_bound: float | None = None
    hstar_in_vs: bool | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


@dataclass
class AalarchDiagnostics:
    """Target-aware instrumentation (never used for decisions): exact
    errors of all top-class hypotheses, the target's index there (if it is
    a class member), and its least class index."""

    exact_errors: np.ndarray
    hstar_index: int | None
    kstar: int

    @classmethod
    def for_run(
        cls, seq: NestedClassSequence, bundle: OracleBundle
    ) -> "AalarchDiagnostics":
        assert seq.classes is not None
        top = seq.classes[seq.K_max]
        eta = bundle.noise.nu
        delta_mass = top.distances_from(bundle.target)
        if bundle.noise.kind == "rcn":
            errors = eta + (1.0 - 2.0 * eta) * delta_mass
        else:
            errors = np.array(
                [bundle.exact_error(top.hypothesis(j)) for j in range(len(top))]
            )
        hstar_index = top.index_of(bundle.target)
        if hstar_index is not None:
            # classes are prefix-nested: the least class holding the target
            # is the first one long enough to contain its index
            kstar = next(
                kk for kk in range(seq.K_max + 1)
                if hstar_index < len(seq.classes[kk])
            )
        else:
            kstar = len(getattr(bundle.target, "intervals", ())) or seq.K_max
        return cls(np.asarray(errors, dtype=np.float64), hstar_index, kstar)


@dataclass
class AalarchResult:
    timeline: list[TimelineRow]
    trace: list[AnytimeTraceRow]
    ledger: QueryLedger
    solution: Hypothesis | None
    final_k: int
    working: list[DrawnExample]
    verified_size: int
    unverified_iterations: int
    discarded_examples: int


def run_aalarch(
    seq: NestedClassSequence,
    bundle: OracleBundle,
    delta: float,
    tau: float,
    n_cap: int,
    cost_cap: float,
    diagnostics: AalarchDiagnostics | None = None,
) -> AalarchResult:
    """Run the anytime loop until the tau-weighted cost reaches cost_cap.

    One block: selective-sampling steps with per-step pruning until tau
    labels were bought or the working dataset reaches n_cap, with an error
    check before every step that can force a class upgrade and a restart
    from the trusted snapshot. Then one SEARCH: a counterexample upgrades
    the class and restarts from the snapshot; None commits the working
    dataset as the new snapshot and stores the surviving empirical
    minimizer as the current solution.

    The working dataset is bounded by n_cap, so a degenerate block (no
    room to sample) still issues its SEARCH and the budget drains.
    """
    if tau < 1.0:
        raise ValueError(f"cost ratio tau must be >= 1, got {tau}")
    if n_cap < 1:
        raise ValueError(f"dataset bound must be >= 1, got {n_cap}")
    if seq.backend != "enumerated":
        raise ValueError("the anytime learner needs the enumerated backend")
    bundle.ledger.tau = tau
    tracker = _CountTracker(seq)
    k = 0
    s: list[LabeledExample] = []
    vs = seq.version_space(0, [])
    assert isinstance(vs, MaskedVersionSpace)
    working: list[DrawnExample] = []
    tilde_len = 0
    i = 0
    solution: Hypothesis | None = None
    solution_err = math.nan
    unverified = 0
    discarded = 0
    timeline: list[TimelineRow] = [_tl_row(bundle, k, 0, math.nan, False)]
    trace: list[AnytimeTraceRow] = []

    def diag_fields(vs_now: MaskedVersionSpace) -> dict:
        if diagnostics is None:
            return {}
        surv = vs_now.survivor_indices()
        hstar_in = None
        if diagnostics.hstar_index is not None:
            # classes are prefix-nested: an index past the current class's
            # length means the target is not a member of this class at all
            hstar_in = diagnostics.hstar_index < len(vs_now.mask) and bool(
                vs_now.mask[diagnostics.hstar_index]
            )
        out = {
            "max_survivor_error": float(diagnostics.exact_errors[surv].max())
            if len(surv)
            else None,
            "hstar_in_vs": hstar_in,
        }
        out["errh_bound"] = _errh_bound(
            bundle.noise.nu, seq, diagnostics.kstar, max(len(working), 1),
            max(i, 1), delta,
        )
        return out

    while bundle.ledger.cost < cost_cap:
        c = 0
        upgraded = False
        while True:  # sampling block; exits on label budget, size, or upgrade
            delta_i = delta / (max(i, 1) * (max(i, 1) + 1))
            if _ec_fast(tracker, vs, len(working), delta_i, seq):
                k, s, vs = upgrade_version_space(k, s, None, seq)
                vs = _pvs_fast(tracker, vs, tilde_len, delta_i, seq,
                               committed=True)
                discarded += len(working) - tilde_len
                working = working[:tilde_len]
                tracker.rollback()
                unverified += 1
                trace.append(
                    AnytimeTraceRow(
                        "ec-upgrade", i, k, len(working), tilde_len, c,
                        bundle.ledger.snapshot(), **diag_fields(vs),
                    )
                )
                upgraded = True
                break
            if bundle.ledger.cost >= cost_cap or len(working) >= n_cap:
                break
            i += 1
            working, c = sal_step(vs, bundle, working, c)
            rec = working[-1]
            tracker.append(rec.x, rec.y)
            delta_i = delta / (i * (i + 1))
            vs = _pvs_fast(tracker, vs, len(working), delta_i, seq)
            if c >= tau or len(working) >= n_cap:
                break
        if upgraded:
            continue  # restart the block, resetting the label counter
        if bundle.ledger.cost >= cost_cap:
            break
        e = bundle.search_query(vs, k=k)
        delta_i = delta / (max(i, 1) * (max(i, 1) + 1))
        if e is not None:
            k, s, vs = upgrade_version_space(k, s, e, seq)
            vs = _pvs_fast(tracker, vs, tilde_len, delta_i, seq, committed=True)
            discarded += len(working) - tilde_len
            working = working[:tilde_len]
            tracker.rollback()
            unverified += 1
            trace.append(
                AnytimeTraceRow(
                    "counterexample", i, k, len(working), tilde_len, c,
                    bundle.ledger.snapshot(), **diag_fields(vs),
                )
            )
            timeline.append(_tl_row(bundle, k, tilde_len, solution_err, False))
        else:
            tilde_len = len(working)
            tracker.commit()
            surv = vs.survivor_indices()
            counts = tracker.survivor_counts(vs, committed=True)
            best = int(surv[int(np.argmin(counts))]) if len(surv) else None
            if best is not None:
                solution = vs.cls.hypothesis(best)
                solution_err = bundle.exact_error(solution)
            trace.append(
                AnytimeTraceRow(
                    "verified", i, k, len(working), tilde_len, c,
                    bundle.ledger.snapshot(), **diag_fields(vs),
                )
            )
            timeline.append(_tl_row(bundle, k, tilde_len, solution_err, True))
    return AalarchResult(
        timeline,
        trace,
        bundle.ledger,
        solution,
        k,
        working,
        tilde_len,
        unverified,
        discarded,
    )


def _tl_row(bundle, k, tilde_len, solution_err, verified) -> TimelineRow:
    led = bundle.ledger
    return TimelineRow(
        led.cost, led.label_queries, led.search_queries, k, tilde_len,
        solution_err, verified,
    )


def _errh_bound(
    nu: float, seq: NestedClassSequence, kstar: int, l: int, i: int,
    delta: float,
) -> float:
    """nu + 8 sqrt(nu s) + 35 s at the top-relevant class scale, the error
    envelope every survivor of a verified step must satisfy."""
    delta_ik = delta / (i * (i + 1)) / ((kstar + 1) * (kstar + 2))
    s = sigma(seq.d(kstar), l, delta_ik)
    return nu + 8.0 * math.sqrt(nu * s) + 35.0 * s


def favorable_bias_holds(
    working: Sequence[DrawnExample],
    classes: Iterable,
    target: Hypothesis,
    prefix: int | None = None,
) -> bool:
    """Exact integer check of the favorable-bias inequality on a prefix of
    the working dataset: for every hypothesis h,

        errcount(h, L^D) - errcount(h*, L^D)
            <= errcount(h, L) - errcount(h*, L),

    where L^D relabels inferred points with their shadow labels (queried
    points keep the labels they got)."""
    from .hypotheses import predict_batch

    recs = list(working if prefix is None else working[:prefix])
    if not recs:
        return True
    xs = np.array([r.x for r in recs])
    ys = np.array([r.y for r in recs], dtype=np.int8)
    shadow = np.array([r.shadow_y for r in recs], dtype=np.int8)
    star = predict_batch(target, xs)
    star_work = int((star != ys).sum())
    star_shadow = int((star != shadow).sum())
    for cls in classes:
        work = cls.err_counts(xs, ys)
        shad = cls.err_counts(xs, shadow)
        if np.any((shad - star_shadow) > (work - star_work)):
            return False
    return True


def favorable_bias_violations(
    working: Sequence[DrawnExample],
    cls,
    target: Hypothesis,
    upto: int,
) -> int:
    """Number of (hypothesis, prefix) pairs violating the favorable-bias
    inequality over every prefix length 1..upto at once, via cumulative
    error counts. Zero means the bias holds at every verified step."""
    from .hypotheses import predict_batch

    recs = list(working[:upto])
    if not recs:
        return 0
    xs = np.array([r.x for r in recs])
    ys = np.array([r.y for r in recs], dtype=np.int8)
    shadow = np.array([r.shadow_y for r in recs], dtype=np.int8)
    star = predict_batch(target, xs)
    star_work = np.cumsum(star != ys)
    star_shadow = np.cumsum(star != shadow)
    preds = cls.predictions(xs)  # (n_hyp, n_pts) positive indicator
    signs = np.where(preds, 1, -1).astype(np.int8)
    work = np.cumsum(signs != ys[None, :], axis=1)
    shad = np.cumsum(signs != shadow[None, :], axis=1)
    bad = (shad - star_shadow[None, :]) > (work - star_work[None, :])
    return int(bad.sum())
