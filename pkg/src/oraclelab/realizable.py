"""Realizable-case learners: the SEARCH-only binary-search demo, the
disagreement-based sampler CAL, and the two nested-class learners that
combine SEARCH with LABEL (one conservative, one eager).

All of them assume the hidden target has zero error, so LABEL returns the
target's label on every point of the support and every SEARCH example is
consistent with the target.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import delta_schedule, phi, sigma
from .hypotheses import (
    Hypothesis,
    LabeledExample,
    NestedClassSequence,
    Threshold,
    ThresholdVersionSpace,
    VersionSpace,
    predict_batch,
)
from .oracles import OracleBundle, QueryLedger, sal_batch

__all__ = [
    "CalResult",
    "LarchTraceRow",
    "SeabelTraceRow",
    "run_binary_search_demo",
    "run_cal",
    "run_larch",
    "run_seabel",
]


# ---------------------------------------------------------------------------
# SEARCH-only binary search for thresholds
# ---------------------------------------------------------------------------


def run_binary_search_demo(
    bundle: OracleBundle, epsilon: float
) -> tuple[Hypothesis, QueryLedger]:
    """Locate a threshold target to accuracy epsilon using SEARCH alone.

    Query the half-space version space V_x = {h_w : w < x} at the midpoint
    x of the surviving threshold range: None means the target threshold is
    <= x, a counterexample (x0, -1) proves it is > x0. Either way the
    range at least halves, so log2(1/epsilon) + O(1) queries suffice and
    LABEL is never used.
    """
    if not isinstance(bundle.target, Threshold):
        raise ValueError("binary-search demo needs a threshold target")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0,1], got {epsilon}")
    lo, hi = 0.0, 1.0
    while hi - lo > epsilon:
        x = 0.5 * (lo + hi)
        vx = ThresholdVersionSpace(lo, x, True, False)
        e = bundle.search_query(vx)
        if e is None:
            hi = x
        else:
            if e.y != -1 or e.x < x:
                raise AssertionError(f"inconsistent SEARCH reply {e}")
            lo = e.x
    return Threshold(0.5 * (lo + hi)), bundle.ledger


# ---------------------------------------------------------------------------
# CAL
# ---------------------------------------------------------------------------


@dataclass
class CalResult:
    """Labeled examples collected by CAL, with the final version space.

    ``examples`` holds only queried points (all inside the disagreement
    region of the version space current at query time); ``per_epoch`` are
    the per-epoch query counts, so constraint prefixes can be replayed.
    """

    examples: list[LabeledExample]
    epochs: int
    final_version_space: VersionSpace
    per_epoch: list[int] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.final_version_space.is_empty()


def run_cal(
    v0: VersionSpace,
    bundle: OracleBundle,
    epsilon: float,
    delta: float,
    d: int | None = None,
) -> CalResult:
    """Disagreement-based selective sampling on a fixed version space.

    Epoch i draws 2^i unlabeled points and queries LABEL exactly on those
    inside DIS of the version space carried into the epoch; it halts once
    phi(d, 2^i, delta_i/2) <= epsilon or the version space empties. The
    input space need not contain the target; an empty outcome is legal
    and reported, not raised.
    """
    if d is None:
        d = v0.vc_dim
    examples: list[LabeledExample] = []
    per_epoch: list[int] = []
    vs = v0
    i = 0
    while True:
        i += 1
        if vs.is_empty():
            return CalResult(examples, i - 1, vs, per_epoch)
        xs = bundle.draw(2**i)
        in_dis, _ = vs.partition().classify(xs)
        queried = xs[in_dis]
        if len(queried):
            ys = bundle.label_query_batch(queried)
            new = [LabeledExample(float(x), int(y)) for x, y in zip(queried, ys)]
            examples.extend(new)
            vs = vs.with_examples(new)
        per_epoch.append(int(len(queried)))
        if phi(d, 2**i, delta_schedule(delta, i) / 2.0) <= epsilon or vs.is_empty():
            return CalResult(examples, i, vs, per_epoch)


# ---------------------------------------------------------------------------
# Conservative nested-class learner (one SEARCH per iteration)
# ---------------------------------------------------------------------------


@dataclass
class LarchTraceRow:
    i: int
    k: int
    ell: int
    search_result: str  # "bot" | "counterexample" | "return"
    dis_mass: float
    exact_error: float
    ledger: dict

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def run_larch(
    seq: NestedClassSequence,
    bundle: OracleBundle,
    epsilon: float,
    delta: float,
) -> tuple[Hypothesis, QueryLedger, list[LarchTraceRow]]:
    """Alternate one SEARCH query with a CAL pass at the current accuracy.

    State: consistency constraints S (SEARCH counterexamples plus CAL
    labels), class index k, and the accuracy exponent ell. A None from
    SEARCH either halts (once 2^-ell <= epsilon) or halves the working
    accuracy; a counterexample advances k to the least consistent class.
    Non-halting iterations increase k + ell, so the loop runs at most
    k* + ceil(log2(1/epsilon)) + 1 times on realizable targets.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    s: list[LabeledExample] = []
    k = 0
    ell = 0
    trace: list[LarchTraceRow] = []
    max_iters = seq.K_max + int(math.ceil(math.log2(1.0 / epsilon))) + 3
    for i in range(1, max_iters + 1):
        vs = seq.version_space(k, s)
        e = bundle.search_query(vs, k=k)
        if e is None:
            if 2.0**-ell <= epsilon:
                h = vs.canonical_member()
                trace.append(
                    _larch_row(i, k, ell, "return", vs, h, bundle)
                )
                return h, bundle.ledger, trace
            ell += 1
            outcome = "bot"
        else:
            s.append(e)
            k = seq.min_consistent_index(s)
            outcome = "counterexample"
        cal = run_cal(
            seq.version_space(k, s),
            bundle,
            2.0**-ell,
            delta / (i * i + i),
            d=seq.d(k),
        )
        s.extend(cal.examples)
        vs_after = seq.version_space(k, s)
        h_now = vs_after.canonical_member() if not vs_after.is_empty() else None
        trace.append(_larch_row(i, k, ell, outcome, vs_after, h_now, bundle))
    raise RuntimeError(
        f"no convergence within {max_iters} iterations; "
        "is the target realizable within K_max?"
    )


def _larch_row(i, k, ell, outcome, vs, h, bundle) -> LarchTraceRow:
    mass = 0.0 if vs.is_empty() else vs.dis_region().mass
    err = math.nan if h is None else bundle.exact_error(h)
    return LarchTraceRow(i, k, ell, outcome, mass, err, bundle.ledger.snapshot())


# ---------------------------------------------------------------------------
# Eager nested-class learner (SEARCH until None, then selective sampling)
# ---------------------------------------------------------------------------


@dataclass
class SeabelTraceRow:
    i: int
    k: int
    sigma_value: float
    search_calls: int
    counterexamples: int
    dis_mass: float
    exact_error: float
    ledger: dict

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def run_seabel(
    seq: NestedClassSequence,
    bundle: OracleBundle,
    epsilon: float,
    delta: float,
    strict: bool = False,
) -> tuple[Hypothesis, QueryLedger, list[SeabelTraceRow]]:
    """Each iteration first *verifies*: SEARCH is called repeatedly,
    advancing k past every counterexample until None certifies that the
    version space's agreement region matches the target. Then it *samples*:
    2^(i+1) selective-sampling draws form the next constraint batch, with
    labels inferred for free outside the disagreement region (the
    verification stage makes those inferences provably correct). Halts
    when sigma at the current class and batch size drops below epsilon.

    ``strict`` additionally asserts, per iteration, that inferred labels
    match the target and queried points lay inside the disagreement region
    (the run never uses the target for decisions, only for assertions).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    s_prev: list[LabeledExample] = []
    k_prev = 0
    first = bundle.draw(2)
    t_cur = [
        LabeledExample(float(x), int(y))
        for x, y in zip(first, bundle.label_query_batch(first))
    ]
    trace: list[SeabelTraceRow] = []
    i = 0
    while True:
        i += 1
        s = list(s_prev)
        k = seq.min_consistent_index(s + t_cur, k_lo=k_prev)
        calls = 0
        cexs = 0
        while True:
            vs = seq.version_space(k, s + t_cur)
            e = bundle.search_query(vs, k=k)
            calls += 1
            if e is None:
                break
            cexs += 1
            s.append(e)
            k = seq.min_consistent_index(s + t_cur, k_lo=k + 1)
        vs = seq.version_space(k, s + t_cur)
        records, _ = sal_batch(vs, bundle, 2 ** (i + 1))
        if strict:
            _assert_sampling_stage(vs, records, bundle)
        sigma_value = sigma(seq.d(k), 2**i, delta_schedule(delta, i, k))
        h = vs.canonical_member()
        trace.append(
            SeabelTraceRow(
                i,
                k,
                sigma_value,
                calls,
                cexs,
                vs.dis_region().mass,
                bundle.exact_error(h),
                bundle.ledger.snapshot(),
            )
        )
        if sigma_value <= epsilon:
            return h, bundle.ledger, trace
        s_prev, k_prev = s, k
        t_cur = [LabeledExample(r.x, r.y) for r in records]


def _assert_sampling_stage(vs, records, bundle) -> None:
    xs = np.array([r.x for r in records])
    ys = np.array([r.y for r in records])
    want = predict_batch(bundle.target, xs)
    if not np.array_equal(ys, want):
        raise AssertionError("sampling-stage label disagrees with the target")
    for r in records[:64]:  # pointwise recheck on a prefix keeps strict mode cheap
        if r.queried != vs.dis_contains(r.x):
            raise AssertionError("query decision inconsistent with DIS")
