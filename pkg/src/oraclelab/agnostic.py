"""Agnostic learners on the enumerated backend.

The inner loop doubles an iid epoch sample, queries LABEL only inside the
current disagreement region (agreement labels are inferred for free),
keeps every hypothesis whose empirical error sits within a
Bernstein-style ball of the epoch minimizer, and stops either by
*rejecting* the class (the best survivor is empirically worse than the
gamma oracle's bound on the target's error in the disagreement region)
or by *succeeding* (the minimizer's bound meets gamma + epsilon).

The outer loop walks the nested classes: a rejected class bumps k by one,
a successful one is probed with SEARCH; a counterexample forces k up to
the next class consistent with all counterexamples so far, and None ends
the run. Version spaces here are empirical error balls, not consistency
sets, which is why everything runs on explicit finite classes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import delta_schedule, sample_size_cap, sigma
from .hypotheses import (
    EmptyVersionSpaceError,
    Hypothesis,
    LabeledExample,
    MaskedVersionSpace,
    NestedClassSequence,
)
from .oracles import GammaOracle, OracleBundle, QueryLedger, sal_batch

__all__ = ["AlEpochRow", "AlOutcome", "AlarchRound", "run_al", "run_alarch"]


@dataclass
class AlEpochRow:
    k: int
    i: int
    empirical_error: float
    gamma_prev: float
    sigma_value: float
    survivors: int
    outcome: str  # "continue" | "early-reject" | "success"
    watch_survives: bool | None = None
    watch_is_erm: bool | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


@dataclass
class AlOutcome:
    """Return value of the inner agnostic loop.

    ``version_space`` is empty exactly when the class was rejected;
    on success it is the version space the winning epoch sampled against
    (not the post-update one), matching the guarantee it certifies.
    """

    version_space: MaskedVersionSpace
    hypothesis: Hypothesis
    hypothesis_index: int
    halting_epoch: int
    reason: str  # "early-reject" | "success"
    trace: list[AlEpochRow] = field(default_factory=list)
    epoch_masks: list[np.ndarray] = field(default_factory=list)

    @property
    def rejected(self) -> bool:
        return self.reason == "early-reject"


def _epoch_cap(d: int, nu: float, epsilon: float, delta: float) -> int:
    """Defensive bound on the number of doubling epochs: the loop provably
    stops once sigma is small against max(epsilon, epsilon^2/nu)-type
    scales; the cap turns a logic bug into a loud failure, not a hang."""
    eps_eff = min(epsilon, epsilon * epsilon / (nu + epsilon))
    eps_eff = max(eps_eff, 1e-12)
    return int(math.ceil(math.log2(sample_size_cap(d, min(eps_eff, 0.999), delta)))) + 2


def run_al(
    h_class: MaskedVersionSpace,
    bundle: OracleBundle,
    gamma: GammaOracle,
    epsilon: float,
    delta: float,
    d: int | None = None,
    watch_index: int | None = None,
) -> AlOutcome:
    """Inner agnostic loop over a finite hypothesis class.

    Epoch i draws 2^i points (LABEL inside DIS, inferred agreement labels
    outside), takes the empirical minimizer hhat_i over the pre-epoch
    version space, prunes to the Bernstein ball

        err(h) <= err(hhat_i) + 3 sqrt(err(hhat_i) s) + 4 s,
        s = sigma(d, 2^i, delta_i),

    then rejects if err(hhat_i) > gamma + sqrt(gamma s) + s and succeeds
    if err(hhat_i) + sqrt(err(hhat_i) s) + s <= gamma + epsilon, where
    gamma is the oracle's bound for the pre-epoch version space.
    Empirical errors are exact integer counts over the 2^i sample.

    ``watch_index`` marks one hypothesis whose survival and ERM status
    are recorded per epoch (diagnostics only, never a decision input).
    """
    if h_class.is_empty():
        raise EmptyVersionSpaceError("input class must be nonempty")
    if d is None:
        d = h_class.vc_dim
    cap = _epoch_cap(d, bundle.noise.nu, epsilon, delta)
    vs = h_class
    trace: list[AlEpochRow] = []
    masks: list[np.ndarray] = []
    for i in range(1, cap + 1):
        m = 2**i
        records, _ = sal_batch(vs, bundle, m)
        xs = np.array([r.x for r in records])
        ys = np.array([r.y for r in records], dtype=np.int8)
        idx = vs.survivor_indices()
        counts = vs.cls.err_counts(xs, ys, idx)
        best_local = int(np.argmin(counts))
        hhat_index = int(idx[best_local])
        b = counts[best_local] / m  # exact: power-of-two denominator
        gamma_prev = float(gamma(vs))
        s = sigma(d, m, delta_schedule(delta, i))
        ball = b + 3.0 * math.sqrt(b * s) + 4.0 * s
        new_mask = np.zeros(len(vs.cls), dtype=bool)
        new_mask[idx] = counts / m <= ball
        row = AlEpochRow(
            vs.k, i, b, gamma_prev, s, int(new_mask.sum()), "continue"
        )
        if watch_index is not None:
            row.watch_survives = bool(new_mask[watch_index])
            row.watch_is_erm = watch_index == hhat_index
        trace.append(row)
        masks.append(new_mask)
        hhat = vs.cls.hypothesis(hhat_index)
        if b > gamma_prev + math.sqrt(gamma_prev * s) + s:
            row.outcome = "early-reject"
            empty = vs.replace_mask(np.zeros(len(vs.cls), dtype=bool))
            return AlOutcome(empty, hhat, hhat_index, i, "early-reject", trace, masks)
        if b + math.sqrt(b * s) + s <= gamma_prev + epsilon:
            row.outcome = "success"
            return AlOutcome(vs, hhat, hhat_index, i, "success", trace, masks)
        vs = vs.replace_mask(new_mask)
        if vs.is_empty():
            # cannot happen: the ball always contains the minimizer
            raise AssertionError("pruning emptied the version space")
    raise RuntimeError(
        f"inner loop passed its defensive epoch cap ({cap}); "
        "check epsilon/delta/gamma consistency"
    )


@dataclass
class AlarchRound:
    k: int
    al_reason: str
    al_epochs: int
    search_result: str  # "bot" | "counterexample" | "skipped"
    ledger: dict

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def run_alarch(
    seq: NestedClassSequence,
    bundle: OracleBundle,
    gamma: GammaOracle,
    epsilon: float,
    delta: float,
    watch_hypothesis: Hypothesis | None = None,
) -> tuple[Hypothesis, QueryLedger, list[AlarchRound], list[AlOutcome]]:
    """Structural-risk walk over the nested classes with SEARCH probes.

    Round at class k runs the inner loop on H_k(S) with confidence
    delta/((k+1)(k+2)) (the schedule telescopes to delta over k >= 0;
    the k-th round's class index is unique per run since k strictly
    increases). Rejected class: k+1. Success: SEARCH the returned
    version space; None returns its hypothesis, a counterexample lands
    in S and k jumps to the next consistent class.
    """
    if seq.backend != "enumerated":
        raise ValueError("the agnostic learners need the enumerated backend")
    s: list[LabeledExample] = []
    k = 0
    rounds: list[AlarchRound] = []
    outcomes: list[AlOutcome] = []
    while True:
        if k > seq.K_max:
            raise RuntimeError(f"class index {k} exceeded K_max={seq.K_max}")
        delta_k = delta / ((k + 1) * (k + 2))
        h_class = seq.version_space(k, s)
        assert isinstance(h_class, MaskedVersionSpace)
        watch_index = None
        if watch_hypothesis is not None:
            idx = h_class.cls.index_of(watch_hypothesis)
            if idx is not None and h_class.mask[idx]:
                watch_index = idx
        outcome = run_al(
            h_class, bundle, gamma, epsilon, delta_k,
            d=seq.d(k), watch_index=watch_index,
        )
        outcomes.append(outcome)
        if outcome.rejected:
            rounds.append(
                AlarchRound(k, outcome.reason, outcome.halting_epoch,
                            "skipped", bundle.ledger.snapshot())
            )
            k += 1
            continue
        e = bundle.search_query(outcome.version_space, k=k)
        if e is None:
            rounds.append(
                AlarchRound(k, outcome.reason, outcome.halting_epoch,
                            "bot", bundle.ledger.snapshot())
            )
            return outcome.hypothesis, bundle.ledger, rounds, outcomes
        s.append(e)
        rounds.append(
            AlarchRound(k, outcome.reason, outcome.halting_epoch,
                        "counterexample", bundle.ledger.snapshot())
        )
        k = seq.min_consistent_index(s, k_lo=k + 1)
