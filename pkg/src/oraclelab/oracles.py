"""LABEL and SEARCH oracles, noise models, gamma oracles, and the
selective-sampling step.

An ``OracleBundle`` owns the hidden target, the noise model, one child RNG
per randomness consumer (unlabeled sampler, label noise, shadow labels,
search policy), and a mutable ``QueryLedger``. A bundle is single-owner
state: one run per bundle, never shared.

SEARCH semantics: given a version space V inside some class, return an
example (x, h*(x)) on which *every* member of V errs, or None when no such
point exists. The returned label is always the target's, noise-free. For
an empty V the oracle must still return an example; it returns the first
sweep candidate. The choice among valid counterexamples is a policy:

* ``sweep`` (default) — ascending deterministic scan over the breakpoints
  of V, the target's interval endpoints, the midpoints they induce, and a
  uniform fallback grid; first valid point wins.
* ``uniform-random-valid`` — uniformly random valid candidate.
* ``adversarial-boundary`` — the valid candidate nearest the boundary of
  the disagreement region (least informative counterexamples).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .hypotheses import (
    Hypothesis,
    LabeledExample,
    VersionSpace,
    ball_radius_pair_distance,
    positive_segments,
    predict,
    predict_batch,
)

SEARCH_POLICIES = ("sweep", "uniform-random-valid", "adversarial-boundary")

_FALLBACK_GRID = np.linspace(0.0, 1.0, 129)


class SearchSoundnessError(AssertionError):
    """A SEARCH result failed the definitional check (validation mode)."""


@dataclass(frozen=True)
class NoiseModel:
    """Conditional label noise on top of the hidden target.

    kind: ``realizable`` (labels are exactly h*), ``rcn`` (each label
    flipped independently with probability eta), or ``pointwise`` (a step
    function of flip probabilities given as (lo, hi, p) pieces covering
    [0,1]).
    """

    kind: str = "realizable"
    eta: float = 0.0
    table: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("realizable", "rcn", "pointwise"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "rcn" and not 0.0 <= self.eta < 0.5:
            raise ValueError(f"rcn noise rate must lie in [0, 1/2), got {self.eta}")
        if self.kind == "pointwise" and not self.table:
            raise ValueError("pointwise noise needs a flip-probability table")

    @property
    def nu(self) -> float:
        """err(h*) implied by the model (uniform instance distribution)."""
        if self.kind == "realizable":
            return 0.0
        if self.kind == "rcn":
            return self.eta
        return float(sum(p * (hi - lo) for lo, hi, p in self.table))

    def flip_probs(self, xs: np.ndarray) -> np.ndarray:
        if self.kind == "realizable":
            return np.zeros(len(xs))
        if self.kind == "rcn":
            return np.full(len(xs), self.eta)
        out = np.zeros(len(xs))
        for lo, hi, p in self.table:
            out[(xs >= lo) & (xs <= hi)] = p
        return out


@dataclass
class QueryLedger:
    """Monotone counters plus the tau-weighted cost of a run."""

    label_queries: int = 0
    search_queries: int = 0
    unlabeled_draws: int = 0
    tau: float = 1.0

    @property
    def cost(self) -> float:
        return self.label_queries + self.tau * self.search_queries

    def snapshot(self) -> dict:
        return {
            "label_queries": self.label_queries,
            "search_queries": self.search_queries,
            "unlabeled_draws": self.unlabeled_draws,
            "cost": self.cost,
        }


class DrawnExample(NamedTuple):
    """One selective-sampling record.

    ``queried`` says whether the label came from LABEL (True) or was
    inferred from version-space agreement. ``shadow_y`` is what LABEL
    *would* have returned, drawn from an independent child stream for
    inferred points and equal to y for queried ones; it exists so the
    favorable-bias diagnostic has a well-defined fully-queried twin of
    the dataset, and costs nothing on the ledger.
    """

    x: float
    y: int
    queried: bool
    shadow_y: int


class OracleBundle:
    """Hidden target + noise + seeded streams + ledger, single-owner."""

    def __init__(
        self,
        target: Hypothesis,
        noise: NoiseModel | None = None,
        seed: int = 0,
        tau: float = 1.0,
        search_policy: str = "sweep",
        validate_search: bool = False,
        transcript: list | None = None,
    ):
        if search_policy not in SEARCH_POLICIES:
            raise ValueError(f"unknown search policy {search_policy!r}")
        self.target = target
        self.noise = noise or NoiseModel()
        self.seed = seed
        self.search_policy = search_policy
        self.validate_search = validate_search
        self.transcript = transcript
        self.ledger = QueryLedger(tau=tau)
        ss = np.random.SeedSequence(seed)
        kids = ss.spawn(4)
        self._sampler_rng = np.random.default_rng(kids[0])
        self._noise_rng = np.random.default_rng(kids[1])
        self._shadow_rng = np.random.default_rng(kids[2])
        self._policy_rng = np.random.default_rng(kids[3])

    # -- unlabeled sampler -------------------------------------------------

    def draw(self, n: int = 1) -> np.ndarray:
        xs = self._sampler_rng.random(n)
        self.ledger.unlabeled_draws += n
        self._log("draw", {"n": n}, None)
        return xs

    # -- LABEL ---------------------------------------------------------------

    def true_label(self, x: float) -> int:
        return predict(self.target, x)

    def true_labels(self, xs: np.ndarray) -> np.ndarray:
        return predict_batch(self.target, xs)

    def label_query(self, x: float) -> int:
        y = int(self.label_query_batch(np.array([x]))[0])
        return y

    def label_query_batch(self, xs: np.ndarray) -> np.ndarray:
        """Noisy labels; one fresh conditional draw per call and point."""
        xs = np.asarray(xs, dtype=np.float64)
        clean = self.true_labels(xs)
        if self.noise.kind == "realizable":
            ys = clean
        else:
            flips = self._noise_rng.random(len(xs)) < self.noise.flip_probs(xs)
            ys = np.where(flips, -clean, clean).astype(np.int8)
        self.ledger.label_queries += len(xs)
        self._log("label", {"n": len(xs)}, None)
        return ys

    def shadow_labels(self, xs: np.ndarray) -> np.ndarray:
        """Off-ledger iid relabeling used for inferred points only."""
        xs = np.asarray(xs, dtype=np.float64)
        clean = self.true_labels(xs)
        if self.noise.kind == "realizable":
            return clean
        flips = self._shadow_rng.random(len(xs)) < self.noise.flip_probs(xs)
        return np.where(flips, -clean, clean).astype(np.int8)

    # -- exact evaluation (simulation plumbing, not visible to algorithms) --

    def exact_error(self, h: Hypothesis) -> float:
        """err(h) under the bundle's noise, by exact interval measure."""
        delta_mass = ball_radius_pair_distance(h, self.target)
        if self.noise.kind == "realizable":
            return delta_mass
        if self.noise.kind == "rcn":
            eta = self.noise.eta
            return eta + (1.0 - 2.0 * eta) * delta_mass
        xs = np.linspace(0.0, 1.0, 20001)
        p = self.noise.flip_probs(xs)
        wrong = predict_batch(h, xs) != predict_batch(self.target, xs)
        return float(np.mean(np.where(wrong, 1.0 - p, p)))

    # -- SEARCH ----------------------------------------------------------------

    def search_query(
        self, vs: VersionSpace, k: int | None = None
    ) -> LabeledExample | None:
        self.ledger.search_queries += 1
        result = self._search(vs)
        if self.validate_search:
            self._check_search(vs, result)
        self._log(
            "search",
            {"k": k},
            None if result is None else {"x": result.x, "y": result.y},
        )
        return result

    def _candidates(self, vs: VersionSpace) -> np.ndarray:
        pts = [np.array([0.0, 1.0]), _FALLBACK_GRID]
        for lo, hi in positive_segments(self.target):
            pts.append(np.array([lo, hi]))
        if not vs.is_empty():
            pts.append(vs.partition().breaks)
        base = np.unique(np.concatenate(pts))
        mids = 0.5 * (base[:-1] + base[1:])
        return np.unique(np.concatenate([base, mids]))

    def _search(self, vs: VersionSpace) -> LabeledExample | None:
        cands = self._candidates(vs)
        if vs.is_empty():
            # the oracle must still produce an example; first sweep point
            x = float(cands[0])
            return LabeledExample(x, self.true_label(x))
        in_dis, labels = vs.partition().classify(cands)
        target_labels = self.true_labels(cands)
        valid = (~in_dis) & (labels != target_labels)
        if not valid.any():
            return None
        idx = np.nonzero(valid)[0]
        if self.search_policy == "sweep":
            pick = idx[0]
        elif self.search_policy == "uniform-random-valid":
            pick = idx[self._policy_rng.integers(len(idx))]
        else:  # adversarial-boundary
            region = vs.dis_region()
            if not region.segments:
                pick = idx[0]
            else:
                ends = np.array(
                    [v for seg in region.segments for v in seg], dtype=np.float64
                )
                dist = np.min(
                    np.abs(cands[idx][:, None] - ends[None, :]), axis=1
                )
                pick = idx[int(np.argmin(dist))]
        x = float(cands[pick])
        return LabeledExample(x, int(target_labels[pick]))

    def _check_search(
        self, vs: VersionSpace, result: LabeledExample | None
    ) -> None:
        """Definitional soundness: a returned (x,y) has y = h*(x) and every
        member of V wrong at x; None requires no candidate to be valid."""
        if result is not None:
            x, y = result
            if y != self.true_label(x):
                raise SearchSoundnessError(f"label {y} != target label at {x}")
            if not vs.is_empty():
                if vs.dis_contains(x):
                    raise SearchSoundnessError(f"{x} is in DIS, not systematic")
                if vs.agreement_label(x) == y:
                    raise SearchSoundnessError(f"members agree with target at {x}")
            return
        if vs.is_empty():
            raise SearchSoundnessError("empty version space must yield an example")
        cands = self._candidates(vs)
        in_dis, labels = vs.partition().classify(cands)
        bad = (~in_dis) & (labels != self.true_labels(cands))
        if bad.any():
            raise SearchSoundnessError(
                f"returned None but {cands[np.nonzero(bad)[0][0]]} is a "
                "valid counterexample"
            )

    # -- transcript -----------------------------------------------------------

    def _log(self, kind: str, inp: dict, out: dict | None) -> None:
        if self.transcript is not None:
            self.transcript.append(
                {
                    "kind": kind,
                    "input": inp,
                    "output": out,
                    "ledger": self.ledger.snapshot(),
                }
            )


def transcript_to_jsonl(transcript: list[dict]) -> str:
    return "\n".join(json.dumps(rec, sort_keys=True) for rec in transcript)


# ---------------------------------------------------------------------------
# gamma oracles: upper bounds on Pr[h*(x) != y, x in DIS(V)]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantGamma:
    """Always returns nu, an upper bound on err(h*); valid for every V by
    the law of total probability."""

    nu: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.nu < 1.0:
            raise ValueError(f"nu must lie in [0,1), got {self.nu}")

    def __call__(self, vs: VersionSpace) -> float:
        return self.nu


@dataclass(frozen=True)
class RcnGamma:
    """Under random classification noise at rate <= eta_bar, the target's
    error inside DIS(V) is exactly eta * Pr[x in DIS(V)], so
    eta_bar * dis_mass(V) is a valid (and usually much tighter) bound."""

    eta_bar: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_bar < 0.5:
            raise ValueError(f"eta_bar must lie in [0, 1/2), got {self.eta_bar}")

    def __call__(self, vs: VersionSpace) -> float:
        return self.eta_bar * vs.dis_region().mass


def gamma_constant(nu: float) -> ConstantGamma:
    return ConstantGamma(nu)


def gamma_rcn(eta_bar: float) -> RcnGamma:
    return RcnGamma(eta_bar)


GammaOracle = Callable[[VersionSpace], float]


# ---------------------------------------------------------------------------
# Selective sampling (single step and fixed-version-space batch)
# ---------------------------------------------------------------------------


def sal_step(
    vs: VersionSpace,
    bundle: OracleBundle,
    labeled: list[DrawnExample],
    counter: int,
) -> tuple[list[DrawnExample], int]:
    """Draw one x; query LABEL inside DIS(V), infer the agreement label
    outside. Returns the extended dataset and the updated query counter."""
    x = float(bundle.draw(1)[0])
    if vs.dis_contains(x):
        y = bundle.label_query(x)
        rec = DrawnExample(x, int(y), True, int(y))
        counter += 1
    else:
        y = vs.agreement_label(x)
        shadow = int(bundle.shadow_labels(np.array([x]))[0])
        rec = DrawnExample(x, int(y), False, shadow)
    return labeled + [rec], counter


def sal_batch(
    vs: VersionSpace, bundle: OracleBundle, n: int
) -> tuple[list[DrawnExample], int]:
    """n selective-sampling steps against a fixed version space."""
    xs = bundle.draw(n)
    in_dis, labels = vs.partition().classify(xs)
    out: list[DrawnExample | None] = [None] * n
    q_idx = np.nonzero(in_dis)[0]
    if len(q_idx):
        q_ys = bundle.label_query_batch(xs[q_idx])
        for j, i in enumerate(q_idx):
            out[i] = DrawnExample(float(xs[i]), int(q_ys[j]), True, int(q_ys[j]))
    inf_idx = np.nonzero(~in_dis)[0]
    if len(inf_idx):
        shadows = bundle.shadow_labels(xs[inf_idx])
        for j, i in enumerate(inf_idx):
            out[i] = DrawnExample(
                float(xs[i]), int(labels[i]), False, int(shadows[j])
            )
    return out, int(len(q_idx))  # type: ignore[return-value]
