"""Loss aggregation and information-content lower bounds.

Observed two-hop losses are converted to per-hop "effective losses" by
inverting the composition mixture q = p1*p2 + (1-p1)/n, either for a single
reused fact function (recurrent) or for a pair of hop functions with a
shared budget (two-function). Both closed forms are validated against
independent numerical oracles in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

from .entropy import LN2, EntropyReport, ModelKind, Task
from .worldgen import WorldConfig


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class AggregateLoss:
    """Mean/variance/count summary of per-question losses, in nats."""

    mean_loss_nats: float
    var_loss_nats: float
    count: int
    split: str | None = None
    kind: str | None = None

    @property
    def mean_loss_bits(self) -> float:
        return self.mean_loss_nats / LN2

    @property
    def total_loss_bits(self) -> float:
        return self.count * self.mean_loss_nats / LN2


def aggregate_losses(
    records: Iterable,
    split: str | None = None,
    kind: str | None = None,
    predicate: Optional[Callable] = None,
) -> AggregateLoss:
    """Single-pass Welford mean/variance of loss = -logprob over matching records."""
    count = 0
    mean = 0.0
    m2 = 0.0
    for rec in records:
        if split is not None and rec.split != split:
            continue
        if kind is not None and rec.kind != kind:
            continue
        if predicate is not None and not predicate(rec):
            continue
        if rec.logprob_nats > 0:
            raise EstimatorError(f"positive logprob for {rec.qid}: {rec.logprob_nats}")
        loss = -rec.logprob_nats
        count += 1
        delta = loss - mean
        mean += delta / count
        m2 += delta * (loss - mean)
    if count == 0:
        raise EstimatorError("no records match the selection")
    return AggregateLoss(mean, m2 / count, count, split, kind)


def merge_aggregates(a: AggregateLoss, b: AggregateLoss) -> AggregateLoss:
    """Combine two partial aggregates (commutative up to float rounding)."""
    count = a.count + b.count
    delta = b.mean_loss_nats - a.mean_loss_nats
    mean = a.mean_loss_nats + delta * b.count / count
    m2 = (
        a.var_loss_nats * a.count
        + b.var_loss_nats * b.count
        + delta * delta * a.count * b.count / count
    )
    return AggregateLoss(mean, m2 / count, count, a.split, a.kind)


class Branch(str, Enum):
    ABOVE_THRESHOLD = "above_threshold"
    BELOW_THRESHOLD = "below_threshold"
    CLAMPED = "clamped"


@dataclass(frozen=True)
class EffectiveLoss:
    """Per-hop (recurrent) or summed (two-function) loss imputed from two-hop loss."""

    per_hop_loss_nats: float | None
    summed_loss_nats: float | None
    branch: Branch
    u: float
    epsilon: float | None
    q_tilde: float


def _q_tilde(mean_loss_nats: float, var_loss_nats: float, n: int, correct: bool) -> tuple[float, bool]:
    if mean_loss_nats < -1e-12:
        raise EstimatorError("mean loss must be >= 0")
    mean_loss_nats = max(0.0, mean_loss_nats)
    if var_loss_nats < 0:
        raise EstimatorError("loss variance must be >= 0")
    q = math.exp(-mean_loss_nats)
    if correct:
        q *= 1.0 + var_loss_nats / 2.0
    clamped = not (1.0 / n <= q <= 1.0)
    return min(1.0, max(1.0 / n, q)), clamped


def two_function_threshold(n: int) -> float:
    """Two-hop probability at which both hop budgets hit their bounds: 2/n - 1/n^2."""
    return 2.0 / n - 1.0 / (n * n)


def effective_loss_recurrent(
    mean_loss_nats: float,
    var_loss_nats: float = 0.0,
    n: int = 2,
    variance_correction: bool = False,
) -> EffectiveLoss:
    """Invert q = u^2 + (1-u)/n for the per-hop probability of a reused fact map.

    Takes the root that maps q=1 to u=1 and fixes the chance level q=1/n at
    u=1/n. The variance correction is off by default, matching the
    two-hop-loss treatment that only applies it in the two-function case.
    """
    if n < 2:
        raise EstimatorError("n must be >= 2")
    q, clamped = _q_tilde(mean_loss_nats, var_loss_nats, n, variance_correction)
    disc = 1.0 - 4.0 * n * (1.0 - n * q)
    u = (1.0 + math.sqrt(disc)) / (2.0 * n)
    u = min(1.0, max(1.0 / n, u))
    branch = Branch.CLAMPED if clamped else (
        Branch.ABOVE_THRESHOLD if q > two_function_threshold(n) else Branch.BELOW_THRESHOLD
    )
    return EffectiveLoss(
        per_hop_loss_nats=-math.log(u),
        summed_loss_nats=None,
        branch=branch,
        u=u,
        epsilon=None,
        q_tilde=q,
    )


def effective_loss_two_function(
    mean_loss_nats: float,
    var_loss_nats: float = 0.0,
    n: int = 2,
    variance_correction: bool = True,
) -> EffectiveLoss:
    """Summed hop loss for a pair of hop functions with a shared budget.

    The conservative feasible split minimizes the joint hop probability:
    above the threshold q* = 2/n - 1/n^2 the second hop saturates at 1,
    below it the first hop is pinned at the chance floor 1/n.
    """
    if n < 2:
        raise EstimatorError("n must be >= 2")
    q, clamped = _q_tilde(mean_loss_nats, var_loss_nats, n, variance_correction)
    inv_n = 1.0 / n
    if q > two_function_threshold(n):
        p1 = (q - inv_n) / (1.0 - inv_n)
        p2 = 1.0
        branch = Branch.ABOVE_THRESHOLD
    else:
        p1 = inv_n
        p2 = (q - inv_n * (1.0 - inv_n)) / p1
        branch = Branch.BELOW_THRESHOLD
    if clamped:
        branch = Branch.CLAMPED
    product = p1 * p2
    return EffectiveLoss(
        per_hop_loss_nats=None,
        summed_loss_nats=-math.log(product),
        branch=branch,
        u=math.sqrt(product),
        epsilon=math.sqrt(p1 / p2),
        q_tilde=q,
    )


def _check_q_range(q: float, n: int, slack: float = 1e-9) -> float:
    """Validate q against [1/n, 1], absorbing float rounding at the endpoints."""
    lo = 1.0 / n
    if q < lo - slack * lo or q > 1.0 + slack:
        raise EstimatorError(f"q = {q} outside [1/{n}, 1]")
    return min(1.0, max(lo, q))


def oracle_invert_recurrent(q: float, n: int, tol: float = 1e-12) -> float:
    """Bisection solve of q = u^2 + (1-u)/n on [1/n, 1], independent of the closed form."""
    q = _check_q_range(q, n)

    def residual(u: float) -> float:
        return u * u + (1.0 - u) / n - q

    lo, hi = 1.0 / n, 1.0
    # residual is increasing in u on [1/n, 1]; bisect down to float resolution,
    # which leaves the residual far below tol even where the slope is flat
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    u = 0.5 * (lo + hi)
    if abs(residual(u)) > tol:
        raise EstimatorError(f"bisection failed to reach residual {tol} at q={q}")
    return u


def oracle_two_function_loss(q: float, n: int) -> tuple[float, float, float]:
    """Grid-plus-refinement search for the conservative hop split.

    Scans p1 over its feasible range (p2 = (q - (1-p1)/n)/p1 within
    [1/n, 1]) and refines around the feasible point of minimal joint
    probability, i.e. maximal summed loss. Returns (p1, p2, summed loss).
    """
    inv_n = 1.0 / n
    q = _check_q_range(q, n)
    feas_eps = 1e-9

    def p2_of(p1: float) -> float:
        return (q - (1.0 - p1) / n) / p1

    def summed_loss(p1: float) -> float | None:
        p2 = p2_of(p1)
        if p2 < inv_n - feas_eps or p2 > 1.0 + feas_eps:
            return None
        p2 = min(1.0, max(inv_n, p2))
        return -math.log(p1) - math.log(p2)

    lo, hi = inv_n, 1.0
    best_p1 = None
    grid = 64
    for _ in range(14):
        step = (hi - lo) / grid
        best_val = None
        best_idx = None
        for i in range(grid + 1):
            p1 = lo + i * step
            val = summed_loss(p1)
            if val is not None and (best_val is None or val > best_val):
                best_val, best_idx = val, i
        if best_idx is None:
            raise EstimatorError(f"no feasible hop split for q = {q}")
        best_p1 = lo + best_idx * step
        lo = max(inv_n, best_p1 - step)
        hi = min(1.0, best_p1 + step)
        if hi - lo < 1e-15:
            break
    p2 = min(1.0, max(inv_n, p2_of(best_p1)))
    return best_p1, p2, -math.log(best_p1) - math.log(p2)


@dataclass(frozen=True)
class FactCounts:
    """Dataset cardinalities used as loss multipliers, taken from the manifest."""

    n_profiles: int
    n_relations: int
    n_attributes: int

    @classmethod
    def from_config(cls, config: WorldConfig) -> "FactCounts":
        return cls(config.n_profiles, len(config.relations), len(config.attributes))


@dataclass(frozen=True)
class ContentEstimate:
    entropy_bits: float
    total_loss_bits: float
    content_bits: float
    task: Task
    model_kind: ModelKind | None
    fact_count: int
    branch: Branch | None = None

    def to_dict(self) -> dict:
        return {
            "entropy_bits": self.entropy_bits,
            "total_loss_bits": self.total_loss_bits,
            "content_bits": self.content_bits,
            "task": self.task.value,
            "model_kind": self.model_kind.value if self.model_kind else None,
            "fact_count": self.fact_count,
            "branch": self.branch.value if self.branch else None,
        }


def content_estimate(
    task: Task,
    model_kind: ModelKind | None,
    entropy: EntropyReport,
    aggregate: AggregateLoss,
    counts: FactCounts,
    variance_correction: str = "2f-only",
) -> ContentEstimate:
    """Lower-bound content: dataset entropy minus total (effective) loss in bits.

    variance_correction "2f-only" applies the (1 + Var/2) factor only in the
    two-function inversion; "both" applies it in both inversions.
    """
    if variance_correction not in ("2f-only", "both"):
        raise EstimatorError(f"unknown variance correction mode: {variance_correction}")
    if task is Task.ONE_HOP:
        if entropy.task is not Task.ONE_HOP:
            raise EstimatorError("one-hop estimate requires one-hop entropy")
        fact_count = counts.n_profiles * counts.n_attributes
        loss_bits = fact_count * aggregate.mean_loss_bits
        branch = None
        model_kind = None
    elif model_kind is ModelKind.INDEPENDENT:
        fact_count = counts.n_profiles * counts.n_relations * counts.n_attributes
        loss_bits = fact_count * aggregate.mean_loss_bits
        branch = None
    elif model_kind is ModelKind.RECURRENT:
        eff = effective_loss_recurrent(
            aggregate.mean_loss_nats,
            aggregate.var_loss_nats,
            counts.n_profiles,
            variance_correction=(variance_correction == "both"),
        )
        fact_count = counts.n_profiles * counts.n_attributes
        loss_bits = fact_count * eff.per_hop_loss_nats / LN2
        branch = eff.branch
    elif model_kind is ModelKind.TWO_FUNCTION:
        eff = effective_loss_two_function(
            aggregate.mean_loss_nats,
            aggregate.var_loss_nats,
            counts.n_profiles,
            variance_correction=True,
        )
        fact_count = counts.n_profiles * counts.n_attributes
        loss_bits = fact_count * eff.summed_loss_nats / LN2
        branch = eff.branch
    else:
        raise EstimatorError("two-hop estimate requires a model kind")
    if task is Task.TWO_HOP and entropy.model_kind is not model_kind:
        raise EstimatorError("entropy report does not match the requested model kind")
    return ContentEstimate(
        entropy_bits=entropy.total_bits,
        total_loss_bits=loss_bits,
        content_bits=entropy.total_bits - loss_bits,
        task=task,
        model_kind=model_kind,
        fact_count=fact_count,
        branch=branch,
    )


def bits_per_parameter(content_bits: float, param_count: int) -> float:
    """Information content per parameter; the reference capacity line is 2."""
    if param_count <= 0:
        raise EstimatorError("parameter count must be positive")
    return content_bits / param_count
