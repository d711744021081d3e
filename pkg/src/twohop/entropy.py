"""Closed-form dataset entropies and uniform-guessing baselines.

A dataset's entropy is the number of bits needed to encode it given the
generation scheme: selecting the names plus one pass over all attribute
values per entity. Two-hop datasets cost one pass under recurrent
composition, two passes under two-function composition, and |R| passes
under independent memorization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

from .worldgen import WorldConfig

LN2 = math.log(2.0)

# Above this occupancy of the name space, n*log2(n0) noticeably overstates
# the exact log2 C(n0, n) selection entropy.
NAME_APPROX_OCCUPANCY = 1e-3


class Task(str, Enum):
    ONE_HOP = "one-hop"
    TWO_HOP = "two-hop"


class ModelKind(str, Enum):
    RECURRENT = "recurrent"
    TWO_FUNCTION = "2f"
    INDEPENDENT = "independent"


class NameEntropyApproximationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EntropyReport:
    name_bits: float
    fact_bits_per_pass: float
    multiplier: int
    total_bits: float
    task: Task
    model_kind: ModelKind | None

    def to_dict(self) -> dict:
        return {
            "name_bits": self.name_bits,
            "fact_bits_per_pass": self.fact_bits_per_pass,
            "multiplier": self.multiplier,
            "total_bits": self.total_bits,
            "task": self.task.value,
            "model_kind": self.model_kind.value if self.model_kind else None,
        }


def name_selection_entropy(n: int, n0: int) -> float:
    """Bits to select n names without replacement from a pool of n0: n*log2(n0).

    This approximates log2 C(n0, n), which is tight for n << n0. When the
    occupancy n/n0 exceeds 1e-3 a warning reports the overstatement against
    the exact binomial value.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > n0:
        raise ValueError(f"cannot select {n} names from a pool of {n0}")
    bits = n * math.log2(n0)
    if n / n0 > NAME_APPROX_OCCUPANCY:
        exact = exact_name_selection_entropy(n, n0)
        warnings.warn(
            f"n*log2(n0) = {bits:.6f} bits overstates the exact selection "
            f"entropy {exact:.6f} by {bits - exact:.6f} bits (n/n0 = {n / n0:.3g})",
            NameEntropyApproximationWarning,
            stacklevel=2,
        )
    return bits


def exact_name_selection_entropy(n: int, n0: int) -> float:
    """Exact log2 C(n0, n) via log-gamma."""
    if not 1 <= n <= n0:
        raise ValueError("need 1 <= n <= n0")
    return (math.lgamma(n0 + 1) - math.lgamma(n + 1) - math.lgamma(n0 - n + 1)) / LN2


def attribute_entropy(value_pool_size: int) -> float:
    """Bits of a single attribute answer: log2 of its value-pool size."""
    if value_pool_size < 1:
        raise ValueError("value pool size must be >= 1")
    return math.log2(value_pool_size)


def _fact_bits_per_pass(config: WorldConfig) -> float:
    per_entity = sum(attribute_entropy(config.pool_size(a)) for a in config.attributes)
    return config.n_profiles * per_entity


def _multiplier(config: WorldConfig, task: Task, model_kind: ModelKind | None) -> int:
    if task is Task.ONE_HOP:
        return 1
    if model_kind is None:
        raise ValueError("two-hop entropy requires a model kind")
    if model_kind is ModelKind.RECURRENT:
        return 1
    if model_kind is ModelKind.TWO_FUNCTION:
        return 2
    return len(config.relations)


def dataset_entropy(
    config: WorldConfig, task: Task, model_kind: ModelKind | None = None
) -> EntropyReport:
    """Total dataset entropy: name selection plus the model's passes over facts."""
    if task is Task.ONE_HOP:
        model_kind = None
    name_bits = name_selection_entropy(config.n_profiles, config.name_space_size)
    fact_bits = _fact_bits_per_pass(config)
    multiplier = _multiplier(config, task, model_kind)
    return EntropyReport(
        name_bits=name_bits,
        fact_bits_per_pass=fact_bits,
        multiplier=multiplier,
        total_bits=name_bits + multiplier * fact_bits,
        task=task,
        model_kind=model_kind,
    )


def strict_two_function_total_bits(config: WorldConfig) -> float:
    """Two-function entropy counting only relations in the first pass.

    The as-written formula doubles the full attribute sum even though first
    hops can only be relations; this variant is reported for comparison.
    """
    name_bits = name_selection_entropy(config.n_profiles, config.name_space_size)
    relation_bits = config.n_profiles * sum(
        attribute_entropy(config.pool_size(r)) for r in config.relations
    )
    return name_bits + relation_bits + _fact_bits_per_pass(config)


def uniform_guess_loss_bits(
    config: WorldConfig, task: Task, model_kind: ModelKind | None = None
) -> float:
    """Total loss of guessing uniformly over each answer pool, in bits.

    Summed over the same fact passes the matching entropy counts: one pass
    of per-fact losses log2 |V_a|, times the model's multiplier.
    """
    per_pass = sum(
        attribute_entropy(config.pool_size(a))
        for _ in range(config.n_profiles)
        for a in config.attributes
    )
    if task is Task.ONE_HOP:
        model_kind = None
    return _multiplier(config, task, model_kind) * per_pass


def baseline_content(
    config: WorldConfig, task: Task, model_kind: ModelKind | None = None
) -> float:
    """Information content at uniform-guessing loss: entropy minus uniform loss.

    The fact terms cancel analytically, leaving the name-selection entropy;
    the value is still computed as the difference.
    """
    report = dataset_entropy(config, task, model_kind)
    return report.total_bits - uniform_guess_loss_bits(config, task, model_kind)
