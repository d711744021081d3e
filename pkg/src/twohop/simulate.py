"""Exact simulators of the three two-hop computational models.

Each simulator assigns a known reliability (probability of correct
retrieval) to every storable fact and produces a deterministic loss log
whose ground-truth information content is computable exactly. This is the
validation bench for the loss-based estimators and for the generalization
signature classifier.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .entropy import ModelKind, Task, dataset_entropy
from .logs import LossRecord
from .worldgen import QuestionKind, SplitSet, World, WorldConfig


class CoverageError(KeyError):
    """A reliability profile is missing an entry the simulation needs."""


FactKey = tuple[int, str]
MemoKey = tuple[int, str, str]


@dataclass
class ReliabilityProfile:
    """Per-fact retrieval probabilities for one computational model.

    Recurrent uses a single fact map applied to both hops; two-function
    keeps separate first-hop and second-hop maps (each spanning all
    attributes, since each fact is stored once per pass); independent keeps
    one memo per complete two-hop question. When ``unlearned_uniform`` is
    set, a missing entry means the model answers uniformly at random, which
    is how holdout generalization rules emerge from trained profiles.
    """

    model_kind: ModelKind
    facts: dict[FactKey, float] | None = None
    hop1: dict[FactKey, float] | None = None
    hop2: dict[FactKey, float] | None = None
    memo: dict[MemoKey, float] | None = None
    unlearned_uniform: bool = False

    @classmethod
    def homogeneous(
        cls, config: WorldConfig, model_kind: ModelKind, reliability: float | None
    ) -> "ReliabilityProfile":
        """Uniform reliability for every fact, floored at each fact's chance rate.

        ``reliability=None`` means chance everywhere.
        """

        def level(pool: int) -> float:
            chance = 1.0 / pool
            if reliability is None:
                return chance
            if reliability > 1.0:
                raise ValueError("reliability must be <= 1")
            return max(chance, reliability)

        return cls._from_level_fn(config, model_kind, lambda e, a, pool: level(pool))

    @classmethod
    def two_point(
        cls,
        config: WorldConfig,
        model_kind: ModelKind,
        p_low: float,
        p_high: float,
        frac_high: float,
        seed: int,
    ) -> "ReliabilityProfile":
        """Seeded mixture: each fact gets p_high with probability frac_high."""
        rng = random.Random(seed)

        def level(e, a, pool):
            p = p_high if rng.random() < frac_high else p_low
            return min(1.0, max(1.0 / pool, p))

        return cls._from_level_fn(config, model_kind, level)

    @classmethod
    def _from_level_fn(cls, config: WorldConfig, model_kind: ModelKind, level) -> "ReliabilityProfile":
        n = config.n_profiles
        attrs = config.attributes
        if model_kind is ModelKind.RECURRENT:
            facts = {
                (e, a): level(e, a, config.pool_size(a)) for e in range(n) for a in attrs
            }
            return cls(model_kind, facts=facts)
        if model_kind is ModelKind.TWO_FUNCTION:
            hop1 = {(e, a): level(e, a, config.pool_size(a)) for e in range(n) for a in attrs}
            hop2 = {(e, a): level(e, a, config.pool_size(a)) for e in range(n) for a in attrs}
            return cls(model_kind, hop1=hop1, hop2=hop2)
        memo = {
            (e, r, a): level(e, a, config.pool_size(a))
            for e in range(n)
            for r in config.relations
            for a in attrs
        }
        return cls(model_kind, memo=memo)

    @classmethod
    def trained(
        cls,
        world: World,
        split_set: SplitSet,
        model_kind: ModelKind,
        learned: float = 1.0,
    ) -> "ReliabilityProfile":
        """Mark as learned exactly the facts occurring in the train split.

        Recurrent learns from one-hop facts (always all present); two-function
        learns first-hop pairs and second-hop pairs only from their in-role
        occurrences in train two-hop questions; independent memorizes the
        train two-hop questions. Everything else answers uniformly.
        """
        cfg = world.config
        if model_kind is ModelKind.RECURRENT:
            facts = {
                (item.query.e1, item.query.a): learned
                for item in split_set.train
                if item.query.kind is QuestionKind.ONE_HOP
            }
            return cls(model_kind, facts=facts, unlearned_uniform=True)
        if model_kind is ModelKind.TWO_FUNCTION:
            hop1: dict[FactKey, float] = {}
            hop2: dict[FactKey, float] = {}
            for item in split_set.train:
                if item.query.kind is QuestionKind.ONE_HOP:
                    continue
                hop1[(item.query.e1, item.query.r)] = learned
                hop2[(item.e2, item.query.a)] = learned
            return cls(model_kind, hop1=hop1, hop2=hop2, unlearned_uniform=True)
        memo = {
            (item.query.e1, item.query.r, item.query.a): learned
            for item in split_set.train
            if item.query.kind is not QuestionKind.ONE_HOP
        }
        return cls(model_kind, memo=memo, unlearned_uniform=True)


def _chance(config: WorldConfig, attribute: str) -> float:
    return 1.0 / config.pool_size(attribute)


def _lookup(table: dict | None, key, profile: ReliabilityProfile) -> float | None:
    """Fetch a reliability; None signals an unlearned fact under uniform fallback."""
    if table is None:
        raise CoverageError(f"profile has no table for {key}")
    p = table.get(key)
    if p is None and not profile.unlearned_uniform:
        raise CoverageError(f"missing reliability entry for {key}")
    return p


def simulate_one_hop_prob(world: World, profile: ReliabilityProfile, e1: int, a: str) -> float:
    """Probability of the correct one-hop answer under the profile's model."""
    cfg = world.config
    if profile.model_kind is ModelKind.INDEPENDENT:
        # the memo model stores two-hop answers only
        return _chance(cfg, a)
    table = profile.facts if profile.model_kind is ModelKind.RECURRENT else profile.hop2
    p = _lookup(table, (e1, a), profile)
    return _chance(cfg, a) if p is None else p


def simulate_two_hop_prob(
    world: World,
    profile: ReliabilityProfile,
    e1: int,
    r: str,
    a: str,
    strict_property_fallback: bool = False,
) -> float:
    """Probability of the correct two-hop answer.

    For composing models, a first-hop miss falls back to a uniform guess
    over |N| entities; strict mode uses the final attribute's pool instead.
    """
    cfg = world.config
    if not cfg.is_relation(r):
        raise ValueError(f"first hop must be a relation, got {r!r}")
    if profile.model_kind is ModelKind.INDEPENDENT:
        p = _lookup(profile.memo, (e1, r, a), profile)
        return _chance(cfg, a) if p is None else p
    e2 = world.relation_target(e1, r)
    if profile.model_kind is ModelKind.RECURRENT:
        p1 = _lookup(profile.facts, (e1, r), profile)
        p2 = _lookup(profile.facts, (e2, a), profile)
    else:
        p1 = _lookup(profile.hop1, (e1, r), profile)
        p2 = _lookup(profile.hop2, (e2, a), profile)
    if p1 is None or p2 is None:
        return _chance(cfg, a)
    fallback_pool = cfg.pool_size(a) if strict_property_fallback else cfg.n_profiles
    return p1 * p2 + (1.0 - p1) / fallback_pool


def generate_loss_log(
    world: World,
    profile: ReliabilityProfile,
    split_set: SplitSet,
    strict_property_fallback: bool = False,
) -> list[LossRecord]:
    """One record per QA item with logprob = ln q of the simulated answer."""
    records = []
    for item in split_set.all_items():
        q = item.query
        if q.kind is QuestionKind.ONE_HOP:
            prob = simulate_one_hop_prob(world, profile, q.e1, q.a)
        else:
            prob = simulate_two_hop_prob(
                world, profile, q.e1, q.r, q.a, strict_property_fallback
            )
        records.append(LossRecord(item.qid, item.split, q.kind.value, math.log(prob)))
    return records


def ground_truth_content(world: World, profile: ReliabilityProfile) -> float:
    """Exact content in bits: model-kind entropy minus the per-fact loss sum."""
    cfg = world.config
    n = cfg.n_profiles
    attrs = cfg.attributes

    def fact_loss(table: dict | None, key, pool: int) -> float:
        p = None if table is None else table.get(key)
        if p is None:
            if not profile.unlearned_uniform:
                raise CoverageError(f"missing reliability entry for {key}")
            p = 1.0 / pool
        return -math.log2(p)

    if profile.model_kind is ModelKind.RECURRENT:
        entropy = dataset_entropy(cfg, Task.TWO_HOP, ModelKind.RECURRENT)
        loss = sum(
            fact_loss(profile.facts, (e, a), cfg.pool_size(a))
            for e in range(n)
            for a in attrs
        )
    elif profile.model_kind is ModelKind.TWO_FUNCTION:
        entropy = dataset_entropy(cfg, Task.TWO_HOP, ModelKind.TWO_FUNCTION)
        loss = sum(
            fact_loss(table, (e, a), cfg.pool_size(a))
            for table in (profile.hop1, profile.hop2)
            for e in range(n)
            for a in attrs
        )
    else:
        entropy = dataset_entropy(cfg, Task.TWO_HOP, ModelKind.INDEPENDENT)
        loss = sum(
            fact_loss(profile.memo, (e, r, a), cfg.pool_size(a))
            for e in range(n)
            for r in cfg.relations
            for a in attrs
        )
    return entropy.total_bits - loss


def allocate_budget(
    model_kind: ModelKind, budget_bits: float, config: WorldConfig
) -> ReliabilityProfile:
    """Spread an information budget uniformly over the model's storable units.

    Each unit of answer entropy b = log2 |V| keeps a residual loss of
    max(0, b - budget/units); its reliability is 2^(-loss). This yields the
    predicted loss of a capacity-limited model for curve overlays.
    """
    if budget_bits < 0:
        raise ValueError("budget must be >= 0")
    n = config.n_profiles
    n_attrs = len(config.attributes)
    if model_kind is ModelKind.RECURRENT:
        units = n * n_attrs
    elif model_kind is ModelKind.TWO_FUNCTION:
        units = 2 * n * n_attrs
    else:
        units = n * len(config.relations) * n_attrs
    share = budget_bits / units

    def level(e, a, pool):
        b = math.log2(pool)
        return 2.0 ** -max(0.0, b - share)

    return ReliabilityProfile._from_level_fn(config, model_kind, level)


def loss_impact_ratio(mix_ratio: float, n_relations: int) -> float:
    """Per-question gradient weight of a two-hop answer relative to a one-hop one.

    Under a training mix of ``mix_ratio`` two-hop questions per one-hop
    question, an individual two-hop question recurs mix_ratio / |R| times as
    often as an individual one-hop question.
    """
    if n_relations < 1:
        raise ValueError("n_relations must be >= 1")
    if mix_ratio < 0:
        raise ValueError("mix_ratio must be >= 0")
    return mix_ratio / n_relations
