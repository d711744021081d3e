import dataclasses
import json
import math

import pytest

from twohop import (
    Query,
    WorldConfig,
    build_splits,
    build_vocab,
    detokenize,
    generate_world,
    load_dataset,
    persist_dataset,
    render_question,
    tokenize,
)
from twohop.worldgen import (
    ConfigError,
    HashMismatchError,
    QuestionKind,
    VocabError,
    _item_to_json,
)


def _world_bytes(world):
    return json.dumps(
        [dataclasses.asdict(p) for p in world.profiles], sort_keys=True
    ).encode()


class TestWorldGeneration:
    def test_deterministic(self, micro_cfg, micro_world):
        again = generate_world(micro_cfg)
        assert _world_bytes(again) == _world_bytes(micro_world)

    def test_different_seed_differs(self, micro_cfg, micro_world):
        other = generate_world(dataclasses.replace(micro_cfg, seed=micro_cfg.seed + 1))
        assert _world_bytes(other) != _world_bytes(micro_world)

    def test_names_unique(self, micro_world):
        names = {(p.first, p.middle, p.last) for p in micro_world.profiles}
        assert len(names) == len(micro_world.profiles)

    def test_name_space_too_small(self):
        cfg = WorldConfig(n_profiles=100, first_names=4, middle_names=5, last_names=4)
        with pytest.raises(ConfigError):
            generate_world(cfg)

    def test_duplicate_attribute_names_rejected(self):
        cfg = WorldConfig(n_profiles=10, relations=("boss",), properties=(("boss", 5),))
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_pool_sizes(self, micro_cfg):
        assert micro_cfg.pool_size("mother") == micro_cfg.n_profiles
        assert micro_cfg.pool_size("birth city") == 10
        with pytest.raises(ConfigError):
            micro_cfg.pool_size("shoe size")

    def test_no_systematic_inverse_relations(self):
        # parent-of composed with child-of should invert only by chance (~1/|N|)
        cfg = WorldConfig(
            n_profiles=1000,
            relations=("parent", "child"),
            properties=(("birth city", 10),),
            seed=3,
        )
        w = generate_world(cfg)
        hits = sum(
            1
            for e in range(cfg.n_profiles)
            if w.relation_target(w.relation_target(e, "parent"), "child") == e
        )
        # Binomial(1000, 1/1000): mean 1, sd ~1; anything under 7 is unremarkable
        assert hits <= 7


class TestRendering:
    def test_one_hop_template(self, micro_world):
        item = render_question(micro_world, Query(0, None, "birth city", QuestionKind.ONE_HOP))
        name = micro_world.entity_name(0)
        assert item.text == f"What was {name}'s birth city? {item.answer}"
        assert item.qid == "1h:0:birth city"
        assert item.e2 is None

    def test_two_hop_template(self, micro_world):
        item = render_question(micro_world, Query(0, "mother", "birth city", QuestionKind.TWO_HOP))
        name = micro_world.entity_name(0)
        assert item.text == f"What was {name}'s mother's birth city? {item.answer}"
        assert item.e2 == micro_world.relation_target(0, "mother")
        assert item.answer == micro_world.answer_string(item.e2, "birth city")

    def test_cot_template(self, micro_world):
        item = render_question(
            micro_world, Query(0, "boss", "birth city", QuestionKind.TWO_HOP_COT)
        )
        name = micro_world.entity_name(0)
        e2_name = micro_world.entity_name(item.e2)
        assert item.text == (
            f"What was {name}'s boss's birth city? "
            f"{name}'s boss was {e2_name}. {e2_name}'s birth city was {item.answer}."
        )

    def test_cot_self_loop(self, micro_world):
        # an entity may be its own relation target; the trace then names it twice
        micro_world.profiles[5].relation_values["father"] = 5
        item = render_question(
            micro_world, Query(5, "father", "birth city", QuestionKind.TWO_HOP_COT)
        )
        name = micro_world.entity_name(5)
        assert f"{name}'s father was {name}." in item.text

    def test_relation_answer_is_a_name(self, micro_world):
        item = render_question(micro_world, Query(1, None, "mother", QuestionKind.ONE_HOP))
        target = micro_world.relation_target(1, "mother")
        assert item.answer == micro_world.entity_name(target)

    def test_bad_queries(self, micro_world):
        with pytest.raises(ValueError):
            render_question(micro_world, Query(0, None, "nope", QuestionKind.ONE_HOP))
        with pytest.raises(ValueError):
            render_question(micro_world, Query(10**6, None, "mother", QuestionKind.ONE_HOP))
        with pytest.raises(ValueError):
            Query(0, "mother", "birth city", QuestionKind.ONE_HOP)
        with pytest.raises(ValueError):
            Query(0, None, "birth city", QuestionKind.TWO_HOP)


class TestSplits:
    def test_one_hop_complete(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=1)
        cfg = micro_world.config
        one_hop = {
            (i.query.e1, i.query.a)
            for i in ss.train
            if i.query.kind is QuestionKind.ONE_HOP
        }
        assert len(one_hop) == cfg.n_profiles * len(cfg.attributes)

    def test_no_holdouts_means_all_two_hops_in_train(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=1)
        cfg = micro_world.config
        two_hop = [i for i in ss.train if i.query.kind is QuestionKind.TWO_HOP]
        assert len(two_hop) == cfg.n_profiles * len(cfg.relations) * len(cfg.attributes)
        assert all(not v for v in ss.heldout.values())

    def test_mix_ratio_zero_keeps_one_hop_only(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=0, seed=1)
        assert all(i.query.kind is QuestionKind.ONE_HOP for i in ss.train)

    def test_interleaving_cadence(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=1)
        kinds = [i.query.kind for i in ss.train]
        # the first 11 items follow the 10:1 cadence exactly
        assert kinds[:11] == [QuestionKind.TWO_HOP] * 10 + [QuestionKind.ONE_HOP]

    def test_heldout_relation_removes_it_from_train_two_hops(self, micro_world):
        ss = build_splits(micro_world, {"heldout_r": 0.34}, mix_ratio=10, seed=2)
        held = {r for (r,) in map(tuple, ss.holdout_manifest["heldout_r"])}
        assert len(held) == math.ceil(0.34 * 3)
        for item in ss.train:
            if item.query.kind is QuestionKind.TWO_HOP:
                assert item.query.r not in held
        # the underlying facts stay present as one-hop questions
        one_hop_attrs = {
            i.query.a for i in ss.train if i.query.kind is QuestionKind.ONE_HOP
        }
        assert held <= one_hop_attrs

    def test_holdout_priority_order(self, micro_world):
        # an item matching several holdout components lands in the first one
        ss = build_splits(
            micro_world,
            {"heldout_e1": 0.05, "heldout_full": 0.05},
            mix_ratio=10,
            seed=2,
        )
        held_e1 = {e for (e,) in map(tuple, ss.holdout_manifest["heldout_e1"])}
        for item in ss.heldout["heldout_full"]:
            assert item.query.e1 not in held_e1

    def test_two_hop_answer_consistency(self, micro_world):
        ss = build_splits(micro_world, {"heldout_full": 0.01}, mix_ratio=10, seed=2)
        for item in list(ss.all_items())[:500]:
            if item.query.kind is QuestionKind.ONE_HOP:
                continue
            e2 = micro_world.relation_target(item.query.e1, item.query.r)
            assert item.e2 == e2
            assert item.answer == micro_world.answer_string(e2, item.query.a)

    def test_exhausting_fraction_rejected(self, micro_world):
        with pytest.raises(ConfigError):
            build_splits(micro_world, {"heldout_r": 0.99}, mix_ratio=10, seed=2)
        with pytest.raises(ConfigError):
            build_splits(micro_world, {"nope": 0.1}, mix_ratio=10, seed=2)
        with pytest.raises(ConfigError):
            build_splits(micro_world, {}, mix_ratio=-1, seed=2)

    def test_cot_flag(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=1, cot=True)
        kinds = {i.query.kind for i in ss.train}
        assert kinds == {QuestionKind.ONE_HOP, QuestionKind.TWO_HOP_COT}


class TestPersistence:
    def test_round_trip(self, micro_world, tmp_path):
        ss = build_splits(micro_world, {"heldout_full": 0.02}, mix_ratio=10, seed=4)
        manifest = persist_dataset(ss, micro_world, tmp_path)
        loaded_ss, loaded_world = load_dataset(tmp_path)
        assert _world_bytes(loaded_world) == _world_bytes(micro_world)
        assert [_item_to_json(i) for i in loaded_ss.all_items()] == [
            _item_to_json(i) for i in ss.all_items()
        ]
        assert manifest["counts"]["train"] == len(ss.train)
        assert loaded_ss.params["mix_ratio"] == 10

    def test_tamper_detection(self, micro_world, tmp_path):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=4)
        persist_dataset(ss, micro_world, tmp_path)
        qa = tmp_path / "qa.jsonl"
        qa.write_text(qa.read_text().replace("birth_city", "birth_town"))
        with pytest.raises(HashMismatchError):
            load_dataset(tmp_path)


class TestVocab:
    def test_round_trip_over_corpus(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=10, seed=4, cot=True)
        vocab = build_vocab(ss.all_items())
        for item in list(ss.all_items())[:300]:
            assert detokenize(vocab, tokenize(vocab, item.text)) == item.text

    def test_reserved_ids(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=0, seed=4)
        vocab = build_vocab(ss.train)
        assert vocab.pad_id == 0 and vocab.end_of_answer_id == 1
        assert vocab.id_to_token[0] == "<pad>"
        assert vocab.size <= 3000

    def test_limit_enforced(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=0, seed=4)
        with pytest.raises(VocabError):
            build_vocab(ss.train, max_size=10)

    def test_unknown_token(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=0, seed=4)
        vocab = build_vocab(ss.train)
        with pytest.raises(VocabError):
            tokenize(vocab, "What was Zorblax's quest?")

    def test_possessive_and_punctuation_spacing(self, micro_world):
        ss = build_splits(micro_world, {}, mix_ratio=0, seed=4)
        vocab = build_vocab(ss.train)
        text = ss.train[0].text
        ids = tokenize(vocab, text)
        assert detokenize(vocab, ids) == text
        assert "'s" in {vocab.id_to_token[i] for i in ids}
