"""Synthetic profile worlds and one-/two-hop QA dataset construction.

Profiles are generated deterministically from a seed: unique name triples
drawn without replacement, relation targets drawn uniformly over entities,
property values uniformly over their pools. Questions are rendered from
fixed templates and partitioned into a train stream (one-hop facts mixed
with two-hop questions at a configurable cadence) plus seven systematic
holdout sets.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

HOLDOUT_KINDS = (
    "heldout_e1",
    "heldout_r",
    "heldout_e2",
    "heldout_a",
    "heldout_e1r",
    "heldout_e2a",
    "heldout_full",
)

DEFAULT_RELATIONS = (
    "mother",
    "father",
    "sibling",
    "child",
    "spouse",
    "best friend",
    "boss",
    "assistant",
    "mentor",
    "protege",
    "neighbor",
    "landlord",
    "tenant",
    "doctor",
    "lawyer",
    "accountant",
    "rival",
)

DEFAULT_PROPERTIES = (
    ("birth city", 1000),
    ("birth date", 36524),
    ("employer", 1000),
    ("university", 1000),
)

# 8000 * 5000 * 10000 = 4e11 possible name combinations
DEFAULT_NAME_POOLS = (8000, 5000, 10000)

DEFAULT_VOCAB_LIMIT = 3000

PAD_TOKEN = "<pad>"
EOA_TOKEN = "<eoa>"


class ConfigError(ValueError):
    """The world configuration is internally inconsistent."""


class DatasetIOError(RuntimeError):
    """A persisted dataset is missing, malformed, or corrupt."""


class HashMismatchError(DatasetIOError):
    """A dataset file does not match the hash recorded in its manifest."""


class VocabError(ValueError):
    """Text cannot be covered by the vocabulary, or the vocabulary is too large."""


class QuestionKind(str, Enum):
    ONE_HOP = "one_hop"
    TWO_HOP = "two_hop"
    TWO_HOP_COT = "two_hop_cot"


TWO_HOP_KINDS = (QuestionKind.TWO_HOP, QuestionKind.TWO_HOP_COT)


@dataclass(frozen=True)
class WorldConfig:
    """Parameters of a generated world: entity count, name pools, attributes."""

    n_profiles: int
    first_names: int = DEFAULT_NAME_POOLS[0]
    middle_names: int = DEFAULT_NAME_POOLS[1]
    last_names: int = DEFAULT_NAME_POOLS[2]
    relations: tuple[str, ...] = DEFAULT_RELATIONS
    properties: tuple[tuple[str, int], ...] = DEFAULT_PROPERTIES
    seed: int = 0

    @property
    def name_space_size(self) -> int:
        return self.first_names * self.middle_names * self.last_names

    @property
    def property_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.properties)

    @property
    def attributes(self) -> tuple[str, ...]:
        """All attributes: relations first, then properties."""
        return tuple(self.relations) + self.property_names

    def is_relation(self, attribute: str) -> bool:
        return attribute in self.relations

    def pool_size(self, attribute: str) -> int:
        """Answer-pool size of an attribute: |N| for relations, |V_a| for properties."""
        if attribute in self.relations:
            return self.n_profiles
        for name, size in self.properties:
            if name == attribute:
                return size
        raise ConfigError(f"unknown attribute: {attribute!r}")

    def validate(self) -> None:
        if self.n_profiles < 1:
            raise ConfigError("n_profiles must be positive")
        if min(self.first_names, self.middle_names, self.last_names) < 1:
            raise ConfigError("name pools must be positive")
        if self.name_space_size < self.n_profiles:
            raise ConfigError(
                f"name space {self.name_space_size} smaller than "
                f"{self.n_profiles} profiles; cannot sample without replacement"
            )
        names = list(self.relations) + list(self.property_names)
        if len(set(names)) != len(names):
            raise ConfigError("relation and property names must be unique and disjoint")
        for name, size in self.properties:
            if size < 1:
                raise ConfigError(f"value pool for {name!r} must be >= 1")
        for name in names:
            if ":" in name:
                raise ConfigError(f"attribute name {name!r} may not contain ':'")

    def to_dict(self) -> dict:
        return {
            "n_profiles": self.n_profiles,
            "first_names": self.first_names,
            "middle_names": self.middle_names,
            "last_names": self.last_names,
            "relations": list(self.relations),
            "properties": [[name, size] for name, size in self.properties],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorldConfig":
        return cls(
            n_profiles=data["n_profiles"],
            first_names=data["first_names"],
            middle_names=data["middle_names"],
            last_names=data["last_names"],
            relations=tuple(data["relations"]),
            properties=tuple((name, size) for name, size in data["properties"]),
            seed=data["seed"],
        )


@dataclass(frozen=True)
class Profile:
    id: int
    first: int
    middle: int
    last: int
    relation_values: dict[str, int]
    property_values: dict[str, int]


@dataclass
class World:
    """Ground-truth universe: profiles plus the (entity, relation) -> entity map."""

    config: WorldConfig
    profiles: list[Profile]

    def profile(self, pid: int) -> Profile:
        return self.profiles[pid]

    def entity_name(self, pid: int) -> str:
        p = self.profiles[pid]
        return f"F{p.first} M{p.middle} L{p.last}"

    def relation_target(self, e1: int, relation: str) -> int:
        try:
            return self.profiles[e1].relation_values[relation]
        except KeyError:
            raise ConfigError(f"unknown relation: {relation!r}") from None

    def value_string(self, prop: str, value: int) -> str:
        slug = prop.replace(" ", "_")
        return f"{slug}_{value}"

    def answer_string(self, entity: int, attribute: str) -> str:
        """Rendered answer for the one-hop fact (entity, attribute)."""
        if self.config.is_relation(attribute):
            return self.entity_name(self.relation_target(entity, attribute))
        return self.value_string(attribute, self.profiles[entity].property_values[attribute])


@dataclass(frozen=True)
class Query:
    e1: int
    r: str | None
    a: str
    kind: QuestionKind

    def __post_init__(self):
        if self.kind is QuestionKind.ONE_HOP:
            if self.r is not None:
                raise ValueError("one-hop queries have no first relation")
        elif self.r is None:
            raise ValueError("two-hop queries require a first relation")


@dataclass(frozen=True)
class QAItem:
    qid: str
    query: Query
    e2: int | None
    answer: str
    text: str
    split: str


@dataclass
class SplitSet:
    """Train stream plus the seven holdout sets and the components that define them."""

    train: list[QAItem]
    heldout: dict[str, list[QAItem]]
    holdout_manifest: dict[str, list]
    params: dict = field(default_factory=dict)

    def all_items(self) -> Iterable[QAItem]:
        yield from self.train
        for kind in HOLDOUT_KINDS:
            yield from self.heldout.get(kind, [])


def generate_world(config: WorldConfig) -> World:
    """Deterministically generate a world from its config and seed."""
    config.validate()
    rng = random.Random(config.seed)
    triples = rng.sample(range(config.name_space_size), config.n_profiles)
    ml = config.middle_names * config.last_names
    profiles = []
    for pid, t in enumerate(triples):
        first, rem = divmod(t, ml)
        middle, last = divmod(rem, config.last_names)
        relation_values = {r: rng.randrange(config.n_profiles) for r in config.relations}
        property_values = {name: rng.randrange(size) for name, size in config.properties}
        profiles.append(Profile(pid, first, middle, last, relation_values, property_values))
    return World(config, profiles)


def one_hop_qid(e1: int, a: str) -> str:
    return f"1h:{e1}:{a}"


def two_hop_qid(e1: int, r: str, a: str) -> str:
    return f"2h:{e1}:{r}:{a}"


def render_question(world: World, query: Query) -> QAItem:
    """Render a question from its template; the answer is taken from the world."""
    cfg = world.config
    if query.a not in cfg.attributes:
        raise ValueError(f"unknown attribute: {query.a!r}")
    if not 0 <= query.e1 < cfg.n_profiles:
        raise ValueError(f"unknown entity: {query.e1}")
    name = world.entity_name(query.e1)

    if query.kind is QuestionKind.ONE_HOP:
        answer = world.answer_string(query.e1, query.a)
        text = f"What was {name}'s {query.a}? {answer}"
        return QAItem(one_hop_qid(query.e1, query.a), query, None, answer, text, "train")

    if not cfg.is_relation(query.r):
        raise ValueError(f"first hop must be a relation, got {query.r!r}")
    e2 = world.relation_target(query.e1, query.r)
    answer = world.answer_string(e2, query.a)
    qid = two_hop_qid(query.e1, query.r, query.a)
    if query.kind is QuestionKind.TWO_HOP:
        text = f"What was {name}'s {query.r}'s {query.a}? {answer}"
    else:
        e2_name = world.entity_name(e2)
        text = (
            f"What was {name}'s {query.r}'s {query.a}? "
            f"{name}'s {query.r} was {e2_name}. {e2_name}'s {query.a} was {answer}."
        )
    return QAItem(qid, query, e2, answer, text, "train")


def _sample_components(world: World, fractions: Mapping[str, float], rng: random.Random) -> dict:
    cfg = world.config
    n = cfg.n_profiles
    populations = {
        "heldout_e1": list(range(n)),
        "heldout_r": list(cfg.relations),
        "heldout_e2": list(range(n)),
        "heldout_a": list(cfg.attributes),
        "heldout_e1r": [(e, r) for e in range(n) for r in cfg.relations],
        "heldout_e2a": [(e, a) for e in range(n) for a in cfg.attributes],
        "heldout_full": [
            (e, r, a) for e in range(n) for r in cfg.relations for a in cfg.attributes
        ],
    }
    components: dict[str, set] = {}
    for kind in HOLDOUT_KINDS:
        frac = fractions.get(kind, 0.0)
        if not 0.0 <= frac < 1.0:
            raise ConfigError(f"holdout fraction for {kind} must be in [0, 1)")
        pop = populations[kind]
        k = math.ceil(frac * len(pop)) if frac > 0 else 0
        if k >= len(pop):
            raise ConfigError(f"holdout fraction for {kind} would exhaust its population")
        components[kind] = set(rng.sample(pop, k))
    return components


def build_splits(
    world: World,
    holdout_fractions: Mapping[str, float],
    mix_ratio: int,
    seed: int,
    cot: bool = False,
) -> SplitSet:
    """Assign every two-hop question to train or its first matching holdout set.

    The train stream interleaves one one-hop item after every ``mix_ratio``
    two-hop items (mix_ratio 0 keeps one-hop items only). Every (entity,
    attribute) fact appears exactly once as a one-hop item.
    """
    cfg = world.config
    if mix_ratio < 0:
        raise ConfigError("mix_ratio must be >= 0")
    unknown = set(holdout_fractions) - set(HOLDOUT_KINDS)
    if unknown:
        raise ConfigError(f"unknown holdout kinds: {sorted(unknown)}")
    rng = random.Random(seed)
    components = _sample_components(world, holdout_fractions, rng)

    two_hop_kind = QuestionKind.TWO_HOP_COT if cot else QuestionKind.TWO_HOP
    heldout: dict[str, list[QAItem]] = {kind: [] for kind in HOLDOUT_KINDS}
    train_two_hop: list[QAItem] = []
    for e1 in range(cfg.n_profiles):
        for r in cfg.relations:
            e2 = world.relation_target(e1, r)
            for a in cfg.attributes:
                item = render_question(world, Query(e1, r, a, two_hop_kind))
                if e1 in components["heldout_e1"]:
                    dest = "heldout_e1"
                elif r in components["heldout_r"]:
                    dest = "heldout_r"
                elif e2 in components["heldout_e2"]:
                    dest = "heldout_e2"
                elif a in components["heldout_a"]:
                    dest = "heldout_a"
                elif (e1, r) in components["heldout_e1r"]:
                    dest = "heldout_e1r"
                elif (e2, a) in components["heldout_e2a"]:
                    dest = "heldout_e2a"
                elif (e1, r, a) in components["heldout_full"]:
                    dest = "heldout_full"
                else:
                    train_two_hop.append(item)
                    continue
                heldout[dest].append(replace(item, split=dest))

    one_hop = [
        render_question(world, Query(e1, None, a, QuestionKind.ONE_HOP))
        for e1 in range(cfg.n_profiles)
        for a in cfg.attributes
    ]

    if mix_ratio == 0:
        train = one_hop
    else:
        rng.shuffle(train_two_hop)
        rng.shuffle(one_hop)
        train = []
        taken = 0
        for i, item in enumerate(train_two_hop):
            train.append(item)
            if (i + 1) % mix_ratio == 0 and taken < len(one_hop):
                train.append(one_hop[taken])
                taken += 1
        train.extend(one_hop[taken:])

    manifest = {
        kind: sorted(list(c) if isinstance(c, tuple) else [c] for c in components[kind])
        for kind in HOLDOUT_KINDS
    }
    params = {
        "seed": seed,
        "mix_ratio": mix_ratio,
        "holdout_fractions": {k: holdout_fractions.get(k, 0.0) for k in HOLDOUT_KINDS},
        "cot": cot,
    }
    return SplitSet(train, heldout, manifest, params)


# --- persistence ---------------------------------------------------------


def sha256_file(path: Path, chunk_size: int = 1 << 20) -> str:
    hasher = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def _profile_to_json(p: Profile) -> dict:
    return {
        "id": p.id,
        "first": p.first,
        "middle": p.middle,
        "last": p.last,
        "relations": p.relation_values,
        "properties": p.property_values,
    }


def _item_to_json(item: QAItem) -> dict:
    return {
        "qid": item.qid,
        "kind": item.query.kind.value,
        "e1": item.query.e1,
        "r": item.query.r,
        "a": item.query.a,
        "e2": item.e2,
        "answer": item.answer,
        "text": item.text,
        "split": item.split,
    }


def _item_from_json(data: Mapping) -> QAItem:
    query = Query(data["e1"], data["r"], data["a"], QuestionKind(data["kind"]))
    return QAItem(data["qid"], query, data["e2"], data["answer"], data["text"], data["split"])


def persist_dataset(split_set: SplitSet, world: World, path: Path) -> dict:
    """Write profiles.jsonl, qa.jsonl, and manifest.json; return the manifest."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    profiles_path = path / "profiles.jsonl"
    with open(profiles_path, "w", encoding="utf-8") as f:
        for p in world.profiles:
            f.write(json.dumps(_profile_to_json(p), sort_keys=True) + "\n")

    qa_path = path / "qa.jsonl"
    with open(qa_path, "w", encoding="utf-8") as f:
        for item in split_set.all_items():
            f.write(json.dumps(_item_to_json(item), sort_keys=True) + "\n")

    counts = {"train": len(split_set.train)}
    for kind in HOLDOUT_KINDS:
        counts[kind] = len(split_set.heldout.get(kind, []))

    manifest = {
        "config": world.config.to_dict(),
        "seed": world.config.seed,
        "split_params": split_set.params,
        "counts": counts,
        "holdout_components": split_set.holdout_manifest,
        "files": {
            "profiles.jsonl": sha256_file(profiles_path),
            "qa.jsonl": sha256_file(qa_path),
        },
    }
    digest = hashlib.sha256(
        json.dumps(manifest["files"], sort_keys=True).encode()
    ).hexdigest()
    manifest["dataset_sha256"] = digest
    with open(path / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def load_manifest(path: Path) -> dict:
    try:
        with open(Path(path) / "manifest.json", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetIOError(f"cannot read manifest: {exc}") from exc


def load_dataset(path: Path) -> tuple[SplitSet, World]:
    """Load a persisted dataset, verifying file hashes against the manifest."""
    path = Path(path)
    manifest = load_manifest(path)
    for name, expected in manifest["files"].items():
        actual = sha256_file(path / name)
        if actual != expected:
            raise HashMismatchError(f"{name}: expected {expected}, got {actual}")

    config = WorldConfig.from_dict(manifest["config"])
    profiles = []
    with open(path / "profiles.jsonl", encoding="utf-8") as f:
        for line in f:
            d = json.loads(line)
            profiles.append(
                Profile(d["id"], d["first"], d["middle"], d["last"], d["relations"], d["properties"])
            )
    world = World(config, profiles)

    train: list[QAItem] = []
    heldout: dict[str, list[QAItem]] = {kind: [] for kind in HOLDOUT_KINDS}
    with open(path / "qa.jsonl", encoding="utf-8") as f:
        for line in f:
            item = _item_from_json(json.loads(line))
            if item.split == "train":
                train.append(item)
            else:
                heldout[item.split].append(item)
    split_set = SplitSet(train, heldout, manifest["holdout_components"], manifest["split_params"])
    return split_set, world


# --- tokenizer -----------------------------------------------------------

_TOKEN_RE = re.compile(r"'s|\w+|\?|\.")
_NO_SPACE = {"'s", "?", "."}


def _split_tokens(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text)
    if _join_tokens(tokens) != text:
        raise VocabError(f"text contains symbols outside the token alphabet: {text!r}")
    return tokens


def _join_tokens(tokens: Sequence[str]) -> str:
    parts: list[str] = []
    for tok in tokens:
        if parts and tok not in _NO_SPACE:
            parts.append(" ")
        parts.append(tok)
    return "".join(parts)


@dataclass
class Vocab:
    """Whole-word vocabulary with reserved padding and end-of-answer ids."""

    token_to_id: dict[str, int]
    id_to_token: list[str]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def end_of_answer_id(self) -> int:
        return 1


def build_vocab(items: Iterable[QAItem], max_size: int = DEFAULT_VOCAB_LIMIT) -> Vocab:
    """Collect all tokens appearing in the rendered items into a vocabulary."""
    tokens: set[str] = set()
    for item in items:
        tokens.update(_split_tokens(item.text))
    id_to_token = [PAD_TOKEN, EOA_TOKEN] + sorted(tokens)
    if len(id_to_token) > max_size:
        raise VocabError(f"corpus needs {len(id_to_token)} tokens, limit is {max_size}")
    return Vocab({tok: i for i, tok in enumerate(id_to_token)}, id_to_token)


def tokenize(vocab: Vocab, text: str) -> list[int]:
    ids = []
    for tok in _split_tokens(text):
        if tok not in vocab.token_to_id:
            raise VocabError(f"token not in vocabulary: {tok!r}")
        ids.append(vocab.token_to_id[tok])
    return ids


def detokenize(vocab: Vocab, ids: Sequence[int]) -> str:
    return _join_tokens([vocab.id_to_token[i] for i in ids])
