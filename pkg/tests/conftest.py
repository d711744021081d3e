import pytest

from twohop import (
    HOLDOUT_KINDS,
    WorldConfig,
    build_splits,
    generate_world,
)

MICRO_RELATIONS = ("mother", "father", "boss")
DESK_RELATIONS = ("mother", "father", "boss", "mentor", "rival")


@pytest.fixture(scope="session")
def micro_cfg():
    # |N|=100, N0=1000, 3 relations, 1 property of pool 10
    return WorldConfig(
        n_profiles=100,
        first_names=10,
        middle_names=10,
        last_names=10,
        relations=MICRO_RELATIONS,
        properties=(("birth city", 10),),
        seed=7,
    )


@pytest.fixture(scope="session")
def micro_world(micro_cfg):
    return generate_world(micro_cfg)


@pytest.fixture(scope="session")
def desk_cfg():
    # property pools equal |N| keep chance-level losses uniform across attributes
    return WorldConfig(
        n_profiles=1000,
        relations=DESK_RELATIONS,
        properties=(("birth city", 1000), ("employer", 1000)),
        seed=11,
    )


@pytest.fixture(scope="session")
def desk_world(desk_cfg):
    return generate_world(desk_cfg)


@pytest.fixture(scope="session")
def desk_splits(desk_world):
    """Desk-scale splits with no holdouts: all two-hop questions in train."""
    return build_splits(desk_world, {}, mix_ratio=10, seed=5)


@pytest.fixture(scope="session")
def desk_holdout_splits(desk_world):
    """Desk-scale splits with every holdout kind at 1%."""
    fractions = {kind: 0.01 for kind in HOLDOUT_KINDS}
    return build_splits(desk_world, fractions, mix_ratio=10, seed=5)


@pytest.fixture(scope="session")
def trap_cfg():
    # 4 relations + 4 properties: the mix where two-hop memorization dominates
    return WorldConfig(
        n_profiles=1000,
        relations=("mother", "father", "boss", "mentor"),
        properties=(
            ("birth city", 1000),
            ("birth date", 1000),
            ("employer", 1000),
            ("university", 1000),
        ),
        seed=13,
    )
