import numpy as np
import pytest

from venue2vec.corpus import (
    CheckinRecord,
    build_interactions,
    build_sentences,
    build_vocabulary,
    split_train_test,
)
from venue2vec.embedding import TrainingConfig, init_model, train
from venue2vec.fixtures import FEB_2011, FixtureSpec, generate_fixture


def make_records(visits: dict[str, list[str]], start: int = 1294000000):
    """Check-ins from a {user: [venues...]} table, hourly timestamps."""
    records = []
    t = start
    for user, venues in visits.items():
        for venue in venues:
            records.append(CheckinRecord(user, venue, t))
            t += 3600
    return records


TOY_VISITS = {
    # 3 users / 8 venues: Loc0 and Loc2 are always visited together, Loc7 is
    # visited only by u2, and u0 shares venues with u1 but not with u2.
    "u0": ["Loc1", "Loc0", "Loc2", "Loc1"],
    "u1": ["Loc0", "Loc4", "Loc2", "Loc3", "Loc5", "Loc6"],
    "u2": ["Loc7", "Loc3", "Loc5", "Loc7"],
}


@pytest.fixture(scope="session")
def toy_records():
    return make_records(TOY_VISITS)


@pytest.fixture(scope="session")
def toy_model(toy_records):
    vocab = build_vocabulary(toy_records, 1)
    corpus = build_sentences(toy_records, vocab)
    config = TrainingConfig(
        architecture="skip-gram",
        feature_count=2,
        context_count=10,
        epoch_count=200,
        seed=1,
    )
    model, _ = train(init_model(vocab, config), corpus)
    return model


@pytest.fixture(scope="session")
def toy_interactions(toy_records):
    return build_interactions(toy_records)


COMMUNITY_SPEC = FixtureSpec(
    seed=7,
    communities=2,
    users_per_community=20,
    venues_per_community=30,
    train_checkins_per_user=15,
    test_checkins_per_user=5,
    noise_rate=0.0,
)


@pytest.fixture(scope="session")
def community_dataset():
    records, summary = generate_fixture(COMMUNITY_SPEC)
    dataset = split_train_test(records, FEB_2011)
    return dataset, summary


@pytest.fixture(scope="session")
def community_model(community_dataset):
    dataset, _ = community_dataset
    vocab = build_vocabulary(dataset.train, 1)
    corpus = build_sentences(dataset.train, vocab)
    config = TrainingConfig(
        architecture="skip-gram",
        feature_count=16,
        context_count=5,
        epoch_count=20,
        seed=3,
    )
    model, trace = train(init_model(vocab, config), corpus)
    return model, trace


@pytest.fixture(scope="session")
def community_interactions(community_dataset):
    dataset, _ = community_dataset
    return build_interactions(dataset.train)


def community_of(venue_or_user: str) -> str:
    """Fixture ids look like c<community>u<i> / c<community>v<j>."""
    return venue_or_user.split("u")[0].split("v")[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
