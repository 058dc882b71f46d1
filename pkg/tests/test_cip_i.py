"""Item-pair scores from within-pack co-consumption."""

import numpy as np
import pytest

from ciprec.cip_i import CipIModel
from ciprec.ingest import ProfileStore

from helpers import random_stream, store_from


def _store_of_packs(packs, gap=10_000):
    """One user per pack, packs separated far beyond any delta."""
    store = ProfileStore(0, 0)
    t = 0
    for u, pack in enumerate(packs):
        for i in pack:
            t += 10
            store.add_event(u, int(i), t)
        t += gap
    return store


def test_single_pack_scores_frozen():
    # hand-derived for pack [a, b, c]: adjacent pairs score 1 + 1/1,
    # the distance-2 pair scores 1 + 1/2
    m = CipIModel.train(_store_of_packs([[0, 1, 2]]), 60, 5)
    assert m.score[0][1] == 2.0
    assert m.score[1][2] == 2.0
    assert m.score[0][2] == 1.5
    assert 1 not in m.score.get(2, {}) and 0 not in m.score.get(1, {})
    assert m.card == {0: 1, 1: 1, 2: 1}
    assert m.similarity(0, 1) == 1.0
    assert m.similarity(0, 2) == 0.75


def test_two_pack_similarity_frozen():
    # hand-derived: packs [a, b] and [a, c, b] give score(a,b) = 2 + 1.5,
    # both cards 2, so similarity 3.5 / 4
    m = CipIModel.train(_store_of_packs([[0, 1], [0, 2, 1]]), 60, 5)
    assert m.similarity(0, 1) == 0.875


def test_similarity_one_iff_always_immediately_after():
    one = CipIModel.train(_store_of_packs([[0, 1], [2, 0, 1], [0, 1, 3]]), 60, 5)
    assert one.similarity(0, 1) == 1.0
    # a pack where 0 appears without 1 right after breaks the ceiling
    broken = CipIModel.train(_store_of_packs([[0, 1], [0, 2]]), 60, 5)
    assert broken.similarity(0, 1) < 1.0
    # symmetric direction does not count: [1, 0] gives score to (1, 0) only
    rev = CipIModel.train(_store_of_packs([[1, 0]]), 60, 5)
    assert rev.similarity(0, 1) == 0.0 and rev.similarity(1, 0) == 1.0


def test_unrelated_items_score_zero():
    m = CipIModel.train(_store_of_packs([[0, 1], [2, 3]]), 60, 5)
    assert m.similarity(0, 2) == 0.0
    assert m.similarity(9, 17) == 0.0   # never-seen items


def test_repeated_item_in_one_pack_rejected():
    m = CipIModel(60, 5)
    with pytest.raises(ValueError):
        m.update_scores([4, 5, 4])


def test_streaming_equals_one_shot():
    rng = np.random.default_rng(17)
    for _ in range(300):
        events = random_stream(rng, 5, 12, int(rng.integers(5, 40)),
                               max_gap=120, unique_per_user=True)
        store = store_from(events)
        batch = CipIModel.train(store, 40, 5)
        stream = CipIModel(40, 5)
        for u, i, t in events:
            stream.apply_events({u: [(i, t)]})
        assert batch.card == stream.card
        keys = {(a, b) for a, r in batch.score.items() for b in r}
        keys |= {(a, b) for a, r in stream.score.items() for b in r}
        for a, b in keys:
            x = batch.score.get(a, {}).get(b, 0.0)
            y = stream.score.get(a, {}).get(b, 0.0)
            assert abs(x - y) < 1e-12
            s = batch.similarity(a, b)
            assert 0.0 <= s <= 1.0


def test_apply_events_spanning_the_gap_starts_a_new_pack():
    m = CipIModel(60, 5)
    m.apply_events({0: [(1, 100), (2, 150)]})
    m.apply_events({0: [(3, 5000)]})        # far beyond delta: new pack
    m.apply_events({0: [(4, 5010)]})        # extends the second pack
    want = CipIModel.train(m.profiles, 60, 5)
    assert m.score == want.score and m.card == want.card


def test_top_k_ordering_and_ties():
    # item 0 pairs equally with 1 and 2; ascending id breaks the tie
    m = CipIModel.train(_store_of_packs([[0, 1], [0, 2]]), 60, 5)
    top = m.top_k(0)
    assert [j for j, _ in top] == [1, 2]
    assert top[0][1] == top[1][1] == 0.5
    assert m.top_k(0, k=1) == [top[0]]
    assert m.top_k(42) == []


def test_recommend_tallies_neighbor_lists():
    # user 9's profile is [0]; 0's strongest successor is 1, then 2
    m = CipIModel.train(_store_of_packs([[0, 1], [0, 1, 2], [0, 2]]), 60, 5)
    m.profiles.add_event(9, 0, 10_000_000)
    recs = m.recommend(9, 3)
    assert recs[0] in (1, 2) and set(recs) == {1, 2}


def test_recommend_falls_back_to_popularity():
    m = CipIModel.train(_store_of_packs([[0, 1], [0, 2]]), 60, 5)
    pops = m.profiles.popular_ranking()
    assert m.recommend(999, 2) == pops[:2]   # unknown user


def test_constructor_validation_and_params():
    with pytest.raises(ValueError):
        CipIModel(-1, 5)
    with pytest.raises(ValueError):
        CipIModel(60, 0)
    assert CipIModel(60, 30).params == {"delta": 60, "k": 30}
