"""User-pair store: hammock pairs, similarity, incremental batches."""

import math

import numpy as np
import pytest

from ciprec.cip_u import (CipUModel, UserPairState, hammock_distance,
                          hammock_pairs, pair_similarity)
from ciprec.ingest import ProfileStore, UserProfile

from helpers import batches_from, chunked_batches, random_stream, store_from


def _profile(user, items, t0=100):
    p = UserProfile(user)
    for k, i in enumerate(items):
        p.append(i, t0 + k)
    return p


def test_hammock_distance():
    p = _profile(0, [14, 3, 20, 99])
    assert hammock_distance(p, 14, 99) == 3
    assert hammock_distance(p, 20, 3) == 1
    with pytest.raises(ValueError):
        hammock_distance(p, 14, 7)


def test_hammock_pairs_worked_example():
    # hand-worked: positions of 20 and 53 differ by 2 in one profile and
    # by 1 in the other, so with threshold 2 they form the only pair
    p1 = _profile(0, [14, 3, 20, 99, 53, 10, 25])
    p2 = _profile(1, [20, 53, 4])
    assert hammock_pairs(p1, p2, 2) == {(20, 53)}
    # threshold 1 breaks the pair on the first profile's side
    assert hammock_pairs(p1, p2, 1) == set()


def test_hammock_pairs_need_both_sides_close():
    p1 = _profile(0, [1, 2, 9, 9, 3][0:3] + [3])   # [1, 2, 9, 3]
    p2 = _profile(1, [1, 5, 6, 7, 8, 3])
    # distance(1,3): 3 in p1 but 5 in p2 -> pair only when both within δH
    assert hammock_pairs(p1, p2, 4) == set()
    assert hammock_pairs(p1, p2, 5) == {(1, 3)}


def test_pair_similarity_frozen_values():
    # hand-derived: 1 - e^{-1}
    assert pair_similarity(1, False) == 0.6321205588285577
    assert pair_similarity(0, False) == 0.0
    assert pair_similarity(0, True) == 1.0
    assert pair_similarity(5, True) == 1.0
    # hand-derived: 1 - e^{-3}
    assert abs(pair_similarity(3, False) - (1.0 - math.exp(-3.0))) < 1e-15


def test_similarity_bounds_and_monotonicity():
    for hp in range(0, 60):
        s = pair_similarity(hp, False)
        assert 0.0 <= s <= 1.0
        if hp:
            assert s >= pair_similarity(hp - 1, False)
    # strictly below 1 while e^{-hp} is still representable next to 1.0
    for hp in range(0, 36):
        assert pair_similarity(hp, False) < 1.0


def test_train_matches_brute_force():
    rng = np.random.default_rng(12)
    for _ in range(30):
        events = random_stream(rng, 8, 15, int(rng.integers(10, 60)))
        store = store_from(events)
        dh = int(rng.integers(0, 6))
        model = CipUModel.train(store, dh, 5)
        users = sorted(store.profiles)
        for a in range(len(users)):
            for b in range(a + 1, len(users)):
                u, v = users[a], users[b]
                want = len(hammock_pairs(store.get(u), store.get(v), dh))
                state = model.pair_state(u, v)
                assert state.hp_count == want
                assert state.similarity == pair_similarity(
                    want, store.get(u).items == store.get(v).items)


def test_incremental_chunks_equal_batch():
    rng = np.random.default_rng(4)
    for _ in range(25):
        events = random_stream(rng, 10, 20, int(rng.integers(20, 90)))
        store = store_from(events)
        batch = CipUModel.train(store, 3, 5)
        inc = CipUModel(3, 5)
        for chunk in chunked_batches(rng, events, 15):
            inc.apply_batch(chunk)
        for u in store.profiles:
            for v in store.profiles:
                if u >= v:
                    continue
                assert batch._hp.get(u, {}).get(v, 0) == \
                    inc._hp.get(u, {}).get(v, 0)
        for u in store.profiles:
            assert inc.profiles.get(u).items == store.get(u).items


def test_reapplying_same_events_is_a_no_op():
    events = [(0, 1, 10), (0, 2, 20), (1, 1, 15), (1, 2, 30)]
    m = CipUModel(2, 5)
    m.apply_batch(batches_from(events))
    before = {u: dict(r) for u, r in m._hp.items()}
    m.apply_batch(batches_from(events))
    assert {u: dict(r) for u, r in m._hp.items()} == before


def test_pair_state_and_equality_flag():
    store = store_from([(0, 7, 10), (0, 8, 20), (1, 7, 100), (1, 8, 130)])
    m = CipUModel.train(store, 1, 5)
    st = m.pair_state(0, 1)
    assert isinstance(st, UserPairState)
    assert st.common_items == (7, 8)
    assert st.profiles_equal and st.similarity == 1.0
    with pytest.raises(ValueError):
        m.pair_state(0, 99)


def test_top_k_users_ordering_and_ties():
    # users 1 and 2 tie against user 0; ascending user id breaks the tie
    events = [(0, 1, 10), (0, 2, 20),
              (1, 1, 10), (1, 2, 20), (1, 3, 30),
              (2, 1, 10), (2, 2, 20), (2, 4, 30),
              (3, 9, 10)]
    m = CipUModel.train(store_from(events), 5, 5)
    top = m.top_k_users(0)
    assert [u for u, _ in top] == [1, 2]
    assert top[0][1] == top[1][1] > 0
    assert m.top_k_users(0, k=1) == [top[0]]
    assert m.top_k_users(3) == []   # no common items with anyone


def test_recommend_uses_neighbors_then_falls_back():
    events = [(0, 1, 10), (0, 2, 20),
              (1, 1, 10), (1, 2, 20), (1, 3, 30), (1, 4, 40),
              (2, 4, 10), (2, 4, 15)]
    m = CipUModel.train(store_from(events), 5, 5)
    # neighbor 1 supplies items 3 and 4; user 0 already has 1 and 2
    assert m.recommend(0, 2) == [3, 4]
    # unknown user falls back to popularity
    assert m.recommend(77, 3) == m.profiles.popular_ranking()[:3]


def test_constructor_validation():
    with pytest.raises(ValueError):
        CipUModel(-1, 5)
    with pytest.raises(ValueError):
        CipUModel(2, 0)


def test_params_reports_hyperparameters():
    m = CipUModel(3, 7)
    assert m.params == {"delta_h": 3, "k": 7}
