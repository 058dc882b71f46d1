"""Factored item-similarity scoring over pack-structured profiles."""

import numpy as np
import pytest

from ciprec.fism import FismModel
from ciprec.ingest import Cip, ProfileStore

from helpers import store_from


def _unit_model(n_users=2, n_items=5, alpha=0.5):
    # p_j . q_i = 1 for every pair, biases zero
    val = np.sqrt(0.5)
    return FismModel(p=np.full((n_items, 2), val), q=np.full((n_items, 2), val),
                     b_user=np.zeros(n_users), b_item=np.zeros(n_items),
                     alpha=alpha)


def _consumed_store(items, user=0, n_users=2, n_items=5):
    store = ProfileStore(n_users, n_items)
    for k, i in enumerate(items):
        store.add_event(user, i, 100 + k)
    return store


def test_score_frozen_worked_example():
    # hand-derived: |C| = 4, alpha = 0.5, every p.q = 1 -> 4^{-1/2} * 4 = 2
    m = _unit_model()
    store = _consumed_store([0, 1, 2, 3])
    m.profiles = store
    cips = store.get(0).partition(60)
    assert abs(m.score(cips, 0, 4) - 2.0) < 1e-12


def test_score_sums_across_packs_like_flat_profile():
    rng = np.random.default_rng(5)
    done = 0
    while done < 200:
        n_items = 12
        m = FismModel.random_init(3, n_items, 4, alpha=float(rng.uniform(0, 1)),
                                  seed=done)
        items = [int(x) for x in rng.permutation(n_items)[: int(rng.integers(1, 9))]]
        target = int(rng.integers(n_items))
        if target in items:
            continue
        cips = []
        idx = 0
        while idx < len(items):
            step = int(rng.integers(1, len(items) - idx + 1))
            cips.append(Cip(items=np.asarray(items[idx:idx + step]),
                            start_ts=0, end_ts=0))
            idx += step
        flat = [Cip(items=np.asarray(items), start_ts=0, end_ts=0)]
        assert abs(m.score(cips, 1, target) - m.score(flat, 1, target)) < 1e-12
        done += 1


def test_score_empty_profile_is_bias_only():
    m = _unit_model()
    m.b_user = np.array([0.25, -0.5])
    m.b_item = np.arange(5, dtype=float) / 10
    assert m.score([], 1, 4) == -0.5 + 0.4


def test_score_validation():
    m = _unit_model()
    store = _consumed_store([0, 1])
    m.profiles = store
    cips = store.get(0).partition(60)
    with pytest.raises(ValueError):
        m.score(cips, 0, 0)         # already consumed
    with pytest.raises(ValueError):
        m.score(cips, 9, 2)         # unknown user
    with pytest.raises(ValueError):
        m.score(cips, 0, 99)        # unknown item


def test_constructor_validation():
    with pytest.raises(ValueError):
        FismModel(p=np.zeros((3, 2)), q=np.zeros((4, 2)),
                  b_user=np.zeros(1), b_item=np.zeros(3), alpha=0.5)
    with pytest.raises(ValueError):
        FismModel(p=np.zeros((3, 2)), q=np.zeros((3, 2)),
                  b_user=np.zeros(1), b_item=np.zeros(4), alpha=0.5)


def test_random_init_is_seeded_and_small():
    a = FismModel.random_init(3, 7, 4, seed=11)
    b = FismModel.random_init(3, 7, 4, seed=11)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.q, b.q)
    assert np.all(a.b_user == 0.0) and np.all(a.b_item == 0.0)
    assert np.abs(a.p).max() < 0.1  # sigma 0.01 factors stay tiny
    c = FismModel.random_init(3, 7, 4, seed=12)
    assert not np.array_equal(a.p, c.p)


def test_recommend_for_cips_matches_score_ranking():
    rng = np.random.default_rng(8)
    for trial in range(25):
        n_items = 10
        m = FismModel.random_init(2, n_items, 3, seed=100 + trial)
        m.b_item = rng.normal(0, 0.1, n_items)
        items = [int(x) for x in rng.permutation(n_items)[:4]]
        cips = [Cip(items=np.asarray(items), start_ts=0, end_ts=0)]
        recs = m.recommend_for_cips(cips, 0, 3)
        unconsumed = [i for i in range(n_items) if i not in items]
        want = sorted(unconsumed,
                      key=lambda i: (-m.score(cips, 0, i), i))[:3]
        assert recs == want


def test_recommend_paths():
    m = _unit_model()
    m.profiles = _consumed_store([0, 1, 2, 3])
    # profile user: only item 4 remains
    assert m.recommend(0, 3) == [4]
    # known user with empty profile ranks by bias (all zero -> by item id)
    assert m.recommend(1, 3) == [0, 1, 2]
    # out-of-range user falls back to popularity
    assert m.recommend(50, 2) == m.profiles.popular_ranking()[:2]
    with pytest.raises(ValueError):
        m.recommend(0, 0)


def test_fit_sgd_requires_explicit_opt_in():
    store = store_from([(0, 1, 10), (0, 2, 20), (1, 2, 15), (1, 3, 25)])
    m = FismModel.random_init(store.num_users, store.num_items, 4, seed=3)
    m.profiles = store
    with pytest.raises(ValueError):
        m.fit_sgd(store, epochs=1)


def test_fit_sgd_reduces_reconstruction_error():
    rng = np.random.default_rng(0)
    events = []
    t = 0
    for u in range(6):
        for i in range(u, u + 4):
            t += 10
            events.append((u, i, t))
    store = store_from(events)
    m = FismModel.random_init(store.num_users, store.num_items, 4, seed=3)
    m.profiles = store

    def held_in_error():
        tot = 0.0
        cnt = 0
        for u in range(store.num_users):
            prof = store.get(u)
            for i in prof.items:
                rest = [j for j in prof.items if j != i]
                cips = [Cip(items=np.asarray(rest), start_ts=0, end_ts=0)] \
                    if rest else []
                tot += (1.0 - m.score(cips, u, i)) ** 2
                cnt += 1
        return tot / cnt

    before = held_in_error()
    m.fit_sgd(store, epochs=8, lr=0.05, seed=1, experimental=True)
    assert held_in_error() < before


def test_params_reports_hyperparameters():
    m = FismModel.random_init(2, 5, 3, alpha=0.7, seed=1)
    assert m.params["alpha"] == 0.7 and m.params["k"] == 3
