"""Factored item-similarity scorer with user and item biases.

The score of an unconsumed item i for user u whose profile splits into
packs V_1..V_L is

    b_u + b_i + (|V_1 u ... u V_L|)^(-alpha) * sum_l sum_{j in V_l} p_j . q_i

Packs partition the profile, so this equals the flat sum over all
consumed items. Empty profiles score as bias only (the normalizer is
skipped). Factor learning is out of scope here: factors load from a file
or start from a seeded Gaussian; a minimal SGD fitter exists behind an
explicit ``experimental`` switch.
"""

from __future__ import annotations

import numpy as np

from ciprec.ingest import Cip, ProfileStore


def _pack_items(cips) -> list[list[int]]:
    return [list(c.items) if isinstance(c, Cip) else list(c) for c in cips]


class FismModel:
    """Item factor matrices P, Q (n x k) plus bias vectors."""

    kind = "fism"

    def __init__(self, p: np.ndarray, q: np.ndarray, b_user: np.ndarray,
                 b_item: np.ndarray, alpha: float, delta: int = 60):
        if p.shape != q.shape:
            raise ValueError(f"P and Q shapes differ: {p.shape} vs {q.shape}")
        if len(b_item) != p.shape[0]:
            raise ValueError("item bias length does not match factor rows")
        self.p = p
        self.q = q
        self.b_user = b_user
        self.b_item = b_item
        self.alpha = float(alpha)
        self.delta = delta
        self.profiles: ProfileStore | None = None

    @classmethod
    def random_init(cls, num_users: int, num_items: int, k: int,
                    alpha: float = 0.5, seed: int = 1, delta: int = 60) -> "FismModel":
        """Seeded Gaussian factors (sigma 0.01), zero biases."""
        rng = np.random.default_rng(seed)
        p = rng.normal(0.0, 0.01, size=(num_items, k))
        q = rng.normal(0.0, 0.01, size=(num_items, k))
        return cls(p, q, np.zeros(num_users), np.zeros(num_items), alpha, delta)

    @classmethod
    def train(cls, store: ProfileStore, delta: int, k: int,
              alpha: float = 0.5, seed: int = 1) -> "FismModel":
        model = cls.random_init(store.num_users, store.num_items, k, alpha,
                                seed, delta)
        model.profiles = store
        return model

    @property
    def num_items(self) -> int:
        return self.p.shape[0]

    @property
    def num_users(self) -> int:
        return len(self.b_user)

    @property
    def k(self) -> int:
        return self.p.shape[1]

    def score(self, cips, u: int, i: int) -> float:
        """Pack-sum score of item i for user u. Raises ValueError for an
        already-consumed or unknown item, or an unknown user."""
        packs = _pack_items(cips)
        if not (0 <= u < self.num_users):
            raise ValueError(f"unknown user {u}")
        if not (0 <= i < self.num_items):
            raise ValueError(f"unknown item {i}")
        consumed = set()
        for pack in packs:
            consumed.update(pack)
        if i in consumed:
            raise ValueError(f"item {i} is already in user {u}'s profile")
        total = self.b_user[u] + self.b_item[i]
        if consumed:
            qi = self.q[i]
            inner = 0.0
            for pack in packs:
                if pack:
                    inner += float((self.p[pack] @ qi).sum())
            total += len(consumed) ** (-self.alpha) * inner
        return float(total)

    def recommend_for_cips(self, cips, u: int, n: int) -> list[int]:
        """Top-n unconsumed items by score, ties by ascending item id."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        packs = _pack_items(cips)
        consumed = sorted({i for pack in packs for i in pack})
        scores = self.b_user[u] + self.b_item.copy()
        if consumed:
            profile_vec = self.p[consumed].sum(axis=0)
            scores += len(consumed) ** (-self.alpha) * (self.q @ profile_vec)
        keep = np.ones(self.num_items, dtype=bool)
        keep[consumed] = False
        idx = np.nonzero(keep)[0]
        order = np.lexsort((idx, -scores[idx]))[:n]
        return [int(i) for i in idx[order]]

    def recommend(self, u: int, n: int) -> list[int]:
        if self.profiles is None:
            raise ValueError("model has no profiles attached")
        if not (0 <= u < self.num_users):
            ranked = self.profiles.popular_ranking()
            return ranked[:n]
        prof = self.profiles.get(u)
        cips = prof.partition(self.delta) if prof else []
        return self.recommend_for_cips(cips, u, n)

    def fit_sgd(self, store: ProfileStore, epochs: int = 5, lr: float = 0.01,
                reg: float = 0.01, neg_ratio: int = 3, seed: int = 1,
                experimental: bool = False) -> list[float]:
        """Minimal pointwise squared-error SGD over consumed items plus
        sampled negatives, leaving the scored item out of its own sum.
        Unsupported surface; pass ``experimental=True`` to run it."""
        if not experimental:
            raise ValueError("fit_sgd is experimental; pass experimental=True")
        rng = np.random.default_rng(seed)
        losses = []
        for _ in range(epochs):
            se = 0.0
            count = 0
            for u in sorted(store.profiles):
                items = store.profiles[u].items
                if not items:
                    continue
                rows = np.asarray(items)
                negs = rng.integers(0, self.num_items, size=neg_ratio * len(rows))
                targets = [(i, 1.0) for i in rows] + [
                    (int(j), 0.0) for j in negs if int(j) not in store.profiles[u].pos]
                for i, y in targets:
                    others = rows[rows != i]
                    if len(others):
                        x = self.p[others].sum(axis=0) * len(others) ** (-self.alpha)
                    else:
                        x = np.zeros(self.k)
                    pred = self.b_user[u] + self.b_item[i] + float(x @ self.q[i])
                    err = y - pred
                    se += err * err
                    count += 1
                    qi = self.q[i].copy()
                    self.b_user[u] += lr * (err - reg * self.b_user[u])
                    self.b_item[i] += lr * (err - reg * self.b_item[i])
                    self.q[i] += lr * (err * x - reg * qi)
                    if len(others):
                        g = lr * (err * len(others) ** (-self.alpha))
                        self.p[others] += g * qi - lr * reg * self.p[others]
            losses.append(se / max(1, count))
        return losses

    @property
    def params(self) -> dict:
        return {"k": self.k, "alpha": self.alpha, "delta": self.delta}
