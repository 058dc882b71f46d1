"""Item-based recommender scored by co-consumption inside item packs.

Every ordered pair (i, j) with i consumed before j inside one pack adds
``1 + 1/H`` to ``score(i, j)``, where H is their positional distance in
that pack, and each pack an item appears in bumps ``card(i)`` by one.
The pair is counted once per pack, so

    sim(i, j) = score(i, j) / (2 * max(card(i), card(j)))

stays in [0, 1] and hits 1 exactly when every pack containing i or j has
i immediately followed by j.
"""

from __future__ import annotations

from typing import Sequence

from ciprec.ingest import ProfileStore


class CipIModel:
    """Sparse directed item-item score store plus recommender.

    ``delta`` is the pack gap threshold in seconds (used when updating
    from raw event batches), ``k`` the per-item neighbor list size used
    by :meth:`recommend`.
    """

    kind = "cip-i"

    def __init__(self, delta: int, k: int):
        if delta < 0:
            raise ValueError(f"delta must be >= 0, got {delta}")
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        self.delta = delta
        self.k = k
        self.score: dict[int, dict[int, float]] = {}
        self.card: dict[int, int] = {}
        self.profiles = ProfileStore(0, 0)
        self._tail: dict[int, list[int]] = {}
        self._popular: list[int] | None = None

    @classmethod
    def train(cls, store: ProfileStore, delta: int, k: int) -> "CipIModel":
        """Score every user's packs in one pass over existing profiles."""
        model = cls(delta, k)
        model.profiles = store
        for u in sorted(store.profiles):
            packs = store.profiles[u].partition(delta)
            for pack in packs:
                model.update_scores(pack.items)
            if packs:
                model._tail[u] = list(packs[-1].items)
        return model

    def update_scores(self, items: Sequence[int]) -> None:
        """Fold one pack into the score and cardinality stores.

        Raises ValueError if the pack repeats an item.
        """
        if len(set(items)) != len(items):
            raise ValueError("pack repeats an item")
        for i in items:
            self.card[i] = self.card.get(i, 0) + 1
        self._popular = None
        for p in range(len(items) - 1):
            row = self.score.setdefault(items[p], {})
            for q in range(p + 1, len(items)):
                j = items[q]
                row[j] = row.get(j, 0.0) + 1.0 + 1.0 / (q - p)

    def apply_events(self, batches: dict[int, list[tuple[int, int]]]) -> None:
        """Extend per-user open packs with new events, scoring each new
        item against the pack members it joins. Produces exactly the
        same stores as retraining on the final profiles."""
        for u in sorted(batches):
            prof = self.profiles.profile(u)
            tail = self._tail.get(u, [])
            last_ts = prof.ts[-1] if prof.ts else None
            for item, t in batches[u]:
                if not self.profiles.add_event(u, item, t):
                    continue
                self._popular = None
                if last_ts is not None and t <= last_ts + self.delta:
                    dist = len(tail)
                    for p, j in enumerate(tail):
                        row = self.score.setdefault(j, {})
                        row[item] = row.get(item, 0.0) + 1.0 + 1.0 / (dist - p)
                    tail.append(item)
                else:
                    tail = [item]
                self.card[item] = self.card.get(item, 0) + 1
                last_ts = t
            self._tail[u] = tail

    def similarity(self, i: int, j: int) -> float:
        """Directed similarity of j following i; 0 without co-consumption."""
        s = self.score.get(i, {}).get(j, 0.0)
        if s == 0.0:
            return 0.0
        return s / (2.0 * max(self.card.get(i, 0), self.card.get(j, 0)))

    def top_k(self, i: int, k: int | None = None) -> list[tuple[int, float]]:
        """Top-k successors of item i by similarity, ties by ascending
        item id; items never scored give []."""
        k = self.k if k is None else k
        row = self.score.get(i)
        if not row:
            return []
        scored = [(j, self.similarity(i, j)) for j in row]
        scored = [(j, s) for j, s in scored if s > 0.0]
        scored.sort(key=lambda t: (-t[1], t[0]))
        return scored[:k]

    def _fallback(self, exclude) -> list[int]:
        if self._popular is None:
            self._popular = self.profiles.popular_ranking()
        return [i for i in self._popular if i not in exclude]

    def recommend_for_profile(self, items: Sequence[int], n: int) -> list[int]:
        """Top-n items tallied over each profile item's neighbor list,
        never containing profile items. Empty tallies (and empty
        profiles) fall back to global popularity."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        owned = set(items)
        if not owned:
            return self._fallback(owned)[:n]
        counts: dict[int, int] = {}
        for i in items:
            for j, _ in self.top_k(i):
                if j not in owned:
                    counts[j] = counts.get(j, 0) + 1
        if not counts:
            return self._fallback(owned)[:n]
        ranked = sorted(counts.items(), key=lambda t: (-t[1], t[0]))
        return [j for j, _ in ranked[:n]]

    def recommend(self, u: int, n: int) -> list[int]:
        prof = self.profiles.get(u)
        return self.recommend_for_profile(prof.items if prof else [], n)

    @property
    def params(self) -> dict:
        return {"delta": self.delta, "k": self.k}
