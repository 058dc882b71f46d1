"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from ciprec.ingest import ProfileStore


def random_stream(rng, n_users: int, n_items: int, n_events: int,
                  max_gap: int = 100, unique_per_user: bool = False):
    """Random ``(user, item, ts)`` stream with strictly increasing ts."""
    events = []
    used: dict[int, set[int]] = {}
    t = 0
    while len(events) < n_events:
        u = int(rng.integers(n_users))
        i = int(rng.integers(n_items))
        if unique_per_user:
            owned = used.setdefault(u, set())
            if i in owned:
                if all(len(used.get(v, ())) >= n_items for v in range(n_users)):
                    break
                continue
            owned.add(i)
        t += int(rng.integers(1, max_gap))
        events.append((u, i, t))
    return events


def store_from(events) -> ProfileStore:
    store = ProfileStore(0, 0)
    for u, i, t in events:
        store.add_event(u, i, t)
    return store


def batches_from(events) -> dict[int, list[tuple[int, int]]]:
    out: dict[int, list[tuple[int, int]]] = {}
    for u, i, t in events:
        out.setdefault(u, []).append((i, t))
    return out


def chunked_batches(rng, events, max_chunk: int = 20):
    """Split a stream into contiguous chunks, each as per-user batches."""
    pos = 0
    while pos < len(events):
        step = int(rng.integers(1, max_chunk))
        yield batches_from(events[pos:pos + step])
        pos += step
