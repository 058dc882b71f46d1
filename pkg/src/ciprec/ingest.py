"""Consumption-log ingestion: events, user profiles, consumed item packs.

A consumption log is a list of (user, item, timestamp) events. Users and
items get dense integer ids in order of first appearance; events are then
sorted by timestamp (stable, so same-timestamp events keep file order).
Each user's profile is the time-ordered sequence of distinct items they
consumed; a profile splits into consumed item packs (short bursts of
activity) wherever the gap between consecutive events exceeds ``delta``
seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

FORMATS = ("ml-tab", "ml-dcolon", "csv")

CSV_HEADER = "user,item,rating,timestamp"


class ParseError(ValueError):
    """Raised for malformed or empty input files."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Event:
    """One consumption event. Ids are dense internal indices."""

    user: int
    item: int
    ts: int
    rating: float | None = None


class EventLog:
    """A timestamp-sorted consumption log with dense id dictionaries.

    ``users``, ``items`` and ``ts`` are parallel int64 arrays; ``ratings``
    is float64 with NaN where the source had no rating. Ratings are kept
    only as provenance, nothing downstream reads them. ``user_ids`` and
    ``item_ids`` map dense index -> raw id; the ``*_index`` dicts are the
    inverse maps. Slices produced by :func:`temporal_split` share the
    parent's dictionaries so dense ids stay valid across splits.
    """

    def __init__(self, users, items, ts, ratings, user_ids, item_ids,
                 user_index=None, item_index=None):
        self.users = np.asarray(users, dtype=np.int64)
        self.items = np.asarray(items, dtype=np.int64)
        self.ts = np.asarray(ts, dtype=np.int64)
        self.ratings = np.asarray(ratings, dtype=np.float64)
        # keep list identity so slices share their parent's id space
        self.user_ids = user_ids if isinstance(user_ids, list) else list(user_ids)
        self.item_ids = item_ids if isinstance(item_ids, list) else list(item_ids)
        self.user_index = user_index or {r: k for k, r in enumerate(self.user_ids)}
        self.item_index = item_index or {r: k for k, r in enumerate(self.item_ids)}

    @property
    def num_users(self) -> int:
        return len(self.user_ids)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    def __len__(self) -> int:
        return len(self.users)

    def __iter__(self) -> Iterator[Event]:
        for k in range(len(self.users)):
            r = self.ratings[k]
            yield Event(int(self.users[k]), int(self.items[k]), int(self.ts[k]),
                        None if math.isnan(r) else float(r))

    @property
    def events(self) -> list[Event]:
        return list(self)

    def slice(self, lo: int, hi: int) -> "EventLog":
        return EventLog(self.users[lo:hi], self.items[lo:hi], self.ts[lo:hi],
                        self.ratings[lo:hi], self.user_ids, self.item_ids,
                        self.user_index, self.item_index)


def _split_line(line: str, fmt: str, line_no: int) -> tuple[str, str, str, str]:
    if fmt == "ml-tab":
        parts = line.split("\t")
    elif fmt == "ml-dcolon":
        parts = line.split("::")
    else:
        parts = line.split(",")
    if len(parts) != 4:
        raise ParseError(f"expected 4 fields, got {len(parts)}", line_no)
    return parts[0], parts[1], parts[2], parts[3]


def parse_events(source, fmt: str) -> EventLog:
    """Parse a consumption log file into an :class:`EventLog`.

    ``source`` is a path or an iterable of lines. ``fmt`` is one of
    ``ml-tab`` (user<TAB>item<TAB>rating<TAB>timestamp), ``ml-dcolon``
    (:: separated) or ``csv`` (header ``user,item,rating,timestamp``).
    Raises :class:`ParseError` with the offending line number on malformed
    input, and on empty input.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_events(list(fh), fmt)

    users: list[int] = []
    items: list[int] = []
    ts: list[int] = []
    ratings: list[float] = []
    user_index: dict[int, int] = {}
    item_index: dict[int, int] = {}
    user_ids: list[int] = []
    item_ids: list[int] = []

    line_no = 0
    saw_header = False
    for raw in source:
        line_no += 1
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        if fmt == "csv" and not saw_header:
            saw_header = True
            if line != CSV_HEADER:
                raise ParseError(f"expected header {CSV_HEADER!r}", line_no)
            continue
        u_s, i_s, r_s, t_s = _split_line(line, fmt, line_no)
        try:
            u_raw = int(u_s)
            i_raw = int(i_s)
            t = int(t_s)
        except ValueError:
            raise ParseError(f"non-integer id or timestamp in {line!r}", line_no) from None
        if r_s == "":
            rating = math.nan
        else:
            try:
                rating = float(r_s)
            except ValueError:
                raise ParseError(f"non-numeric rating in {line!r}", line_no) from None
        u = user_index.get(u_raw)
        if u is None:
            u = user_index[u_raw] = len(user_ids)
            user_ids.append(u_raw)
        i = item_index.get(i_raw)
        if i is None:
            i = item_index[i_raw] = len(item_ids)
            item_ids.append(i_raw)
        users.append(u)
        items.append(i)
        ts.append(t)
        ratings.append(rating)

    if not users:
        raise ParseError("no events in input")

    order = np.argsort(np.asarray(ts, dtype=np.int64), kind="stable")
    users_a = np.asarray(users, dtype=np.int64)[order]
    items_a = np.asarray(items, dtype=np.int64)[order]
    ts_a = np.asarray(ts, dtype=np.int64)[order]
    ratings_a = np.asarray(ratings, dtype=np.float64)[order]
    return EventLog(users_a, items_a, ts_a, ratings_a, user_ids, item_ids,
                    user_index, item_index)


def temporal_split(log: EventLog, n_train: int, n_valid: int,
                   n_test: int) -> tuple[EventLog, EventLog, EventLog]:
    """Split a log into contiguous train/validation/test slices by time.

    Counts must be non-negative and sum to at most ``len(log)``; any
    remaining suffix is dropped.
    """
    for name, n in (("n_train", n_train), ("n_valid", n_valid), ("n_test", n_test)):
        if n < 0:
            raise ValueError(f"{name} must be >= 0, got {n}")
    total = n_train + n_valid + n_test
    if total > len(log):
        raise ValueError(f"split sizes sum to {total} > {len(log)} events")
    a = n_train
    b = n_train + n_valid
    return log.slice(0, a), log.slice(a, b), log.slice(b, total)


@dataclass
class Cip:
    """One consumed item pack: distinct items consumed in one burst."""

    items: list[int]
    start_ts: int
    end_ts: int

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class UserProfile:
    """Time-ordered distinct items one user consumed, with positions."""

    user: int
    items: list[int] = field(default_factory=list)
    ts: list[int] = field(default_factory=list)
    pos: dict[int, int] = field(default_factory=dict)

    def append(self, item: int, t: int) -> bool:
        """Add one consumption; returns False for an already-seen item."""
        if item in self.pos:
            return False
        if self.ts and t < self.ts[-1]:
            raise ValueError("events must arrive in timestamp order")
        self.pos[item] = len(self.items)
        self.items.append(item)
        self.ts.append(t)
        return True

    def __len__(self) -> int:
        return len(self.items)

    def cip_boundaries(self, delta: int) -> list[int]:
        """Start indices of each pack for gap threshold ``delta`` seconds."""
        if delta < 0:
            raise ValueError(f"delta must be >= 0, got {delta}")
        bounds = [0] if self.items else []
        for k in range(len(self.ts) - 1):
            if self.ts[k + 1] > self.ts[k] + delta:
                bounds.append(k + 1)
        return bounds

    def partition(self, delta: int) -> list[Cip]:
        """Split the profile into packs; consecutive events stay in one
        pack iff the next timestamp is within ``delta`` seconds."""
        bounds = self.cip_boundaries(delta)
        out = []
        for b, e in zip(bounds, bounds[1:] + [len(self.items)]):
            out.append(Cip(self.items[b:e], self.ts[b], self.ts[e - 1]))
        return out


def partition_cips(profile: UserProfile, delta: int) -> list[Cip]:
    """Partition a profile into delta-distant consumed item packs."""
    return profile.partition(delta)


class ProfileStore:
    """All user profiles plus catalog sizes and popularity counts."""

    def __init__(self, num_users: int, num_items: int,
                 user_ids: Sequence | None = None,
                 item_ids: Sequence | None = None):
        self.num_users = num_users
        self.num_items = num_items
        self.user_ids = list(user_ids) if user_ids is not None else list(range(num_users))
        self.item_ids = list(item_ids) if item_ids is not None else list(range(num_items))
        self.profiles: dict[int, UserProfile] = {}
        self._counts: np.ndarray | None = None

    def profile(self, user: int) -> UserProfile:
        p = self.profiles.get(user)
        if p is None:
            p = self.profiles[user] = UserProfile(user)
        return p

    def get(self, user: int) -> UserProfile | None:
        return self.profiles.get(user)

    def add_event(self, user: int, item: int, t: int) -> bool:
        if item >= self.num_items:
            self.num_items = item + 1
        if user >= self.num_users:
            self.num_users = user + 1
        added = self.profile(user).append(item, t)
        if added:
            self._counts = None
        return added

    def item_counts(self) -> np.ndarray:
        """Number of profiles containing each item."""
        if self._counts is None or len(self._counts) < self.num_items:
            counts = np.zeros(self.num_items, dtype=np.int64)
            for p in self.profiles.values():
                counts[p.items] += 1
            self._counts = counts
        return self._counts

    def popular_ranking(self) -> list[int]:
        """Items by descending consumption count, ties by ascending id.
        Items nobody consumed are excluded."""
        counts = self.item_counts()
        ids = np.nonzero(counts)[0]
        order = np.lexsort((ids, -counts[ids]))
        return [int(i) for i in ids[order]]

    def __iter__(self) -> Iterator[UserProfile]:
        return iter(self.profiles.values())

    def __len__(self) -> int:
        return len(self.profiles)


def build_profiles(log: EventLog) -> ProfileStore:
    """Build per-user profiles from a log; re-consumptions collapse to
    the first occurrence."""
    store = ProfileStore(log.num_users, log.num_items, log.user_ids, log.item_ids)
    users = log.users
    items = log.items
    ts = log.ts
    for k in range(len(users)):
        store.profile(int(users[k])).append(int(items[k]), int(ts[k]))
    return store


def all_cips(store: ProfileStore, delta: int) -> list[Cip]:
    """Every user's packs, in user order (a training corpus)."""
    out: list[Cip] = []
    for u in sorted(store.profiles):
        out.extend(store.profiles[u].partition(delta))
    return out
