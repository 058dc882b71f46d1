"""Incremental implicit-feedback recommenders over consumed item packs."""

from ciprec.ingest import (
    Cip,
    Event,
    EventLog,
    ParseError,
    ProfileStore,
    UserProfile,
    all_cips,
    build_profiles,
    parse_events,
    partition_cips,
    temporal_split,
)

__all__ = [
    "Cip",
    "Event",
    "EventLog",
    "ParseError",
    "ProfileStore",
    "UserProfile",
    "all_cips",
    "build_profiles",
    "parse_events",
    "partition_cips",
    "temporal_split",
]

__version__ = "0.1.0"
