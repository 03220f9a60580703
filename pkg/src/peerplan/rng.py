"""Deterministic random-stream derivation.

A master seed plus a tuple of stream ids (strings or ints) names an
independent generator. Every stochastic operation takes an explicit
generator, so runs are reproducible and independent estimates can be
re-derived in any order from the master seed alone.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _id_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def substream(master_seed: int, *stream_ids) -> np.random.Generator:
    """Generator for the named stream; identical ids give identical streams."""
    key = tuple(_id_word(p) for p in stream_ids)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def stream_label(*stream_ids) -> str:
    """Human-readable stream id recorded in event logs."""
    return "/".join(str(p) for p in stream_ids)
