"""Seeded random streams.

Every consumer derives its own PCG64 stream from ``(seed, name)`` so that
results do not depend on the order in which streams are created.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed, name):
    """Independent generator for operation ``name`` under ``seed``."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) % 2**64, key])))
