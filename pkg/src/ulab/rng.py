"""Seeded, splittable randomness.

Every random quantity is drawn from a Philox generator keyed by
``(seed, *keys)``, so trial ``i`` of an experiment sees the same stream no
matter how trials are scheduled across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

_MASK64 = (1 << 64) - 1


def generator(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for stream ``keys`` under ``seed``."""
    entropy = [int(seed) & _MASK64] + [int(k) & _MASK64 for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def thread_count() -> int:
    raw = os.environ.get("ULAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map ``fn`` over ``items`` preserving order; parallel up to ULAB_THREADS."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(total: int, size: int) -> Sequence[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]
