"""Deterministic work units: per-unit RNG streams and an ordered worker pool.

A run is split into a fixed number of units that depends only on the
configuration. Each unit draws from its own stream spawned from the master
seed, and results are gathered in unit order, so the worker count never
changes the numbers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def unit_rngs(seed: int, n_units: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(n_units)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def split(total: int, unit_size: int) -> list[int]:
    """Sizes of consecutive units covering ``total`` items."""
    full, rest = divmod(int(total), int(unit_size))
    return [unit_size] * full + ([rest] if rest else [])


def default_workers() -> int:
    return os.cpu_count() or 1


def run_units(fn: Callable[[int], T], n_units: int, workers: int | None = 1) -> Sequence[T]:
    """Evaluate ``fn(i)`` for every unit index, returning results in index order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or n_units == 1:
        return [fn(i) for i in range(n_units)]
    with ThreadPoolExecutor(max_workers=min(workers, n_units)) as pool:
        return list(pool.map(fn, range(n_units)))
