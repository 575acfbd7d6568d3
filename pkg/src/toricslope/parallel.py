"""Ordered parallel map with a deterministic reduction."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from . import kernels

T = TypeVar("T")
R = TypeVar("R")

_DEFAULT_THREADS = 1


def set_default_threads(threads: int | None) -> None:
    """Set the worker count used when ``threads`` is not given (``None`` = all cores)."""
    global _DEFAULT_THREADS
    _DEFAULT_THREADS = resolve_threads(threads)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return max(1, os.cpu_count() or 1)
    if threads < 1:
        raise ValueError("threads must be positive")
    return int(threads)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 0) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on ``threads`` workers, in input order.

    ``threads=0`` uses the module default.
    """
    items = list(items)
    k = _DEFAULT_THREADS if threads == 0 else resolve_threads(threads)
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(k, len(items))) as ex:
        return list(ex.map(fn, items))


def ordered_sum(values: Sequence[float]) -> float:
    """Pairwise sum in input order, independent of the worker count."""
    import numpy as np

    arr = np.ascontiguousarray(np.asarray(values, dtype=float).reshape(-1))
    if arr.size == 0:
        return 0.0
    return float(kernels.pairwise_sum(arr))
