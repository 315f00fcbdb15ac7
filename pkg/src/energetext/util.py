"""Shared runtime helpers: seed derivation and worker-count policy.

All randomness in the package flows from integer seeds.  Components that
need independent streams derive named sub-seeds with :func:`derive_seed`
so that, e.g., per-document inference does not depend on document order.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV_VAR = "ENERGETEXT_THREADS"


def derive_seed(master: int, *names: object) -> int:
    """Derive a stable 64-bit sub-seed from a master seed and name parts.

    The same (master, names) always yields the same seed; distinct names
    yield independent streams for practical purposes.
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode("utf-8"))
    for name in names:
        h.update(b"\x1f")
        h.update(str(name).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(master: int, *names: object) -> np.random.Generator:
    """Seeded PCG64 generator for the named sub-stream."""
    return np.random.default_rng(derive_seed(master, *names))


def worker_count() -> int:
    """Worker cap from ENERGETEXT_THREADS (0 or unset means auto)."""
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError(f"{THREADS_ENV_VAR} must be >= 0, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T]) -> list[R]:
    """Map ``fn`` over items, preserving input order.

    Runs in a thread pool when the worker cap allows; results are
    order-stable regardless of worker count.
    """
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
