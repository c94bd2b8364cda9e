"""Counter-keyed random streams and deterministic block-parallel execution.

Every block of replicates draws from its own generator keyed by
``(seed, *key, block_index)``.  Block boundaries depend only on the problem
size, never on the worker count, so results are identical for any
``threads`` setting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(total: int, block: int) -> list[int]:
    if total < 0:
        raise ValueError("total must be non-negative")
    block = max(1, int(block))
    sizes = [block] * (total // block)
    if total % block:
        sizes.append(total % block)
    return sizes


def run_blocks(
    fn: Callable[[np.random.Generator, int], T],
    total: int,
    block: int,
    seed: int,
    key: Sequence[int] = (),
    threads: int = 1,
) -> list[T]:
    """Evaluate ``fn(rng, size)`` over replicate blocks, results in block order."""
    sizes = block_sizes(total, block)

    def task(i: int) -> T:
        return fn(keyed_rng(seed, *key, i), sizes[i])

    if threads <= 1 or len(sizes) <= 1:
        return [task(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(len(sizes))))
