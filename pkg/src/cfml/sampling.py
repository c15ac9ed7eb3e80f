"""Counter-based sampling of partial quotients of a Lebesgue-uniform x.

Given the first ``k`` digits of ``x`` with ``r = q_{k-1}/q_k``, the tail
``t = T^k x`` has density ``(1 + r) / (1 + r t)**2`` on ``[0, 1)``.  Inverting
its distribution function at a uniform ``u in (0, 1]`` gives the next digit

    a_{k+1} = floor((1 + r) / u - r),      r <- 1 / (a_{k+1} + r),

so one fresh uniform per digit reproduces the exact joint law of the first
``n`` partial quotients of a uniform point, however large ``n`` is.

Uniforms come from Philox keyed by ``(seed, block)``: samples are grouped in
fixed blocks of :data:`BLOCK` and block ``b`` of seed ``s`` always sees the
same stream, so results do not depend on how blocks are spread over workers.
Row ``k`` of a block is digit ``k + 1`` for every sample in the block, so the
first ``k`` digits of a trajectory do not depend on the requested depth.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

BLOCK = 4096
SEED_MASK = (1 << 64) - 1
_DIGIT_CEILING = float(1 << 62)

T = TypeVar("T")


def block_generator(seed: int, block: int) -> np.random.Generator:
    key = (int(seed) & SEED_MASK) | (int(block) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def digit_block(seed: int, block: int, n: int, size: int) -> np.ndarray:
    """``(n, size)`` int64 array: column ``j`` holds ``a_1..a_n`` of sample ``j``."""
    gen = block_generator(seed, block)
    u = 1.0 - gen.random((n, size))  # in (0, 1]
    digits = np.empty((n, size), dtype=np.int64)
    r = np.zeros(size)
    for k in range(n):
        a = np.floor(np.minimum((1.0 + r) / u[k] - r, _DIGIT_CEILING))
        np.maximum(a, 1.0, out=a)
        digits[k] = a.astype(np.int64)
        r = 1.0 / (a + r)
    return digits


def block_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def map_blocks(fn: Callable[[int, int], T], samples: int, workers: int = 1) -> list[T]:
    """``[fn(block_index, block_size) ...]`` in block order, optionally threaded."""
    sizes = block_sizes(samples)
    jobs = list(enumerate(sizes))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(b, size) for b, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
