from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Tuple

import numpy as np

from src.config import settings
from src.logging.log_service import logger

ChunkFn = Callable[[np.random.Generator, int], np.ndarray]


def stream(seed: int, block: int) -> np.random.Generator:
    """
    Generator for one block of draws

    Philox keyed by the seed and jumped by the block number, so block k gives
    the same numbers however many workers share the run.
    """
    return np.random.Generator(np.random.Philox(key=int(seed)).jumped(int(block)))


def chunk_plan(n: int, chunk_size: int = settings.SAMPLE_CHUNK_SIZE) -> List[Tuple[int, int]]:
    """(block number, size) pairs covering n draws."""
    plan = []
    block = 0
    remaining = int(n)
    while remaining > 0:
        size = min(chunk_size, remaining)
        plan.append((block, size))
        remaining -= size
        block += 1
    return plan


def iter_chunks(chunk_fn: ChunkFn, n: int, seed: int, workers: int = settings.SAMPLE_WORKERS,
                chunk_size: int = settings.SAMPLE_CHUNK_SIZE) -> Iterator[np.ndarray]:
    """
    Yield sample blocks in order, computing up to `workers` blocks at a time

    Args:
        chunk_fn: Draws `size` rows from the given generator
        n: Total number of draws
        seed: Run seed
        workers: Thread count
        chunk_size: Draws per block

    Yields:
        Arrays of shape (size, dim)
    """
    plan = chunk_plan(n, chunk_size)
    logger.debug(f"Sampling {n} draws in {len(plan)} block(s) with {workers} worker(s)")
    workers = max(1, int(workers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, len(plan), workers):
            window = plan[start:start + workers]
            yield from pool.map(lambda item: chunk_fn(stream(seed, item[0]), item[1]), window)


def collect(chunk_fn: ChunkFn, n: int, seed: int, dim: int,
            workers: int = settings.SAMPLE_WORKERS,
            chunk_size: int = settings.SAMPLE_CHUNK_SIZE) -> np.ndarray:
    """All draws as one (n, dim) array."""
    blocks = list(iter_chunks(chunk_fn, n, seed, workers, chunk_size))
    if not blocks:
        return np.empty((0, dim))
    return np.concatenate(blocks, axis=0)
