"""Counter-based random streams and deterministic chunked evaluation.

All randomness is derived from one 64-bit seed. A stream is addressed by
``(seed, name, index)``; the Philox generator behind it depends only on that
address, so chunk ``k`` of a sample stream is the same no matter which worker
produces it or in what order.
"""

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 1 << 14
WORKERS_ENV = "HOROLAB_WORKERS"


def _name_key(name):
    return zlib.crc32(name.encode("utf8"))


def substream(seed, name, index=0):
    """Return a Philox-backed generator for the stream ``(seed, name, index)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(_name_key(name), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def chunk_bounds(start, count, chunk=CHUNK):
    """Split ``[start, start + count)`` on the global chunk grid.

    Yields ``(chunk_index, lo, hi)`` with ``lo``/``hi`` offsets inside the chunk.
    """
    stop = start + count
    k = start // chunk
    while k * chunk < stop:
        lo = max(start, k * chunk) - k * chunk
        hi = min(stop, (k + 1) * chunk) - k * chunk
        yield k, lo, hi
        k += 1


def blocks(count, chunk=CHUNK):
    """Absolute ranges ``(lo, hi)`` covering ``[0, count)`` on the chunk grid."""
    return [(lo, min(lo + chunk, count)) for lo in range(0, count, chunk)]


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]`` possibly on a thread pool; order is preserved."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def pairwise_sum(values):
    """Fixed-order pairwise summation of a sequence of floats/arrays."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]
