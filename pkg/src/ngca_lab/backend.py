"""Kernel backend selection, deterministic replicate seeding, worker fan-out.

Environment knobs
-----------------
NGCA_LAB_BACKEND : "numba" (default when importable) or "numpy".  Selects the
    implementation of the hot numeric kernels.  Results agree to floating-point
    roundoff; artifacts are byte-stable per backend.
NGCA_LAB_THREADS : positive integer worker cap for embarrassingly parallel
    replicate loops.  Replicate r always draws from an RNG derived purely from
    (master seed, r), so the worker count never changes any result.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigurationError

from . import _kernels_np

_FORCED = os.environ.get("NGCA_LAB_BACKEND", "").strip().lower()

if _FORCED in ("", "numba"):
    try:
        from . import _kernels_nb as _active
    except ImportError:
        if _FORCED == "numba":
            raise
        _active = _kernels_np
elif _FORCED == "numpy":
    _active = _kernels_np
else:
    raise ConfigurationError(
        f"NGCA_LAB_BACKEND must be 'numba' or 'numpy', got {_FORCED!r}")

kernels = _active


def backend_name() -> str:
    return _active.BACKEND_NAME


def derived_seed(master_seed: int, index: int) -> int:
    """64-bit seed for replicate `index`, a pure function of (master, index)."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(2, np.uint64)[0])


def derive_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for replicate `index` of a seeded experiment."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def thread_count() -> int:
    raw = os.environ.get("NGCA_LAB_THREADS", "").strip()
    if not raw:
        return 1
    value = int(raw)
    if value < 1:
        raise ConfigurationError("NGCA_LAB_THREADS must be a positive integer")
    return value


def worker_map(fn, items):
    """Map preserving item order; fans out across NGCA_LAB_THREADS workers.

    Each item must carry its own derived RNG state; ordering of the returned
    list is the item order, so results are identical for any worker count.
    """
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
