"""Backend selection for the amplitude sweep kernel.

The compiled extension is used when it was built; otherwise, or when the
environment variable WGSCATTER_PURE_PYTHON is set to a non-empty value, the
numpy implementation is used.  Both return identical orderings.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _sweep_py

try:
    if os.environ.get("WGSCATTER_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _sweep_ext
except ImportError:
    _sweep_ext = None

BACKEND = "compiled" if _sweep_ext is not None else "python"


def _impl(backend):
    if backend is None:
        backend = BACKEND
    if backend == "compiled":
        if _sweep_ext is None:
            raise ValueError("compiled backend is not available")
        return _sweep_ext.sweep
    if backend == "python":
        return _sweep_py.sweep
    raise ValueError(f"unknown backend {backend!r}")


def _partition(start, n_bins, n_parts):
    """Contiguous item ranges with roughly equal sweep work."""
    work = np.cumsum(np.maximum(n_bins - start, 1))
    total = work[-1]
    cuts = np.searchsorted(work, total * np.arange(1, n_parts) / n_parts)
    edges = np.unique(np.concatenate([[0], cuts, [start.size]]))
    return list(zip(edges[:-1], edges[1:]))


def sweep(states, start, U, uidx, E, eidx, threads=1, backend=None):
    """Propagate item states through the bins and emit projected vectors.

    For every item i (state ``states[i]`` sitting at bin edge ``start[i]``)
    and every bin k >= start[i] and channel c, the vector
    ``E[eidx[k], c] @ s_k`` is emitted when it is not exactly zero, where
    s_k is the item state propagated to edge k with the steps
    ``U[uidx[k']]``.  Returns (item, bin, channel, vectors) sorted by
    (item, bin, channel).
    """
    fn = _impl(backend)
    states = np.ascontiguousarray(states, dtype=complex)
    start = np.ascontiguousarray(start, dtype=np.intp)
    U = np.ascontiguousarray(U, dtype=complex)
    uidx = np.ascontiguousarray(uidx, dtype=np.intp)
    E = np.ascontiguousarray(E, dtype=complex)
    eidx = np.ascontiguousarray(eidx, dtype=np.intp)
    n = states.shape[0]
    threads = max(1, int(threads))
    if threads == 1 or n < 2 * threads:
        return fn(states, start, U, uidx, E, eidx)
    parts = _partition(start, uidx.shape[0], threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, states[a:b], start[a:b], U, uidx, E, eidx)
                   for a, b in parts]
        results = [f.result() for f in futures]
    items = np.concatenate([res[0] + a for res, (a, _) in zip(results, parts)])
    return (items, np.concatenate([res[1] for res in results]),
            np.concatenate([res[2] for res in results]),
            np.concatenate([res[3] for res in results]))
