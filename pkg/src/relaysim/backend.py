"""Engine backend selection: compiled kernels when available, pure Python otherwise.

The compiled extension (``relaysim._core``) and the pure fallback
(``relaysim._pure``) implement the same three kernels with bit-identical
results; which one runs is decided once at import time.  Set
``RELAYSIM_BACKEND=python`` or ``=cython`` to force a choice (forcing
cython fails loudly if the extension is missing rather than silently
degrading).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import _pure
from .model import Heuristic, KnowledgeGraph, ParameterError, Topology

try:
    from . import _core
except ImportError:  # extension not built; pure fallback carries on
    _core = None

__all__ = [
    "available_backends",
    "backend_name",
    "use_backend",
    "select_arrays",
    "run_trial_kernel",
    "batch_delivery_kernel",
]

_KIND_CODE = {
    Heuristic.ORIGINAL: 0,
    Heuristic.SCORE: 1,
    Heuristic.EXPECTED: 2,
    Heuristic.THRESHOLD: 3,
}


def _resolve_default() -> str:
    forced = os.environ.get("RELAYSIM_BACKEND", "").strip().lower()
    if forced == "python":
        return "python"
    if forced == "cython":
        if _core is None:
            raise ImportError(
                "RELAYSIM_BACKEND=cython but the compiled extension is not built"
            )
        return "cython"
    if forced:
        raise ImportError(f"unknown RELAYSIM_BACKEND {forced!r}")
    return "cython" if _core is not None else "python"


_active = _resolve_default()


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _core is not None else ("python",)


def backend_name() -> str:
    """Name of the backend that kernels currently dispatch to."""
    return _active


@contextmanager
def use_backend(name: str):
    """Temporarily force a backend (used by tests and the benchmark)."""
    global _active
    if name not in available_backends():
        raise ParameterError(f"backend {name!r} is not available")
    previous = _active
    _active = name
    try:
        yield
    finally:
        _active = previous


def select_arrays(
    kg: KnowledgeGraph,
    link_prob: np.ndarray,
    ego: int,
    heuristic: Heuristic,
    threshold: float,
) -> tuple[np.ndarray, int, np.ndarray]:
    """Kernel-level relay selection: (relays, n_mandatory, residual)."""
    if _active == "cython":
        return _core.select_relays(
            kg.indptr, kg.indices, link_prob, ego, _KIND_CODE[heuristic], threshold
        )
    return _pure.select_arrays(kg, link_prob, ego, heuristic, threshold)


def run_trial_kernel(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One cascade: (received, tx_order, mpr_sizes, relay_dists)."""
    if _active == "cython":
        return _core.run_trial(
            kg.indptr,
            kg.indices,
            topo.link_prob,
            topo.positions,
            source,
            _KIND_CODE[heuristic],
            threshold,
            rng,
        )
    return _pure.run_trial(topo, kg, source, heuristic, threshold, rng)


def batch_delivery_kernel(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float,
    n_trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received-node counts over repeated cascades on a fixed instance."""
    if _active == "cython":
        return _core.batch_delivery(
            kg.indptr,
            kg.indices,
            topo.link_prob,
            source,
            _KIND_CODE[heuristic],
            threshold,
            n_trials,
            rng,
        )
    return _pure.batch_delivery(topo, kg, source, heuristic, threshold, n_trials, rng)
