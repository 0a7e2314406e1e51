"""Pure-Python engine kernels (fallback when the compiled core is absent).

Semantics here define the simulator; the compiled kernels in ``_core`` must
reproduce every decision bit-for-bit.  The contract that makes that
possible:

* selection consumes no randomness and scans candidates/targets in
  ascending node-id order with identical floating-point expression shapes;
* each transmission consumes exactly N uniform doubles (one per node, in
  node order) whether or not the draw matters, so random streams stay
  aligned between backends;
* newly designated relays enter the FIFO queue in ascending node id within
  a transmission.
"""

from __future__ import annotations

import math

import numpy as np

from . import mpr
from .model import Heuristic, KnowledgeGraph, Topology
from .propagation import view_from_arrays

NAME = "python"


def select_arrays(
    kg: KnowledgeGraph,
    link_prob: np.ndarray,
    ego: int,
    heuristic: Heuristic,
    threshold: float,
) -> tuple[np.ndarray, int, np.ndarray]:
    """Relay selection returning (relays, n_mandatory, residual) arrays."""
    view = view_from_arrays(kg, link_prob, ego)
    if heuristic is Heuristic.THRESHOLD:
        sel = mpr.select_threshold(view, threshold)
    else:
        sel = mpr.select(view, heuristic)
    relays = np.asarray(sel.relays, dtype=np.int32)
    residual = np.asarray(sorted(sel.residual_uncovered), dtype=np.int32)
    return relays, len(sel.mandatory), residual


def run_trial(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One broadcast cascade.

    Returns (received uint8[N], tx_order int32[T], mpr_sizes int32[T],
    relay_dists float64[sum of sizes]).
    """
    n = topo.n_nodes
    link_prob = topo.link_prob
    positions = topo.positions
    received = np.zeros(n, dtype=np.uint8)
    received[source] = 1
    queue = [source]
    head = 0
    tx_order: list[int] = []
    mpr_sizes: list[int] = []
    dists: list[float] = []
    while head < len(queue):
        s = queue[head]
        head += 1
        relays, _, _ = select_arrays(kg, link_prob, s, heuristic, threshold)
        tx_order.append(s)
        mpr_sizes.append(len(relays))
        for r in relays:
            dx = positions[s, 0] - positions[r, 0]
            dy = positions[s, 1] - positions[r, 1]
            dists.append(math.sqrt(dx * dx + dy * dy))
        designated = set(int(r) for r in relays)
        draws = rng.random(n)  # one double per node, always
        delivered = (draws < link_prob[s]) & (received == 0)
        for w in np.nonzero(delivered)[0]:
            w = int(w)
            received[w] = 1
            if w in designated:
                queue.append(w)
    return (
        received,
        np.asarray(tx_order, dtype=np.int32),
        np.asarray(mpr_sizes, dtype=np.int32),
        np.asarray(dists, dtype=np.float64),
    )


def batch_delivery(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float,
    n_trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received-node counts for ``n_trials`` cascades on one fixed instance.

    Selection is deterministic per node, so designated sets are computed
    once up front; the trials then share ``rng`` sequentially.
    """
    n = topo.n_nodes
    link_prob = topo.link_prob
    designated: list[set[int]] = []
    for s in range(n):
        relays, _, _ = select_arrays(kg, link_prob, s, heuristic, threshold)
        designated.append(set(int(r) for r in relays))
    counts = np.empty(n_trials, dtype=np.int64)
    for t in range(n_trials):
        received = np.zeros(n, dtype=np.uint8)
        received[source] = 1
        queue = [source]
        head = 0
        while head < len(queue):
            s = queue[head]
            head += 1
            draws = rng.random(n)
            delivered = (draws < link_prob[s]) & (received == 0)
            for w in np.nonzero(delivered)[0]:
                w = int(w)
                received[w] = 1
                if w in designated[s]:
                    queue.append(w)
        counts[t] = int(received.sum())
    return counts
