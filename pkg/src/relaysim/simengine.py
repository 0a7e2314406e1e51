"""Broadcast trials, batch orchestration, and the exact small-instance oracle.

One trial: draw a topology, draw the knowledge graph, pick a uniform
source, then run the cascade.  The source always transmits; every other
node retransmits exactly once iff the first copy it ever receives came
from a sender that designated it as a relay.  Reception of each
transmission is an independent Bernoulli draw per potential receiver.

Each trial k of a batch gets its own substreams ("trial:k/topo",
"trial:k/knowledge", "trial:k/source", "trial:k/cascade"), which makes
every trial reproducible in isolation and keeps results independent of
how trials are distributed over worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend
from .model import (
    Heuristic,
    KnowledgeGraph,
    ParameterError,
    SimParams,
    Topology,
)
from .propagation import build_knowledge, build_topology, substream

__all__ = [
    "TrialStats",
    "AggregateStats",
    "run_trial",
    "run_batch",
    "exact_delivery",
]

_EXACT_MAX_NODES = 10


@dataclass(frozen=True)
class TrialStats:
    """Outcome of one broadcast trial."""

    source: int
    n_nodes: int
    received: frozenset[int]
    transmitted: frozenset[int]
    relay_distances: tuple[float, ...]
    mpr_sizes: tuple[int, ...]

    @property
    def delivery_ratio(self) -> float:
        """Fraction of all nodes that received the packet (source included)."""
        return len(self.received) / self.n_nodes

    @property
    def tx_ratio(self) -> float:
        """Transmitting nodes as a fraction of receiving nodes."""
        return len(self.transmitted) / len(self.received)


@dataclass(frozen=True)
class AggregateStats:
    """Batch aggregates.

    Delivery/transmit statistics are per-trial means and population
    standard deviations; ``relay_dist_mean`` and ``mpr_size_mean`` are
    weighted over every (transmitter, relay) pair / every transmission in
    the whole batch.  ``relay_dist_mean`` is 0.0 when no relay was ever
    selected.
    """

    trials: int
    delivery_mean: float
    delivery_std: float
    tx_mean: float
    tx_std: float
    relay_dist_mean: float
    mpr_size_mean: float


def run_trial(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float,
    rng: np.random.Generator,
) -> TrialStats:
    """Run one cascade on an explicit instance."""
    n = topo.n_nodes
    if kg.n_nodes != n:
        raise ParameterError("knowledge graph and topology disagree on node count")
    if not (0 <= source < n):
        raise ParameterError(f"source {source} out of range")
    if not (0.0 <= threshold <= 1.0):
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    received, tx_order, mpr_sizes, dists = backend.run_trial_kernel(
        topo, kg, source, heuristic, threshold, rng
    )
    return TrialStats(
        source=source,
        n_nodes=n,
        received=frozenset(int(w) for w in np.nonzero(received)[0]),
        transmitted=frozenset(int(v) for v in tx_order),
        relay_distances=tuple(float(d) for d in dists),
        mpr_sizes=tuple(int(m) for m in mpr_sizes),
    )


def _trial_reduced(
    params: SimParams, k: int, topo: Topology | None
) -> tuple[float, float, float, int, int, int]:
    """One batch trial, reduced to (delivery, tx, dist_sum, dist_n, mpr_sum, mpr_n)."""
    seed = params.seed
    if topo is None:
        topo = build_topology(params, substream(seed, f"trial:{k}/topo"))
    kg = build_knowledge(topo, params, substream(seed, f"trial:{k}/knowledge"))
    source = int(substream(seed, f"trial:{k}/source").integers(params.n_nodes))
    received, tx_order, mpr_sizes, dists = backend.run_trial_kernel(
        topo, kg, source, params.heuristic, params.threshold,
        substream(seed, f"trial:{k}/cascade"),
    )
    n_received = int(received.sum())
    return (
        n_received / params.n_nodes,
        tx_order.shape[0] / n_received,
        float(dists.sum()),
        int(dists.shape[0]),
        int(mpr_sizes.sum()),
        int(mpr_sizes.shape[0]),
    )


_worker_topo: Topology | None = None


def _init_worker(topo: Topology | None) -> None:
    global _worker_topo
    _worker_topo = topo


def _trial_reduced_star(args: tuple[SimParams, int]):
    params, k = args
    return _trial_reduced(params, k, _worker_topo)


def run_batch(
    params: SimParams, jobs: int = 1, topology: Topology | None = None
) -> AggregateStats:
    """Run ``params.trials`` independent trials and aggregate.

    With ``topology`` given, all trials share that fixed placement and
    only knowledge/source/cascade are redrawn per trial; otherwise each
    trial draws a fresh topology.  Results are identical for any ``jobs``
    value: trial k's randomness depends only on (seed, k), and reduction
    always happens in trial order.
    """
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    if topology is not None and topology.n_nodes != params.n_nodes:
        raise ParameterError(
            f"topology has {topology.n_nodes} nodes, params say {params.n_nodes}"
        )
    if jobs == 1:
        reduced = [
            _trial_reduced(params, k, topology) for k in range(params.trials)
        ]
    else:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(topology,)
        ) as pool:
            args = [(params, k) for k in range(params.trials)]
            chunk = max(1, params.trials // (jobs * 8))
            reduced = list(pool.map(_trial_reduced_star, args, chunksize=chunk))
    deliveries = np.array([r[0] for r in reduced])
    tx_ratios = np.array([r[1] for r in reduced])
    dist_total = float(np.sum(np.array([r[2] for r in reduced])))
    dist_count = int(np.sum(np.array([r[3] for r in reduced], dtype=np.int64)))
    mpr_total = int(np.sum(np.array([r[4] for r in reduced], dtype=np.int64)))
    tx_count = int(np.sum(np.array([r[5] for r in reduced], dtype=np.int64)))
    return AggregateStats(
        trials=params.trials,
        delivery_mean=float(deliveries.mean()),
        delivery_std=float(deliveries.std()),
        tx_mean=float(tx_ratios.mean()),
        tx_std=float(tx_ratios.std()),
        relay_dist_mean=dist_total / dist_count if dist_count else 0.0,
        mpr_size_mean=mpr_total / tx_count,
    )


def exact_delivery(
    topo: Topology,
    kg: KnowledgeGraph,
    source: int,
    heuristic: Heuristic,
    threshold: float = 0.5,
) -> float:
    """Exact expected delivery ratio by exhaustive outcome enumeration.

    Walks every reachable (received-set, pending-queue) state of the
    cascade, branching over all reception outcomes of each transmission.
    Exponential in node count, so instances are capped at
    10 nodes — beyond that it refuses rather than crawls.
    """
    n = topo.n_nodes
    if n > _EXACT_MAX_NODES:
        raise ParameterError(
            f"exact_delivery supports at most {_EXACT_MAX_NODES} nodes, got {n}"
        )
    if not (0 <= source < n):
        raise ParameterError(f"source {source} out of range")
    link_prob = topo.link_prob
    designated: list[frozenset[int]] = []
    for s in range(n):
        relays, _, _ = backend.select_arrays(
            kg, link_prob, s, heuristic, threshold
        )
        designated.append(frozenset(int(r) for r in relays))

    memo: dict[tuple[int, tuple[int, ...]], float] = {}

    def expected_count(mask: int, queue: tuple[int, ...]) -> float:
        if not queue:
            return float(mask.bit_count())
        key = (mask, queue)
        cached = memo.get(key)
        if cached is not None:
            return cached
        s = queue[0]
        rest = queue[1:]
        certain = []
        fractional = []
        for w in range(n):
            if mask >> w & 1:
                continue
            p = link_prob[s, w]
            if p >= 1.0:
                certain.append(w)
            elif p > 0.0:
                fractional.append(w)
        total = 0.0
        for bits in range(1 << len(fractional)):
            prob = 1.0
            for i, w in enumerate(fractional):
                p = link_prob[s, w]
                prob *= p if bits >> i & 1 else 1.0 - p
            delivered = sorted(
                certain + [w for i, w in enumerate(fractional) if bits >> i & 1]
            )
            new_mask = mask
            new_queue = list(rest)
            for w in delivered:
                new_mask |= 1 << w
                if w in designated[s]:
                    new_queue.append(w)
            total += prob * expected_count(new_mask, tuple(new_queue))
        memo[key] = total
        return total

    return expected_count(1 << source, (source,)) / n
