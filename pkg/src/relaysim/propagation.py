"""Physical layer: reception probabilities, discovery, and topology builders.

Two reception models are supported.  The unit-disk model receives with
probability 1 within the radius and 0 beyond.  The lognormal-shadowing
approximation replaces the hard edge with a piecewise-polynomial falloff

    P(x) = 1 - (x/R)^(2a) / 2        for 0 < x <= R
    P(x) = ((2R - x)/R)^(2a) / 2     for R < x <= 2R
    P(x) = 0                         for x > 2R

with P(0) = 1 and P(R) = 1/2; ``a`` is the attenuation exponent.  Note the
support extends to twice the nominal radius.

Neighbor discovery sends HELLOs ``hello_ratio`` times per table lifetime,
so u appears in v's table with probability 1 - (1 - p)^hello_ratio where
p is the one-shot reception probability.  Each directed pair is drawn
independently, which is what makes long links likely to be unidirectional.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .model import (
    KnowledgeGraph,
    ModelKind,
    ParameterError,
    PhysicalModel,
    SimParams,
    Topology,
    TwoHopView,
)

__all__ = [
    "substream",
    "reception_probability",
    "neighbor_seen_probability",
    "link_matrix",
    "build_topology",
    "build_knowledge",
    "two_hop_view",
    "view_from_arrays",
]


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent, reproducible RNG stream for (seed, label).

    The label is hashed into the seed material, so streams for different
    purposes ("topo", "trial:7/cascade", ...) never overlap and adding a
    new label never disturbs existing ones.
    """
    tag = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed % 2**64, tag])))


def _lognormal_profile(x: np.ndarray, radius: float, alpha: float) -> np.ndarray:
    """Vectorized lognormal-approximation curve (the single source of truth)."""
    r = x / radius
    exponent = 2.0 * alpha
    inner = 1.0 - np.power(r, exponent) / 2.0
    outer = np.power(np.maximum(2.0 - r, 0.0), exponent) / 2.0
    return np.where(x <= radius, inner, np.where(x <= 2.0 * radius, outer, 0.0))


def reception_probability(x: float, model: PhysicalModel) -> float:
    """Probability that one transmission is received at distance ``x``."""
    if not (x >= 0):
        raise ParameterError(f"distance must be non-negative, got {x}")
    if model.kind is ModelKind.UNIT_DISK:
        return 1.0 if x <= model.radius else 0.0
    # Evaluate through the same vector kernel the matrix builder uses so
    # scalar and bulk paths can never drift apart.
    out = _lognormal_profile(np.array([x], dtype=np.float64), model.radius, model.alpha)
    return float(out[0])


def neighbor_seen_probability(p: float, hello_ratio: float) -> float:
    """Probability a neighbor with one-shot reception ``p`` enters the table."""
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must be in [0, 1], got {p}")
    if not (hello_ratio > 1):
        raise ParameterError(f"hello_ratio must be > 1, got {hello_ratio}")
    out = 1.0 - np.power(np.array([1.0 - p], dtype=np.float64), hello_ratio)
    return float(out[0])


def link_matrix(positions: np.ndarray, model: PhysicalModel) -> np.ndarray:
    """Full pairwise reception-probability matrix (zero diagonal)."""
    delta = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt(delta[..., 0] ** 2 + delta[..., 1] ** 2)
    if model.kind is ModelKind.UNIT_DISK:
        prob = (dist <= model.radius).astype(np.float64)
    else:
        prob = _lognormal_profile(dist, model.radius, model.alpha)
    np.fill_diagonal(prob, 0.0)
    return prob


def build_topology(params: SimParams, rng: np.random.Generator) -> Topology:
    """Place N nodes uniformly in the deployment square and derive links.

    Draws exactly one (N, 2) uniform block from ``rng`` (x in column 0),
    so placements are reproducible for a given stream regardless of model.
    """
    side = params.side
    positions = rng.random((params.n_nodes, 2)) * side
    prob = link_matrix(positions, params.model)
    return Topology(model=params.model, side=side, positions=positions, link_prob=prob)


def build_knowledge(
    topo: Topology, params: SimParams, rng: np.random.Generator
) -> KnowledgeGraph:
    """Draw the directed knowledge graph from the HELLO process.

    Edge v -> u exists iff at least one of u's HELLOs reached v, i.e. with
    probability 1 - (1 - p(u, v))^hello_ratio, independently per ordered
    pair.  Consumes exactly one (N, N) uniform block from ``rng``; the
    draw at (v, u) decides whether v learns u.
    """
    n = topo.n_nodes
    # p(u, v) is symmetric, so the seen-probability matrix indexed by
    # (knower, known) needs no transpose.
    p_seen = 1.0 - np.power(1.0 - topo.link_prob, params.hello_ratio)
    u = rng.random((n, n))
    mat = u < p_seen
    np.fill_diagonal(mat, False)
    return KnowledgeGraph.from_matrix(mat)


def two_hop_view(kg: KnowledgeGraph, topo: Topology, ego: int) -> TwoHopView:
    """Assemble what ``ego`` knows for relay selection.

    One-hop neighbors are ego's own table entries; for each, the
    advertised list is that neighbor's table (what it would publish in its
    HELLOs) together with that neighbor's link probability to each entry.
    The initial uncovered set is every advertised node that is neither ego
    nor one of ego's one-hop neighbors.
    """
    return view_from_arrays(kg, topo.link_prob, ego)


def view_from_arrays(kg: KnowledgeGraph, link_prob: np.ndarray, ego: int) -> TwoHopView:
    """Build a TwoHopView from a knowledge graph and a raw probability matrix."""
    if not (0 <= ego < kg.n_nodes):
        raise ParameterError(f"ego {ego} out of range")
    one_ids = [int(v) for v in kg.advertised(ego)]
    one_hop = tuple((v, float(link_prob[ego, v])) for v in one_ids)
    two_hop = {
        v: tuple((int(w), float(link_prob[v, int(w)])) for w in kg.advertised(v))
        for v in one_ids
    }
    one_set = set(one_ids)
    uncovered = frozenset(
        w for targets in two_hop.values() for w, _ in targets
        if w != ego and w not in one_set
    )
    return TwoHopView(
        ego=ego, one_hop=one_hop, two_hop=two_hop, uncovered_init=uncovered
    )
