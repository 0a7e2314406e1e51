"""Core domain types for the relay-broadcast simulator.

The vocabulary here is shared by every other module: simulation parameters,
physical-layer models, node placements, the (directed) neighbor-knowledge
graph built from HELLO exchanges, and the per-node two-hop view that relay
selection operates on.

All types are immutable after construction; builders that need randomness
take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterator

import numpy as np

__all__ = [
    "ParameterError",
    "FormatError",
    "ModelKind",
    "Heuristic",
    "PhysicalModel",
    "SimParams",
    "Point2D",
    "Topology",
    "KnowledgeGraph",
    "TwoHopView",
    "distance",
    "density_to_side",
    "topology_from_positions",
    "save_topology",
    "load_topology",
]


class ParameterError(ValueError):
    """A simulation parameter is out of its documented domain."""


class FormatError(ValueError):
    """A serialized artifact (topology file, config file) is malformed."""


class ModelKind(Enum):
    """Which reception model the physical layer uses."""

    UNIT_DISK = "udg"
    LOGNORMAL = "lns"


class Heuristic(Enum):
    """Relay-selection strategy.

    ORIGINAL ranks candidates purely by how many uncovered two-hop nodes
    they would cover; the other three weight that count by link quality
    (SCORE), by expected newly-covered nodes (EXPECTED), or keep selecting
    until every two-hop node's accumulated coverage probability passes a
    threshold (THRESHOLD).
    """

    ORIGINAL = "original"
    SCORE = "score"
    EXPECTED = "expected"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class PhysicalModel:
    """Reception model: kind plus its radius/attenuation parameters.

    ``radius`` is the nominal communication radius R.  ``alpha`` is the
    attenuation exponent used by the lognormal approximation (unused for
    the unit-disk model but carried anyway so parameter plumbing is
    uniform).
    """

    kind: ModelKind
    radius: float
    alpha: float = 4.0

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ParameterError(f"radius must be positive, got {self.radius}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class SimParams:
    """Full parameter set for one simulation cell.

    ``density`` is the expected number of nodes per communication disk;
    together with ``n_nodes`` and the radius it determines the side of the
    square deployment area (see :func:`density_to_side`).
    """

    n_nodes: int = 500
    density: float = 30.0
    model: PhysicalModel = field(
        default_factory=lambda: PhysicalModel(ModelKind.LOGNORMAL, 75.0, 4.0)
    )
    heuristic: Heuristic = Heuristic.ORIGINAL
    threshold: float = 0.5
    trials: int = 500
    hello_ratio: float = 3.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ParameterError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if not (self.density > 0 and math.isfinite(self.density)):
            raise ParameterError(f"density must be positive, got {self.density}")
        if not (0.0 <= self.threshold <= 1.0):
            raise ParameterError(
                f"threshold must be in [0, 1], got {self.threshold}"
            )
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not (self.hello_ratio > 1 and math.isfinite(self.hello_ratio)):
            # At most one HELLO per table lifetime would make discovery no
            # better than a single reception; the model assumes several.
            raise ParameterError(
                f"hello_ratio must be > 1, got {self.hello_ratio}"
            )
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")

    @property
    def side(self) -> float:
        """Side length of the deployment square for these parameters."""
        return density_to_side(self.n_nodes, self.density, self.model.radius)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float


def distance(a: Point2D, b: Point2D) -> float:
    """Euclidean distance.

    Written as sqrt(dx*dx + dy*dy) rather than hypot so scalar and
    vectorized code paths agree bit-for-bit.
    """
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def density_to_side(n_nodes: int, density: float, radius: float) -> float:
    """Side L of the square such that N*pi*R^2 / L^2 equals ``density``."""
    if n_nodes < 1:
        raise ParameterError(f"n_nodes must be >= 1, got {n_nodes}")
    if not (density > 0 and math.isfinite(density)):
        raise ParameterError(f"density must be positive, got {density}")
    if not (radius > 0 and math.isfinite(radius)):
        raise ParameterError(f"radius must be positive, got {radius}")
    return radius * math.sqrt(n_nodes * math.pi / density)


@dataclass(frozen=True, eq=False)
class Topology:
    """Node placements plus the full pairwise reception-probability matrix.

    ``link_prob[u, v]`` is the probability that a single transmission by u
    is received by v.  The matrix is symmetric with a zero diagonal; both
    arrays are frozen read-only.  Use the builders in
    :mod:`relaysim.propagation` (or :func:`topology_from_positions`) rather
    than constructing instances by hand.
    """

    model: PhysicalModel
    side: float
    positions: np.ndarray  # float64, shape (N, 2)
    link_prob: np.ndarray  # float64, shape (N, N)

    def __post_init__(self) -> None:
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        prob = np.ascontiguousarray(self.link_prob, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ParameterError(f"positions must have shape (N, 2), got {pos.shape}")
        n = pos.shape[0]
        if prob.shape != (n, n):
            raise ParameterError(
                f"link_prob must have shape ({n}, {n}), got {prob.shape}"
            )
        if np.any(np.diag(prob) != 0.0):
            raise ParameterError("link_prob diagonal must be zero")
        if not np.array_equal(prob, prob.T):
            raise ParameterError("link_prob must be symmetric")
        if np.any(prob < 0.0) or np.any(prob > 1.0):
            raise ParameterError("link_prob entries must lie in [0, 1]")
        pos.setflags(write=False)
        prob.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "link_prob", prob)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def point(self, v: int) -> Point2D:
        x, y = self.positions[v]
        return Point2D(float(x), float(y))

    def p(self, u: int, v: int) -> float:
        """Reception probability of v hearing a transmission by u."""
        return float(self.link_prob[u, v])


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    """Directed neighbor-knowledge graph from the HELLO discovery phase.

    An edge u -> v means u has v in its neighbor table (u successfully
    received at least one HELLO from v).  Stored in CSR form; neighbor
    lists are sorted ascending by node id.
    """

    n_nodes: int
    indptr: np.ndarray  # int64, shape (N + 1,)
    indices: np.ndarray  # int32, shape (E,)

    def __post_init__(self) -> None:
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int32)
        if indptr.shape != (self.n_nodes + 1,):
            raise ParameterError("indptr must have shape (n_nodes + 1,)")
        if indptr[0] != 0 or indptr[-1] != indices.shape[0]:
            raise ParameterError("indptr endpoints are inconsistent with indices")
        if np.any(np.diff(indptr) < 0):
            raise ParameterError("indptr must be non-decreasing")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterator[tuple[int, int]] | list[tuple[int, int]]) -> "KnowledgeGraph":
        """Build from an iterable of (u, v) directed pairs."""
        mat = np.zeros((n_nodes, n_nodes), dtype=bool)
        for u, v in edges:
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ParameterError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise ParameterError("self-knowledge edges are not allowed")
            mat[u, v] = True
        return cls.from_matrix(mat)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "KnowledgeGraph":
        """Build from a boolean adjacency matrix (rows are sources)."""
        n = mat.shape[0]
        np.fill_diagonal(mat, False)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(mat.sum(axis=1, dtype=np.int64), out=indptr[1:])
        indices = np.nonzero(mat)[1].astype(np.int32)
        return cls(n_nodes=n, indptr=indptr, indices=indices)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0])

    def advertised(self, v: int) -> np.ndarray:
        """Out-neighbors of v: the set v lists in its own HELLOs."""
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def out_degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def knows(self, u: int, v: int) -> bool:
        row = self.advertised(u)
        i = int(np.searchsorted(row, v))
        return i < row.shape[0] and int(row[i]) == v


@dataclass(frozen=True, eq=False)
class TwoHopView:
    """What one node can see for relay selection.

    ``one_hop`` holds (neighbor, link probability from ego) pairs sorted by
    node id.  ``two_hop`` maps each one-hop neighbor v to the list v
    advertises in its HELLOs, as (node, p(v, node)) pairs sorted by node id
    (ego itself appears here when v knows ego back).  ``uncovered_init`` is
    the initial uncovered set: every advertised node that is neither ego
    nor a one-hop neighbor.
    """

    ego: int
    one_hop: tuple[tuple[int, float], ...]
    two_hop: dict[int, tuple[tuple[int, float], ...]]
    uncovered_init: frozenset[int]

    def one_hop_ids(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.one_hop)


# --------------------------------------------------------------------------
# Topology serialization
#
# Plain-text format, one node per line:
#
#   relaysim-topology v1
#   N <count> L <side> R <radius> alpha <alpha> model <udg|lns>
#   <id> <x> <y>
#   ...
#
# Node ids must be exactly 0..N-1 in order.

_MAGIC = "relaysim-topology v1"


def topology_from_positions(
    positions: np.ndarray, side: float, model: PhysicalModel
) -> Topology:
    """Construct a topology from explicit placements.

    Computes the full link-probability matrix from the model; positions
    may lie outside [0, side] (the side is metadata for serialization).
    """
    from . import propagation  # deferred: propagation imports model too

    pos = np.ascontiguousarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ParameterError(f"positions must have shape (N, 2), got {pos.shape}")
    prob = propagation.link_matrix(pos, model)
    return Topology(model=model, side=float(side), positions=pos, link_prob=prob)


def save_topology(topo: Topology, fp: IO[str]) -> None:
    """Write a topology in the v1 text format (17 significant digits)."""
    fp.write(_MAGIC + "\n")
    fp.write(
        "N %d L %.17g R %.17g alpha %.17g model %s\n"
        % (
            topo.n_nodes,
            topo.side,
            topo.model.radius,
            topo.model.alpha,
            topo.model.kind.value,
        )
    )
    for i in range(topo.n_nodes):
        fp.write("%d %.17g %.17g\n" % (i, topo.positions[i, 0], topo.positions[i, 1]))


def load_topology(fp: IO[str]) -> Topology:
    """Parse the v1 text format; raises FormatError on any malformation."""
    lines = [ln.rstrip("\n") for ln in fp]
    if not lines or lines[0].strip() != _MAGIC:
        raise FormatError(f"missing magic line {_MAGIC!r}")
    if len(lines) < 2:
        raise FormatError("missing header line")
    fields = lines[1].split()
    if len(fields) != 10 or fields[0::2] != ["N", "L", "R", "alpha", "model"]:
        raise FormatError(f"malformed header: {lines[1]!r}")
    try:
        n = int(fields[1])
        side = float(fields[3])
        radius = float(fields[5])
        alpha = float(fields[7])
    except ValueError as exc:
        raise FormatError(f"malformed header value: {exc}") from exc
    try:
        kind = ModelKind(fields[9])
    except ValueError:
        raise FormatError(f"unknown model {fields[9]!r}") from None
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != n:
        raise FormatError(f"expected {n} node lines, got {len(body)}")
    positions = np.empty((n, 2), dtype=np.float64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"malformed node line: {ln!r}")
        try:
            node_id = int(parts[0])
            x = float(parts[1])
            y = float(parts[2])
        except ValueError as exc:
            raise FormatError(f"malformed node line {ln!r}: {exc}") from exc
        if node_id != i:
            raise FormatError(f"node ids must be 0..N-1 in order, got {node_id} at line {i}")
        positions[i, 0] = x
        positions[i, 1] = y
    try:
        model = PhysicalModel(kind=kind, radius=radius, alpha=alpha)
    except ParameterError as exc:
        raise FormatError(str(exc)) from exc
    return topology_from_positions(positions, side, model)
