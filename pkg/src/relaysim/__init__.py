"""Seeded Monte-Carlo simulator of multipoint-relay broadcast in static
wireless ad hoc networks, with a probabilistic (lognormal-shadowing
approximation) physical layer and four relay-selection heuristics.

Typical use::

    from relaysim import SimParams, Heuristic, run_batch
    params = SimParams(heuristic=Heuristic.SCORE, trials=200, seed=42)
    agg = run_batch(params)
    print(agg.delivery_mean)

The engine dispatches to a compiled kernel when the extension is built and
to a bit-identical pure-Python fallback otherwise (see
:mod:`relaysim.backend`).
"""

from .backend import available_backends, backend_name, use_backend
from .experiments import (
    CSV_HEADER,
    DENSITY_GRID,
    THRESHOLD_GRID,
    PlotKind,
    ResultRow,
    SweepVariable,
    emit_gnuplot,
    run_sweep,
    write_csv,
)
from .model import (
    FormatError,
    Heuristic,
    KnowledgeGraph,
    ModelKind,
    ParameterError,
    PhysicalModel,
    Point2D,
    SimParams,
    Topology,
    TwoHopView,
    density_to_side,
    distance,
    load_topology,
    save_topology,
    topology_from_positions,
)
from .mpr import (
    RelaySelection,
    additional_coverage,
    coverage_level,
    mandatory_relays,
    select,
    select_expected,
    select_original,
    select_score,
    select_threshold,
)
from .propagation import (
    build_knowledge,
    build_topology,
    neighbor_seen_probability,
    reception_probability,
    substream,
    two_hop_view,
)
from .simengine import (
    AggregateStats,
    TrialStats,
    exact_delivery,
    run_batch,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "available_backends",
    "backend_name",
    "use_backend",
    "CSV_HEADER",
    "DENSITY_GRID",
    "THRESHOLD_GRID",
    "PlotKind",
    "ResultRow",
    "SweepVariable",
    "emit_gnuplot",
    "run_sweep",
    "write_csv",
    "FormatError",
    "Heuristic",
    "KnowledgeGraph",
    "ModelKind",
    "ParameterError",
    "PhysicalModel",
    "Point2D",
    "SimParams",
    "Topology",
    "TwoHopView",
    "density_to_side",
    "distance",
    "load_topology",
    "save_topology",
    "topology_from_positions",
    "RelaySelection",
    "additional_coverage",
    "coverage_level",
    "mandatory_relays",
    "select",
    "select_expected",
    "select_original",
    "select_score",
    "select_threshold",
    "build_knowledge",
    "build_topology",
    "neighbor_seen_probability",
    "reception_probability",
    "substream",
    "two_hop_view",
    "AggregateStats",
    "TrialStats",
    "exact_delivery",
    "run_batch",
    "run_trial",
]
