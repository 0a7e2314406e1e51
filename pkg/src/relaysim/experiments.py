"""Parameter sweeps, CSV output, and gnuplot script emission.

A sweep runs one batch per (value, heuristic) cell and flattens the
aggregates into rows.  The CSV schema is stable and append-friendly:

    density,heuristic,threshold,trials,delivery_mean,delivery_std,
    tx_mean,tx_std,relay_dist_mean,mpr_size_mean,seed

(single header line; the threshold column is empty except for rows of the
threshold heuristic).  Floats are written with 6 significant digits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Callable, Sequence

from .model import Heuristic, ParameterError, SimParams
from .simengine import AggregateStats, run_batch

__all__ = [
    "SweepVariable",
    "PlotKind",
    "ResultRow",
    "DENSITY_GRID",
    "THRESHOLD_GRID",
    "CSV_HEADER",
    "run_sweep",
    "write_csv",
    "emit_gnuplot",
]

DENSITY_GRID: tuple[float, ...] = (10, 15, 20, 25, 30, 35, 40, 45, 50)
THRESHOLD_GRID: tuple[float, ...] = tuple(i / 10 for i in range(11))

CSV_HEADER = (
    "density,heuristic,threshold,trials,delivery_mean,delivery_std,"
    "tx_mean,tx_std,relay_dist_mean,mpr_size_mean,seed"
)


class SweepVariable(Enum):
    DENSITY = "density"
    THRESHOLD = "threshold"


class PlotKind(Enum):
    """What to plot: a metric (delivery ratio or transmit ratio, both as
    percentages) against the swept variable."""

    DELIVERY_VS_DENSITY = "delivery-vs-density"
    TX_VS_DENSITY = "tx-vs-density"
    DELIVERY_VS_THRESHOLD = "delivery-vs-threshold"
    TX_VS_THRESHOLD = "tx-vs-threshold"


@dataclass(frozen=True)
class ResultRow:
    """One CSV row: the aggregate of one simulation cell."""

    density: float
    heuristic: str
    threshold: float | None
    trials: int
    delivery_mean: float
    delivery_std: float
    tx_mean: float
    tx_std: float
    relay_dist_mean: float
    mpr_size_mean: float
    seed: int


def _row(params: SimParams, agg: AggregateStats) -> ResultRow:
    return ResultRow(
        density=params.density,
        heuristic=params.heuristic.value,
        threshold=params.threshold if params.heuristic is Heuristic.THRESHOLD else None,
        trials=params.trials,
        delivery_mean=agg.delivery_mean,
        delivery_std=agg.delivery_std,
        tx_mean=agg.tx_mean,
        tx_std=agg.tx_std,
        relay_dist_mean=agg.relay_dist_mean,
        mpr_size_mean=agg.mpr_size_mean,
        seed=params.seed,
    )


def run_sweep(
    base: SimParams,
    variable: SweepVariable,
    values: Sequence[float] | None = None,
    heuristics: Sequence[Heuristic] | None = None,
    jobs: int = 1,
    log: Callable[[ResultRow], None] | None = None,
) -> list[ResultRow]:
    """Run one batch per (value, heuristic) cell.

    For a density sweep the default grid is 10..50 in steps of 5 over all
    four heuristics; for a threshold sweep it is 0.0..1.0 in steps of 0.1
    over the threshold heuristic only.  Every cell reuses ``base``'s seed,
    so cells differing only in heuristic or threshold see identical
    topology/knowledge/source draws and differ purely in behavior.
    """
    if variable is SweepVariable.DENSITY:
        values = tuple(values) if values is not None else DENSITY_GRID
        if heuristics is None:
            heuristics = tuple(Heuristic)
        for d in values:
            if not d > 0:
                raise ParameterError(f"density values must be positive, got {d}")
    else:
        values = tuple(values) if values is not None else THRESHOLD_GRID
        if heuristics is None:
            heuristics = (Heuristic.THRESHOLD,)
        if any(h is not Heuristic.THRESHOLD for h in heuristics):
            raise ParameterError(
                "a threshold sweep only makes sense for the threshold heuristic"
            )
        for t in values:
            if not (0.0 <= t <= 1.0):
                raise ParameterError(f"threshold values must be in [0, 1], got {t}")
    if not values:
        raise ParameterError("sweep needs at least one value")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ParameterError("sweep values must be strictly increasing")
    if not heuristics:
        raise ParameterError("sweep needs at least one heuristic")

    rows: list[ResultRow] = []
    for value in values:
        for heuristic in heuristics:
            if variable is SweepVariable.DENSITY:
                params = replace(base, density=float(value), heuristic=heuristic)
            else:
                params = replace(
                    base, heuristic=heuristic, threshold=float(value)
                )
            row = _row(params, run_batch(params, jobs=jobs))
            rows.append(row)
            if log is not None:
                log(row)
    return rows


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_csv(rows: Sequence[ResultRow], fp: IO[str]) -> None:
    """Write header plus one line per row (6 significant digits)."""
    if not rows:
        raise ParameterError("no rows to write")
    fp.write(CSV_HEADER + "\n")
    for r in rows:
        fp.write(
            ",".join(
                (
                    _fmt(r.density),
                    r.heuristic,
                    _fmt(r.threshold) if r.threshold is not None else "",
                    str(r.trials),
                    _fmt(r.delivery_mean),
                    _fmt(r.delivery_std),
                    _fmt(r.tx_mean),
                    _fmt(r.tx_std),
                    _fmt(r.relay_dist_mean),
                    _fmt(r.mpr_size_mean),
                    str(r.seed),
                )
            )
            + "\n"
        )


# CSV column numbers (1-based, for gnuplot `using`).
_X_DENSITY, _X_THRESHOLD = 1, 3
_Y_DELIVERY, _Y_TX = 5, 7

_PLOT_SPEC = {
    PlotKind.DELIVERY_VS_DENSITY: (
        _X_DENSITY, "density (nodes per communication disk)",
        _Y_DELIVERY, "receiving nodes (%)",
    ),
    PlotKind.TX_VS_DENSITY: (
        _X_DENSITY, "density (nodes per communication disk)",
        _Y_TX, "transmitting nodes (% of receiving)",
    ),
    PlotKind.DELIVERY_VS_THRESHOLD: (
        _X_THRESHOLD, "coverage threshold",
        _Y_DELIVERY, "receiving nodes (%)",
    ),
    PlotKind.TX_VS_THRESHOLD: (
        _X_THRESHOLD, "coverage threshold",
        _Y_TX, "transmitting nodes (% of receiving)",
    ),
}


def emit_gnuplot(
    rows: Sequence[ResultRow], kind: PlotKind, csv_name: str, fp: IO[str]
) -> None:
    """Emit a gnuplot script plotting ``csv_name`` (already written).

    One curve per heuristic present in the rows; ratio metrics are scaled
    to percentages.  The kind's x variable must match the rows: plotting
    against the threshold needs threshold-heuristic rows, and plotting
    against density needs rows that do not form a threshold sweep.
    """
    if not rows:
        raise ParameterError("nothing to plot: no rows")
    x_col, x_label, y_col, y_label = _PLOT_SPEC[kind]
    densities = {r.density for r in rows}
    thresholds = {r.threshold for r in rows if r.threshold is not None}
    if x_col == _X_THRESHOLD:
        if any(r.threshold is None for r in rows):
            raise ParameterError(
                "threshold plot over rows without a threshold column"
            )
    elif len(densities) == 1 and len(thresholds) > 1:
        raise ParameterError("density plot over a threshold sweep")
    heuristics = list(dict.fromkeys(r.heuristic for r in rows))

    fp.write("# generated by relaysim; expects the CSV next to this script\n")
    fp.write('set datafile separator ","\n')
    fp.write(f'set xlabel "{x_label}"\n')
    fp.write(f'set ylabel "{y_label}"\n')
    fp.write("set yrange [0:105]\n")
    fp.write("set key bottom right\nset grid\n")
    curves = []
    for h in heuristics:
        cond = f'strcol(2) eq "{h}"'
        curves.append(
            f'"{csv_name}" every ::1 using {x_col}:({cond} ? ${y_col} * 100 : 1/0) '
            f'title "{h}" with linespoints'
        )
    fp.write("plot \\\n  " + ", \\\n  ".join(curves) + "\n")
