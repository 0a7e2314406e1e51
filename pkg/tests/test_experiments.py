import io

import pytest

from relaysim.experiments import (
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
from relaysim.model import Heuristic, ParameterError, SimParams
from relaysim.simengine import run_batch

BASE = SimParams(n_nodes=30, density=12.0, trials=2, seed=4)


def sample_rows():
    return [
        ResultRow(10.0, "original", None, 500, 0.671234, 0.05, 0.31, 0.04,
                  66.125, 3.5, 0),
        ResultRow(10.0, "score", None, 500, 0.812345678, 0.04, 0.29, 0.03,
                  64.0, 3.25, 0),
        ResultRow(20.0, "original", None, 500, 0.70, 0.05, 0.25, 0.03,
                  67.5, 4.0, 0),
        ResultRow(20.0, "score", None, 500, 0.86, 0.04, 0.22, 0.02,
                  65.9, 3.75, 0),
    ]


def threshold_rows():
    return [
        ResultRow(30.0, "threshold", t, 500, 0.9 + t / 20, 0.01,
                  0.25 + t / 10, 0.02, 66.0, 13.0, 0)
        for t in (0.0, 0.5, 1.0)
    ]


class TestGrids:
    def test_density_grid(self):
        assert DENSITY_GRID == (10, 15, 20, 25, 30, 35, 40, 45, 50)

    def test_threshold_grid(self):
        assert len(THRESHOLD_GRID) == 11
        assert THRESHOLD_GRID[0] == 0.0
        assert THRESHOLD_GRID[-1] == 1.0


class TestRunSweep:
    def test_single_cell_matches_run_batch(self):
        rows = run_sweep(BASE, SweepVariable.DENSITY, values=[12.0],
                         heuristics=[Heuristic.ORIGINAL])
        assert len(rows) == 1
        agg = run_batch(BASE)
        r = rows[0]
        assert (r.delivery_mean, r.delivery_std) == (agg.delivery_mean,
                                                     agg.delivery_std)
        assert (r.tx_mean, r.tx_std) == (agg.tx_mean, agg.tx_std)
        assert r.relay_dist_mean == agg.relay_dist_mean
        assert r.mpr_size_mean == agg.mpr_size_mean
        assert r.heuristic == "original"
        assert r.threshold is None
        assert r.trials == 2 and r.seed == 4 and r.density == 12.0

    def test_row_count_and_order(self):
        rows = run_sweep(BASE, SweepVariable.DENSITY, values=[10.0, 14.0],
                         heuristics=[Heuristic.ORIGINAL, Heuristic.SCORE])
        assert [(r.density, r.heuristic) for r in rows] == [
            (10.0, "original"), (10.0, "score"),
            (14.0, "original"), (14.0, "score"),
        ]

    def test_threshold_sweep_defaults(self):
        rows = run_sweep(BASE, SweepVariable.THRESHOLD,
                         values=[0.0, 0.5, 1.0])
        assert [r.heuristic for r in rows] == ["threshold"] * 3
        assert [r.threshold for r in rows] == [0.0, 0.5, 1.0]

    def test_threshold_rows_carry_threshold_column(self):
        rows = run_sweep(BASE, SweepVariable.DENSITY, values=[12.0],
                         heuristics=[Heuristic.THRESHOLD])
        assert rows[0].threshold == BASE.threshold

    def test_log_callback_sees_rows_in_order(self):
        seen = []
        rows = run_sweep(BASE, SweepVariable.DENSITY, values=[10.0, 14.0],
                         heuristics=[Heuristic.ORIGINAL], log=seen.append)
        assert seen == rows

    def test_rejects_bad_inputs(self):
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.DENSITY, values=[])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.DENSITY, values=[15.0, 10.0])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.DENSITY, values=[10.0, 10.0])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.DENSITY, values=[-5.0])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.THRESHOLD, values=[0.5, 1.2])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.THRESHOLD, values=[0.5],
                      heuristics=[Heuristic.ORIGINAL])
        with pytest.raises(ParameterError):
            run_sweep(BASE, SweepVariable.DENSITY, values=[10.0],
                      heuristics=[])


class TestWriteCsv:
    def test_header_is_stable(self):
        assert CSV_HEADER == (
            "density,heuristic,threshold,trials,delivery_mean,delivery_std,"
            "tx_mean,tx_std,relay_dist_mean,mpr_size_mean,seed"
        )

    def test_round_trip(self):
        rows = sample_rows()
        buf = io.StringIO()
        write_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(rows)
        first = lines[1].split(",")
        assert first[0] == "10"
        assert first[1] == "original"
        assert first[2] == ""  # no threshold for the original heuristic
        assert first[3] == "500"
        assert first[4] == "0.671234"
        assert float(first[8]) == 66.125

    def test_six_significant_digits(self):
        buf = io.StringIO()
        write_csv(sample_rows()[1:2], buf)
        fields = buf.getvalue().splitlines()[1].split(",")
        assert fields[4] == "0.812346"  # rounded, not truncated

    def test_threshold_column_present_for_threshold_rows(self):
        buf = io.StringIO()
        write_csv(threshold_rows(), buf)
        values = [ln.split(",")[2] for ln in buf.getvalue().splitlines()[1:]]
        assert values == ["0", "0.5", "1"]

    def test_empty_rows_rejected(self):
        with pytest.raises(ParameterError):
            write_csv([], io.StringIO())

    def test_byte_identical_output(self):
        a, b = io.StringIO(), io.StringIO()
        write_csv(sample_rows(), a)
        write_csv(sample_rows(), b)
        assert a.getvalue() == b.getvalue()

    def test_sweep_rerun_writes_identical_bytes(self):
        bufs = []
        for _ in range(2):
            rows = run_sweep(BASE, SweepVariable.DENSITY, values=[12.0],
                             heuristics=[Heuristic.EXPECTED])
            buf = io.StringIO()
            write_csv(rows, buf)
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]


class TestEmitGnuplot:
    @pytest.mark.parametrize("kind,x_col,y_col", [
        (PlotKind.DELIVERY_VS_DENSITY, 1, 5),
        (PlotKind.TX_VS_DENSITY, 1, 7),
    ])
    def test_density_kinds(self, kind, x_col, y_col):
        buf = io.StringIO()
        emit_gnuplot(sample_rows(), kind, "results.csv", buf)
        script = buf.getvalue()
        assert f"using {x_col}:" in script
        assert f"${y_col} * 100" in script
        assert '"results.csv"' in script
        assert script.count("with linespoints") == 2  # original + score
        assert 'strcol(2) eq "original"' in script
        assert "set yrange [0:105]" in script

    @pytest.mark.parametrize("kind,y_col", [
        (PlotKind.DELIVERY_VS_THRESHOLD, 5),
        (PlotKind.TX_VS_THRESHOLD, 7),
    ])
    def test_threshold_kinds(self, kind, y_col):
        buf = io.StringIO()
        emit_gnuplot(threshold_rows(), kind, "sweep.csv", buf)
        script = buf.getvalue()
        assert "using 3:" in script
        assert f"${y_col} * 100" in script
        assert script.count("with linespoints") == 1

    def test_axis_labels_are_percentages(self):
        buf = io.StringIO()
        emit_gnuplot(sample_rows(), PlotKind.DELIVERY_VS_DENSITY,
                     "r.csv", buf)
        assert 'set ylabel "receiving nodes (%)"' in buf.getvalue()
        buf = io.StringIO()
        emit_gnuplot(sample_rows(), PlotKind.TX_VS_DENSITY, "r.csv", buf)
        assert 'set ylabel "transmitting nodes (% of receiving)"' in buf.getvalue()

    def test_no_absolute_paths(self):
        buf = io.StringIO()
        emit_gnuplot(sample_rows(), PlotKind.TX_VS_DENSITY, "data.csv", buf)
        for token in buf.getvalue().split('"'):
            assert not token.startswith("/")

    def test_threshold_kind_needs_threshold_rows(self):
        with pytest.raises(ParameterError):
            emit_gnuplot(sample_rows(), PlotKind.DELIVERY_VS_THRESHOLD,
                         "r.csv", io.StringIO())

    def test_density_kind_rejects_threshold_sweep(self):
        with pytest.raises(ParameterError):
            emit_gnuplot(threshold_rows(), PlotKind.DELIVERY_VS_DENSITY,
                         "r.csv", io.StringIO())

    def test_empty_rows_rejected(self):
        with pytest.raises(ParameterError):
            emit_gnuplot([], PlotKind.DELIVERY_VS_DENSITY, "r.csv",
                         io.StringIO())

    def test_mixed_density_threshold_rows_plot_by_density(self):
        rows = [
            ResultRow(10.0, "threshold", 0.5, 100, 0.9, 0.01, 0.3, 0.02,
                      66.0, 12.0, 0),
            ResultRow(20.0, "threshold", 0.5, 100, 0.95, 0.01, 0.28, 0.02,
                      66.0, 13.0, 0),
        ]
        buf = io.StringIO()
        emit_gnuplot(rows, PlotKind.DELIVERY_VS_DENSITY, "r.csv", buf)
        assert "using 1:" in buf.getvalue()
