"""Command-line interface.

Subcommands:

  gen       write a topology file
  run       one simulation cell (N trials at one parameter point)
  sweep     batches over a density or threshold grid, CSV + gnuplot out
  oracle    compare Monte-Carlo delivery against the exact expectation
  selftest  quick internal consistency battery
  bench     compare compiled and pure backends

Results go to stdout as one ``key=value`` pair per line (sweep writes its
CSV there when no ``--out`` is given; its per-cell progress goes to
stderr).  Exit codes: 0 success, 2 argument/parameter error, 1 runtime
error (I/O, failed oracle/selftest).  Flags beat config-file entries,
which beat defaults; config files are plain ``key = value`` lines with
``#`` comments and the same keys as the long flags (hyphens or
underscores).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from typing import Callable

import numpy as np

from . import backend, mpr
from .experiments import (
    PlotKind,
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
    SimParams,
    Topology,
    load_topology,
    save_topology,
)
from .propagation import (
    build_knowledge,
    build_topology,
    reception_probability,
    substream,
    two_hop_view,
)
from .simengine import exact_delivery, run_batch, run_trial

_DEFAULTS = {
    "nodes": 500,
    "density": 30.0,
    "radius": 75.0,
    "alpha": 4.0,
    "model": "lns",
    "heuristic": "original",
    "threshold": 0.5,
    "trials": 500,
    "hello_ratio": 3.0,
    "seed": 0,
    "jobs": 1,
}

_CONVERTERS: dict[str, Callable[[str], object]] = {
    "nodes": int,
    "density": float,
    "radius": float,
    "alpha": float,
    "model": str,
    "heuristic": str,
    "threshold": float,
    "trials": int,
    "hello_ratio": float,
    "seed": int,
    "jobs": int,
}


def parse_config(path: str) -> dict[str, object]:
    """Parse a ``key = value`` config file into typed values."""
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower().replace("-", "_")
            value = value.strip()
            if key not in _CONVERTERS:
                raise ParameterError(
                    f"{path}:{lineno}: unknown config key {key!r} "
                    f"(valid: {', '.join(sorted(_CONVERTERS))})"
                )
            try:
                values[key] = _CONVERTERS[key](value)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("simulation parameters")
    g.add_argument("--nodes", type=int, help="number of nodes (default 500)")
    g.add_argument("--density", type=float,
                   help="expected nodes per communication disk (default 30)")
    g.add_argument("--radius", type=float, help="communication radius (default 75)")
    g.add_argument("--alpha", type=float, help="attenuation exponent (default 4)")
    g.add_argument("--model", choices=["udg", "lns"],
                   help="reception model (default lns)")
    g.add_argument("--heuristic", choices=[h.value for h in Heuristic],
                   help="relay selection heuristic (default original)")
    g.add_argument("--threshold", type=float,
                   help="coverage threshold for the threshold heuristic (default 0.5)")
    g.add_argument("--trials", type=int, help="trials per cell (default 500)")
    g.add_argument("--hello-ratio", dest="hello_ratio", type=float,
                   help="HELLO emissions per table lifetime (default 3)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--jobs", type=int, help="worker processes (default 1)")
    g.add_argument("--config", metavar="FILE",
                   help="key = value file; flags override its entries")


def _merged(ns: argparse.Namespace) -> dict[str, object]:
    merged = dict(_DEFAULTS)
    if getattr(ns, "config", None):
        merged.update(parse_config(ns.config))
    for key in _DEFAULTS:
        flag = getattr(ns, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _params(ns: argparse.Namespace) -> tuple[SimParams, int]:
    m = _merged(ns)
    params = SimParams(
        n_nodes=int(m["nodes"]),
        density=float(m["density"]),
        model=PhysicalModel(
            kind=ModelKind(str(m["model"])),
            radius=float(m["radius"]),
            alpha=float(m["alpha"]),
        ),
        heuristic=Heuristic(str(m["heuristic"])),
        threshold=float(m["threshold"]),
        trials=int(m["trials"]),
        hello_ratio=float(m["hello_ratio"]),
        seed=int(m["seed"]),
    )
    jobs = int(m["jobs"])
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    return params, jobs


# --------------------------------------------------------------------------
# subcommands


def _cmd_gen(ns: argparse.Namespace) -> int:
    params, _ = _params(ns)
    topo = build_topology(params, substream(params.seed, "topo"))
    with open(ns.out, "w", encoding="utf-8") as fp:
        save_topology(topo, fp)
    print(f"out={ns.out}")
    print(f"nodes={topo.n_nodes}")
    print(f"side={topo.side:.6g}")
    print(f"radius={params.model.radius:.6g}")
    print(f"model={params.model.kind.value}")
    return 0


def _print_summary(params: SimParams, agg) -> None:
    print(f"model={params.model.kind.value}")
    print(f"heuristic={params.heuristic.value}")
    if params.heuristic is Heuristic.THRESHOLD:
        print(f"threshold={params.threshold:.6g}")
    print(f"density={params.density:.6g}")
    print(f"trials={params.trials}")
    print(f"delivery_mean={agg.delivery_mean:.6f}")
    print(f"delivery_std={agg.delivery_std:.6f}")
    print(f"tx_mean={agg.tx_mean:.6f}")
    print(f"tx_std={agg.tx_std:.6f}")
    print(f"relay_dist_mean={agg.relay_dist_mean:.6f}")
    print(f"mpr_size_mean={agg.mpr_size_mean:.6f}")
    print(f"seed={params.seed}")


def _cmd_run(ns: argparse.Namespace) -> int:
    params, jobs = _params(ns)
    topology: Topology | None = None
    if ns.topology:
        with open(ns.topology, encoding="utf-8") as fp:
            topology = load_topology(fp)
        params = replace(
            params,
            n_nodes=topology.n_nodes,
            model=topology.model,
            density=topology.n_nodes
            * np.pi
            * topology.model.radius**2
            / topology.side**2,
        )
    agg = run_batch(params, jobs=jobs, topology=topology)
    _print_summary(params, agg)
    if ns.out:
        from .experiments import ResultRow

        row = ResultRow(
            density=params.density,
            heuristic=params.heuristic.value,
            threshold=params.threshold
            if params.heuristic is Heuristic.THRESHOLD
            else None,
            trials=params.trials,
            delivery_mean=agg.delivery_mean,
            delivery_std=agg.delivery_std,
            tx_mean=agg.tx_mean,
            tx_std=agg.tx_std,
            relay_dist_mean=agg.relay_dist_mean,
            mpr_size_mean=agg.mpr_size_mean,
            seed=params.seed,
        )
        with open(ns.out, "w", encoding="utf-8") as fp:
            write_csv([row], fp)
    return 0


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad {what} list {text!r}: {exc}") from exc


def _cmd_sweep(ns: argparse.Namespace) -> int:
    params, jobs = _params(ns)
    if ns.variable:
        variable = SweepVariable(ns.variable)
    else:
        # `sweep --heuristic threshold` on its own means a sweep over the
        # threshold grid; anything else defaults to a density sweep.
        variable = (
            SweepVariable.THRESHOLD
            if params.heuristic is Heuristic.THRESHOLD
            else SweepVariable.DENSITY
        )
    values = _parse_float_list(ns.values, "values") if ns.values else None
    heuristics = None
    if ns.heuristics and ns.heuristics != "all":
        try:
            heuristics = [Heuristic(tok.strip()) for tok in ns.heuristics.split(",")]
        except ValueError as exc:
            raise ParameterError(f"bad heuristic list {ns.heuristics!r}") from exc
    elif not ns.heuristics and ns.heuristic is not None:
        # An explicit --heuristic narrows the sweep to that heuristic.
        heuristics = [params.heuristic]
    if ns.plot and not ns.out:
        raise ParameterError("--plot requires --out (the script references the CSV)")
    rows = run_sweep(
        params,
        variable,
        values=values,
        heuristics=heuristics,
        jobs=jobs,
        log=lambda row: print(
            f"density={row.density:.6g} heuristic={row.heuristic}"
            + (f" threshold={row.threshold:.6g}" if row.threshold is not None else "")
            + f" delivery={row.delivery_mean:.6g} tx={row.tx_mean:.6g}"
            f" relay_dist={row.relay_dist_mean:.6g}",
            file=sys.stderr,
        ),
    )
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fp:
            write_csv(rows, fp)
    else:
        write_csv(rows, sys.stdout)
    if ns.plot:
        kind = PlotKind(f"{ns.plot_kind}-vs-{variable.value}")
        with open(ns.plot, "w", encoding="utf-8") as fp:
            # Reference the CSV by name only so the script stays portable.
            emit_gnuplot(rows, kind, os.path.basename(ns.out), fp)
    return 0


def _cmd_oracle(ns: argparse.Namespace) -> int:
    if ns.nodes is None:
        ns.nodes = 6  # exact enumeration wants a small instance
    params, _ = _params(ns)
    if params.n_nodes > 10:
        raise ParameterError(
            "oracle instances are capped at 10 nodes; pass --nodes <= 10"
        )
    topo = build_topology(params, substream(params.seed, "topo"))
    kg = build_knowledge(topo, params, substream(params.seed, "knowledge"))
    source = ns.source
    if not (0 <= source < params.n_nodes):
        raise ParameterError(f"source {source} out of range")
    exact = exact_delivery(topo, kg, source, params.heuristic, params.threshold)
    counts = backend.batch_delivery_kernel(
        topo, kg, source, params.heuristic, params.threshold,
        ns.oracle_trials, substream(params.seed, "oracle"),
    )
    mc = float(counts.mean()) / params.n_nodes
    # Standard error of the mean per-trial delivery ratio.
    se = float(np.std(counts / params.n_nodes)) / np.sqrt(ns.oracle_trials)
    limit = 4.0 * max(se, 1e-12)
    diff = abs(mc - exact)
    verdict = "PASS" if diff <= limit else "FAIL"
    print(f"exact={exact:.6f}")
    print(f"monte_carlo={mc:.6f}")
    print(f"gap={diff:.6f}")
    print(f"limit={limit:.6f}")
    print(f"trials={ns.oracle_trials}")
    print(f"verdict={verdict}")
    return 0 if verdict == "PASS" else 1


def _check(name: str, ok: bool, failures: list[str]) -> None:
    print(f"{'ok' if ok else 'FAIL'} {name}")
    if not ok:
        failures.append(name)


def _cmd_selftest(ns: argparse.Namespace) -> int:
    failures: list[str] = []
    rng = np.random.default_rng

    # Reception boundary values.
    lns = PhysicalModel(ModelKind.LOGNORMAL, 75.0, 4.0)
    udg = PhysicalModel(ModelKind.UNIT_DISK, 75.0)
    _check(
        "reception-boundaries",
        reception_probability(0.0, lns) == 1.0
        and reception_probability(75.0, lns) == 0.5
        and reception_probability(150.0, lns) == 0.0
        and reception_probability(151.0, lns) == 0.0
        and reception_probability(75.0, udg) == 1.0
        and reception_probability(75.0001, udg) == 0.0,
        failures,
    )

    # Hand-checkable selection: u=0 knows 1..4; advertised two-hop nodes
    # 5..8; nodes 1 and 3 (unique coverer of 5,6 / best coverage) expected.
    n = 9
    edges = [(0, 1), (0, 2), (0, 3), (0, 4)]
    edges += [(1, 0), (1, 5), (1, 6)]
    edges += [(2, 0), (2, 7)]
    edges += [(3, 0), (3, 7), (3, 8)]
    edges += [(4, 0), (4, 8)]
    kg = KnowledgeGraph.from_edges(n, edges)
    prob = np.full((n, n), 0.5)
    np.fill_diagonal(prob, 0.0)
    topo = Topology(
        model=udg, side=100.0, positions=np.zeros((n, 2)), link_prob=prob
    )
    view = two_hop_view(kg, topo, 0)
    sel = mpr.select_original(view)
    _check("selection-example", sel.relays == (1, 3), failures)
    _check(
        "tau-zero-mandatory",
        mpr.select_threshold(view, 0.0).relays == tuple(sorted(sel.mandatory)),
        failures,
    )

    # Coverage property on random instances.
    ok = True
    params = SimParams(n_nodes=40, density=12.0, trials=1, seed=7)
    for i in range(10):
        t = build_topology(params, rng(100 + i))
        g = build_knowledge(t, params, rng(200 + i))
        for ego in range(0, 40, 7):
            v = two_hop_view(g, t, ego)
            s = mpr.select_score(v)
            covered = set()
            for r in s.relays:
                covered.update(w for w, _ in v.two_hop[r])
            ok = ok and not s.residual_uncovered
            ok = ok and v.uncovered_init <= covered
            ok = ok and set(s.relays) <= set(v.one_hop_ids())
            thr = mpr.select_threshold(v, 0.7)
            for w in v.uncovered_init - thr.residual_uncovered:
                ok = ok and mpr.coverage_level(v, thr.relays, w) >= 0.7 - 1e-12
    _check("coverage-properties", ok, failures)

    # Trial invariants: transmitted within received, received reachable.
    ok = True
    params = SimParams(n_nodes=60, density=10.0, trials=1, seed=3)
    for k in range(10):
        t = build_topology(params, rng(300 + k))
        g = build_knowledge(t, params, rng(400 + k))
        st = run_trial(t, g, k % 60, Heuristic.SCORE, 0.5, rng(500 + k))
        ok = ok and st.transmitted <= st.received
        ok = ok and st.source in st.transmitted
        reach = {st.source}
        frontier = [st.source]
        adj = t.link_prob > 0
        while frontier:
            nxt = []
            for u in frontier:
                for w in np.nonzero(adj[u])[0]:
                    if int(w) not in reach:
                        reach.add(int(w))
                        nxt.append(int(w))
            frontier = nxt
        ok = ok and st.received <= reach
    _check("trial-invariants", ok, failures)

    # Determinism of batches.
    params = SimParams(n_nodes=50, density=10.0, trials=5, seed=11)
    _check("determinism", run_batch(params) == run_batch(params), failures)

    # Backend agreement, if the compiled core is present.
    if len(backend.available_backends()) > 1:
        params = SimParams(n_nodes=50, density=10.0, trials=1, seed=13)
        t = build_topology(params, rng(600))
        g = build_knowledge(t, params, rng(601))
        ok = True
        for ego in range(0, 50, 11):
            with backend.use_backend("cython"):
                a = backend.select_arrays(g, t.link_prob, ego, Heuristic.EXPECTED, 0.5)
            with backend.use_backend("python"):
                b = backend.select_arrays(g, t.link_prob, ego, Heuristic.EXPECTED, 0.5)
            ok = ok and np.array_equal(a[0], b[0]) and a[1] == b[1]
        with backend.use_backend("cython"):
            sa = run_trial(t, g, 0, Heuristic.THRESHOLD, 0.6, rng(602))
        with backend.use_backend("python"):
            sb = run_trial(t, g, 0, Heuristic.THRESHOLD, 0.6, rng(602))
        ok = ok and sa == sb
        _check("backend-agreement", ok, failures)

    # Monte-Carlo vs exact expectation on a small instance.
    params = SimParams(n_nodes=6, density=8.0, trials=1, seed=21)
    t = build_topology(params, substream(21, "topo"))
    g = build_knowledge(t, params, substream(21, "knowledge"))
    exact = exact_delivery(t, g, 0, Heuristic.ORIGINAL, 0.5)
    counts = backend.batch_delivery_kernel(
        t, g, 0, Heuristic.ORIGINAL, 0.5, 20000, substream(21, "oracle")
    )
    mc = float(counts.mean()) / 6
    se = float(np.std(counts / 6)) / np.sqrt(20000)
    _check("oracle-agreement", abs(mc - exact) <= 4 * max(se, 1e-12), failures)

    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return 1
    print("all checks passed")
    return 0


def _cmd_bench(ns: argparse.Namespace) -> int:
    params, _ = _params(ns)
    topo = build_topology(params, substream(params.seed, "topo"))
    kg = build_knowledge(topo, params, substream(params.seed, "knowledge"))
    n = params.n_nodes
    results = []
    for name in backend.available_backends():
        with backend.use_backend(name):
            t0 = time.perf_counter()
            for _ in range(ns.reps):
                for ego in range(n):
                    backend.select_arrays(
                        kg, topo.link_prob, ego, params.heuristic, params.threshold
                    )
            t_select = time.perf_counter() - t0
            sel_rate = ns.reps * n / t_select

            cascade_rng = substream(params.seed, "bench")
            t0 = time.perf_counter()
            for k in range(ns.reps):
                backend.run_trial_kernel(
                    topo, kg, k % n, params.heuristic, params.threshold, cascade_rng
                )
            t_trial = time.perf_counter() - t0
            trial_rate = ns.reps / t_trial
            results.append((name, sel_rate, trial_rate))
            print(
                f"backend={name} selections/s={sel_rate:,.0f} trials/s={trial_rate:,.1f}"
            )
    if len(results) == 2:
        print(
            f"speedup: selection {results[0][1] / results[1][1]:.1f}x, "
            f"full trial {results[0][2] / results[1][2]:.1f}x"
        )
    else:
        print("compiled backend not built; nothing to compare")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysim",
        description="Monte-Carlo simulator of multipoint-relay broadcast "
        "in wireless ad hoc networks",
    )
    parser.add_argument(
        "--backend-info", action="store_true",
        help="print the active engine backend and exit",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("gen", help="generate and write a topology file")
    _add_common(p)
    p.add_argument("--out", required=True, metavar="FILE", help="output path")
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("run", help="run one simulation cell")
    _add_common(p)
    p.add_argument("--topology", metavar="FILE",
                   help="fixed topology file (otherwise drawn per trial)")
    p.add_argument("--out", metavar="FILE",
                   help="also write the aggregate as a CSV row")
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("sweep", help="sweep density or threshold")
    _add_common(p)
    p.add_argument("--variable", choices=["density", "threshold"],
                   help="sweep axis (default: threshold when --heuristic "
                        "is threshold, else density)")
    p.add_argument("--values", metavar="V1,V2,...",
                   help="comma-separated grid (default: 10..50 step 5 for "
                        "density, 0..1 step 0.1 for threshold)")
    p.add_argument("--heuristics", metavar="H1,H2,...|all",
                   help="heuristics to run (default: all for density sweeps)")
    p.add_argument("--out", metavar="FILE",
                   help="CSV destination (default: stdout)")
    p.add_argument("--plot", metavar="FILE",
                   help="write a gnuplot script referencing the --out CSV")
    p.add_argument("--plot-kind", choices=["delivery", "tx"],
                   default="delivery",
                   help="metric the script plots (default delivery)")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser(
        "oracle", help="compare Monte-Carlo against the exact expectation"
    )
    _add_common(p)
    p.add_argument("--source", type=int, default=0,
                   help="broadcast source id (default 0)")
    p.add_argument("--oracle-trials", type=int, default=100000,
                   help="Monte-Carlo trials (default 100000)")
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("selftest", help="quick internal consistency battery")
    p.set_defaults(handler=_cmd_selftest)

    p = sub.add_parser("bench", help="compare compiled and pure backends")
    _add_common(p)
    p.add_argument("--reps", type=int, default=20,
                   help="repetitions per measurement (default 20)")
    p.set_defaults(handler=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.backend_info:
        print(f"backend={backend.backend_name()} "
              f"available={','.join(backend.available_backends())}")
        return 0
    if not getattr(ns, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return ns.handler(ns)
    except (ParameterError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
