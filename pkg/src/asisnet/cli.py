"""Command-line interface: generation, analysis, simulation, optimization.

Subcommands: generate, threshold, simulate, metastable, sweep, optimize,
centrality, oracle. Outputs are CSV/JSON only and carry a provenance header
(command line, seed, version); identical inputs give byte-identical files.
Exit codes: 0 success, 2 usage/validation, 3 numerical failure, 4 timeout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import (AsisError, ConvergenceError, GpInfeasibleError, GpSolverError,
                     GraphParseError, SimulationBudgetError, StateSpaceError,
                     ValidationError)
from .graphs import (Graph, degree_product, dump_edge_list, edge_betweenness,
                     eigenvector_centrality, gen_barabasi_albert, gen_erdos_renyi,
                     is_connected, load_edge_list, spectral_radius)
from .oracle import transient_mean_infected
from .params import AsisParams, homogeneous, params_from_json, require_valid
from .simulate import EVENT_NAMES, run, sweep, twin_metastable
from .threshold import (build_M, effective_cutting_rate, homogeneous_bound,
                        is_irreducible, lambda_max)
from .optimize import (CostModel, FixedFamily, TunableFamily, build_gp,
                       centrality_report, solve_gp, verify)


def _provenance(args: argparse.Namespace) -> dict:
    argv = getattr(args, "_argv", [])
    return {
        "command": "asisnet " + " ".join(argv),
        "seed": getattr(args, "seed", None),
        "version": __version__,
    }


def _provenance_lines(args) -> list[str]:
    p = _provenance(args)
    return [f"# command: {p['command']}", f"# seed: {p['seed']}",
            f"# version: {p['version']}"]


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _emit_json(args, payload: dict, path: str | None) -> None:
    doc = {"provenance": _provenance(args)}
    doc.update(payload)
    _write_text(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _load_graph(path: str) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh.read())


def _load_params(g: Graph, args) -> AsisParams:
    if getattr(args, "params", None):
        with open(args.params) as fh:
            return params_from_json(g, fh.read())
    rates = [getattr(args, k, None) for k in ("beta", "delta", "phi", "psi")]
    if any(r is None for r in rates):
        raise ValidationError(
            ["rates required: pass --params FILE or all of --beta --delta --phi --psi"])
    return homogeneous(g, *rates)


def _parse_grid(spec: str) -> list[float]:
    """Grid spec: comma-separated values, or 'lo:hi:count' for a linear grid."""
    try:
        if ":" in spec:
            lo, hi, count = spec.split(":")
            return np.linspace(float(lo), float(hi), int(count)).tolist()
        return [float(tok) for tok in spec.split(",") if tok]
    except ValueError as exc:
        raise ValidationError([f"bad grid spec {spec!r}: {exc}"]) from exc


def _expand(value, size: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(size, float(arr))
    if arr.shape != (size,):
        raise ValidationError([f"{name} must be a scalar or a list of {size} values"])
    return arr


def _family_from_json(doc, size: int, name: str, needs_offsets: bool):
    if "fixed" in doc:
        return FixedFamily(values=_expand(doc["fixed"], size, f"{name}.fixed"))
    try:
        lower, upper = float(doc["lower"]), float(doc["upper"])
    except KeyError as exc:
        raise ValidationError([f"{name}: tunable family needs 'lower' and 'upper'"]) from exc
    exponents = _expand(doc.get("exponents", 1.0), size, f"{name}.exponents")
    offsets = None
    if needs_offsets:
        if "offsets" not in doc:
            raise ValidationError([f"{name}: tunable family needs 'offsets'"])
        offsets = _expand(doc["offsets"], size, f"{name}.offsets")
    return TunableFamily(lower=lower, upper=upper, exponents=exponents, offsets=offsets)


def cmd_generate(args) -> int:
    if args.model == "er":
        g = gen_erdos_renyi(args.n, args.p, args.seed)
    else:
        g = gen_barabasi_albert(args.n, args.m_attach, args.seed)
    text = "\n".join(_provenance_lines(args)) + "\n" + dump_edge_list(g)
    _write_text(args.out, text)
    return 0


def cmd_threshold(args) -> int:
    g = _load_graph(args.graph)
    params = _load_params(g, args)
    require_valid(g, params)
    if not is_connected(g):
        raise ValidationError(["graph must be connected"])
    tm = build_M(g, params)
    payload = {
        "lambda_max": lambda_max(tm, tol=args.tol),
        "rho": spectral_radius(g, tol=args.tol),
        "irreducible": bool(is_irreducible(g)),
    }
    if params.is_homogeneous() and g.m > 0:
        delta, phi, psi = params.delta[0], params.phi[0], params.psi[0]
        payload["omega"] = effective_cutting_rate(phi, delta, psi)
        payload["beta_star"] = homogeneous_bound(g, delta, phi, psi, tol=args.tol)
    _emit_json(args, payload, args.out)
    return 0


def cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    params = _load_params(g, args)
    if args.infected == "all":
        infected = "all"
    else:
        try:
            infected = [int(t) for t in args.infected.split(",") if t]
        except ValueError as exc:
            raise ValidationError([f"bad --infected list {args.infected!r}"]) from exc
    result = run(g, params, horizon=args.horizon, seed=args.seed,
                 infected=infected, reinfect_count=args.reinfect_count,
                 event_cap=args.budget, collect_log=args.event_log is not None)
    stats = result.stats
    payload = {
        "t_end": stats.t_end,
        "y": stats.y,
        "z": stats.z,
        "y_integral": stats.y_integral,
        "z_integral": stats.z_integral,
        "events": stats.event_count,
        "reinfections": stats.reinfection_count,
        "final_infected": result.state.infected_count,
        "final_edges_present": result.state.edges_present,
    }
    _emit_json(args, payload, args.out)
    if args.event_log is not None:
        lines = _provenance_lines(args) + ["t,event_type,i,j"]
        log = result.log
        for k in range(len(log)):
            lines.append(f"{log.t[k]:.12g},{EVENT_NAMES[int(log.kind[k])]},"
                         f"{log.i[k]},{log.j[k]}")
        _write_text(args.event_log, "\n".join(lines) + "\n")
    return 0


def cmd_metastable(args) -> int:
    g = _load_graph(args.graph)
    params = _load_params(g, args)
    res = twin_metastable(g, params, args.seed, stop_tol=args.stop_tol,
                          burn_in=args.burn_in, check_interval=args.interval,
                          event_budget=args.budget)
    payload = {
        "y_star": res.y_star, "y1": res.y1, "y2": res.y2,
        "z1": res.z1, "z2": res.z2, "t_stop": res.t_stop,
        "metric": res.metric, "events": res.events,
        "reinfections": res.reinfections, "converged": res.converged,
    }
    _emit_json(args, payload, args.out)
    return 0


def cmd_sweep(args) -> int:
    g = _load_graph(args.graph)
    if getattr(args, "params", None):
        params = _load_params(g, args)
    else:
        if args.delta is None or args.psi is None:
            raise ValidationError(
                ["sweep needs --delta and --psi (beta and phi come from the grids)"])
        # beta and phi placeholders; every cell overrides them
        params = homogeneous(g, 1.0, args.delta, 1.0, args.psi)
    beta_grid = _parse_grid(args.beta_grid)
    phi_grid = _parse_grid(args.phi_grid)
    rows = sweep(g, params, beta_grid, phi_grid, args.seed, jobs=args.jobs,
                 stop_tol=args.stop_tol, burn_in=args.burn_in,
                 check_interval=args.interval, event_budget=args.budget)
    homog = params.is_homogeneous() and g.m > 0
    header = "beta,phi,y_star,t_stop,events,converged"
    rho = spectral_radius(g) if homog else None
    if homog:
        header += ",beta_star"
    lines = _provenance_lines(args) + [header]
    for row in rows:
        line = (f"{row.beta:.12g},{row.phi:.12g},{row.y_star:.12g},"
                f"{row.t_stop:.12g},{row.events},{str(row.converged).lower()}")
        if homog:
            delta, psi = params.delta[0], params.psi[0]
            bstar = delta * (1.0 + row.phi / (delta + psi)) / rho
            line += f",{bstar:.12g}"
        lines.append(line)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_optimize(args) -> int:
    g = _load_graph(args.graph)
    with open(args.cost) as fh:
        doc = json.load(fh)
    n, m2 = g.n, 2 * g.m
    model = CostModel(
        beta=_family_from_json(doc["beta"], n, "beta", needs_offsets=False),
        delta=_family_from_json(doc["delta"], n, "delta", needs_offsets=True),
        phi=_family_from_json(doc["phi"], m2, "phi", needs_offsets=True),
        decay_rate=float(doc["lambda_bar"]),
    )
    if args.psi is not None:
        psi = args.psi
    elif "psi" in doc:
        psi = doc["psi"]
    else:
        raise ValidationError(["psi required: pass --psi or a 'psi' field in the cost file"])
    problem = build_gp(g, psi, model)
    solution = solve_gp(problem, tol=args.tol)
    report = verify(g, problem.psi, solution, model=model)
    payload = {
        "beta": solution.beta.tolist(),
        "delta": solution.delta.tolist(),
        "phi": solution.phi.tolist(),
        "v": solution.v.tolist(),
        "cost": solution.cost,
        "lambda_max": solution.lambda_max,
        "decay_rate": solution.decay_rate,
        "iterations": solution.iterations,
        "duality_gap": solution.duality_gap,
        "verification": {
            "passed": report.passed,
            "lambda_max": report.lambda_max,
            "worst_margin": report.worst_margin,
            "messages": list(report.messages),
        },
    }
    _emit_json(args, payload, args.out_solution)
    lines = _provenance_lines(args) + ["i,j,phi_ij,deg_prod,eig_prod,betweenness"]
    for row in centrality_report(g, solution):
        lines.append(f"{row.i},{row.j},{row.phi:.12g},{row.degree_product:.12g},"
                     f"{row.eigenvector_product:.12g},{row.betweenness:.12g}")
    _write_text(args.out_centrality, "\n".join(lines) + "\n")
    return 0


def cmd_centrality(args) -> int:
    g = _load_graph(args.graph)
    dp = degree_product(g)
    eb = edge_betweenness(g)
    ev = eigenvector_centrality(g)
    lines = _provenance_lines(args) + ["i,j,deg_prod,eig_prod,betweenness"]
    for e, (i, j) in enumerate(g.edges):
        lines.append(f"{i},{j},{dp[e]:.12g},{ev[i] * ev[j]:.12g},{eb[e]:.12g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_oracle(args) -> int:
    g = _load_graph(args.graph)
    params = _load_params(g, args)
    x0 = np.ones(g.n, dtype=np.uint8)
    a0 = np.ones(g.m, dtype=np.uint8)
    mean = transient_mean_infected(g, params, (x0, a0), args.time)
    _emit_json(args, {"t": args.time, "mean_infected": mean}, args.out)
    return 0


def _add_rate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", help="JSON parameter file (heterogeneous rates)")
    p.add_argument("--beta", type=float, help="homogeneous infection rate")
    p.add_argument("--delta", type=float, help="homogeneous recovery rate")
    p.add_argument("--phi", type=float, help="homogeneous cutting rate")
    p.add_argument("--psi", type=float, help="homogeneous reconnecting rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asisnet",
        description="Adaptive-SIS epidemics: simulation, thresholds, optimal tuning")
    parser.add_argument("--config", help="JSON file with default values for the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random graph as an edge list")
    gsub = p.add_subparsers(dest="model", required=True)
    per = gsub.add_parser("er", help="Erdos-Renyi G(n, p)")
    per.add_argument("--n", type=int, required=True)
    per.add_argument("--p", type=float, required=True)
    per.add_argument("--seed", type=int, required=True)
    per.add_argument("--out", default=None)
    per.set_defaults(func=cmd_generate)
    pba = gsub.add_parser("ba", help="Barabasi-Albert preferential attachment")
    pba.add_argument("--n", type=int, required=True)
    pba.add_argument("--m-attach", type=int, required=True, dest="m_attach")
    pba.add_argument("--seed", type=int, required=True)
    pba.add_argument("--out", default=None)
    pba.set_defaults(func=cmd_generate)

    p = sub.add_parser("threshold", help="spectral threshold report as JSON")
    p.add_argument("--graph", required=True)
    _add_rate_flags(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate", help="one sample path up to a horizon")
    p.add_argument("--graph", required=True)
    _add_rate_flags(p)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--infected", default="all",
                   help="'all' or comma-separated node ids (default: all)")
    p.add_argument("--reinfect-count", type=int, default=0, dest="reinfect_count")
    p.add_argument("--budget", type=int, default=10**9)
    p.add_argument("--event-log", default=None, dest="event_log",
                   help="write the event log CSV to this path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metastable", help="twin-run metastable estimate as JSON")
    p.add_argument("--graph", required=True)
    _add_rate_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stop-tol", type=float, default=1e-4, dest="stop_tol")
    p.add_argument("--burn-in", type=float, default=100.0, dest="burn_in")
    p.add_argument("--interval", type=float, default=10.0)
    p.add_argument("--budget", type=int, default=10**9)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metastable)

    p = sub.add_parser("sweep", help="metastable estimates over a (beta, phi) grid")
    p.add_argument("--graph", required=True)
    _add_rate_flags(p)
    p.add_argument("--beta-grid", required=True, dest="beta_grid",
                   help="comma list or lo:hi:count")
    p.add_argument("--phi-grid", required=True, dest="phi_grid")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--stop-tol", type=float, default=1e-4, dest="stop_tol")
    p.add_argument("--burn-in", type=float, default=100.0, dest="burn_in")
    p.add_argument("--interval", type=float, default=10.0)
    p.add_argument("--budget", type=int, default=10**9)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="cost-optimal eradication rates")
    p.add_argument("--graph", required=True)
    p.add_argument("--cost", required=True, help="cost-model JSON file")
    p.add_argument("--psi", type=float, default=None,
                   help="reconnecting rate (overrides the cost file)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out-solution", default=None, dest="out_solution")
    p.add_argument("--out-centrality", default=None, dest="out_centrality")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("centrality", help="edge centrality table as CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("oracle", help="exact transient mean on a tiny instance")
    p.add_argument("--graph", required=True)
    _add_rate_flags(p)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    return parser


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    # subparsers parse into a fresh namespace, so defaults must be pushed down
    # into every one of them; config-supplied values also satisfy required flags
    stack = [parser]
    while stack:
        p = stack.pop()
        p.set_defaults(**config)
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
            elif action.dest in config and getattr(action, "required", False):
                action.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    probe, _ = parser.parse_known_args(argv)
    if getattr(probe, "config", None):
        with open(probe.config) as fh:
            _apply_config(parser, json.load(fh))
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except (ValidationError, GraphParseError, StateSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, GpInfeasibleError, GpSolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SimulationBudgetError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return 4
    except AsisError as exc:  # pragma: no cover - catch-all for subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
