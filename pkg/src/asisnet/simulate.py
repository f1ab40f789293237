"""Exact event-driven simulation of the adaptive-SIS Markov process.

Four event families drive the chain: a susceptible node i is infected at rate
beta_i times its number of infected present-neighbors; an infected node
recovers at rate delta_i; a present edge {i, j} is cut at rate
phi_ij * x_i + phi_ji * x_j; an absent edge of the initial graph reconnects at
rate psi_ij. Waiting times are exact exponentials, one event per step, with
all dependent rates updated incrementally.

The module also implements the twin-run estimator for the metastable number
of infected nodes: two runs from different initial conditions, a re-infection
rule that reseeds the process whenever it hits the absorbing state, and a
stopping rule on the agreement of their long-time averages.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from ._kernels import derive_seed
from .errors import SimulationBudgetError, ValidationError
from .graphs import Graph, is_connected
from .params import AsisParams, q_index, require_valid

__all__ = [
    "SimState",
    "TrajectoryStats",
    "EventLog",
    "RunResult",
    "TwinResult",
    "SweepRow",
    "McTransients",
    "run",
    "twin_metastable",
    "sweep",
    "mc_transients",
    "derive_seed",
    "coherence_gap",
    "EVENT_NAMES",
]

EVENT_NAMES = {
    K.EV_INFECT: "infect",
    K.EV_RECOVER: "recover",
    K.EV_CUT: "cut",
    K.EV_RECONNECT: "reconnect",
    K.EV_REINFECT: "reinfect",
}

_EMPTY_F64 = np.zeros(0, dtype=np.float64)
_EMPTY_I64 = np.zeros(0, dtype=np.int64)


@dataclass
class _SimArrays:
    """Kernel-ready views of a (graph, params) pair."""

    adj_start: np.ndarray
    adj_node: np.ndarray
    adj_eidx: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    cut_u: np.ndarray
    cut_v: np.ndarray
    psi: np.ndarray


def _build_arrays(g: Graph, params: AsisParams) -> _SimArrays:
    start, node, eidx = g.halfedge_csr
    qi = q_index(g)
    m = g.m
    cut_u = np.zeros(m)
    cut_v = np.zeros(m)
    for k, (u, v) in enumerate(g.edges):
        cut_u[k] = params.phi[qi.position(u, v)]
        cut_v[k] = params.phi[qi.position(v, u)]
    ea = g.edge_array
    return _SimArrays(
        adj_start=start,
        adj_node=node,
        adj_eidx=eidx,
        edge_u=np.ascontiguousarray(ea[:, 0]),
        edge_v=np.ascontiguousarray(ea[:, 1]),
        beta=np.asarray(params.beta, dtype=np.float64),
        delta=np.asarray(params.delta, dtype=np.float64),
        cut_u=cut_u,
        cut_v=cut_v,
        psi=np.asarray(params.psi, dtype=np.float64),
    )


@dataclass
class SimState:
    """Live simulation state: node indicators, edge indicators, clock, stream.

    ``inf_nbrs`` caches the infected present-neighbor count per node so that
    event rates update in O(degree); ``coherence_gap`` recomputes it from
    scratch for debugging.
    """

    graph: Graph
    params: AsisParams
    x: np.ndarray
    a: np.ndarray
    inf_nbrs: np.ndarray
    f64s: np.ndarray
    i64s: np.ndarray
    rng: np.ndarray
    arrays: _SimArrays

    @property
    def t(self) -> float:
        return float(self.f64s[K.F_T])

    @property
    def infected_count(self) -> int:
        return int(self.i64s[K.I_NINF])

    @property
    def edges_present(self) -> int:
        return int(self.i64s[K.I_NEDGE])

    @property
    def event_count(self) -> int:
        return int(self.i64s[K.I_EVENTS])

    @classmethod
    def create(cls, g: Graph, params: AsisParams, seed: int,
               infected="all", present_edges=None,
               arrays: _SimArrays | None = None) -> "SimState":
        x = np.zeros(g.n, dtype=np.uint8)
        if isinstance(infected, str):
            if infected != "all":
                raise ValidationError([f"unknown infected spec {infected!r}"])
            x[:] = 1
        else:
            for i in infected:
                if not 0 <= int(i) < g.n:
                    raise ValidationError([f"infected node {i} out of range"])
                x[int(i)] = 1
        a = np.ones(g.m, dtype=np.uint8)
        if present_edges is not None:
            pe = np.asarray(present_edges)
            if pe.shape != (g.m,):
                raise ValidationError(["present_edges must have one entry per edge"])
            a[:] = pe.astype(np.uint8)
        rng = np.zeros(1, dtype=np.uint64)
        rng[0] = np.uint64(int(seed) & ((1 << 64) - 1))
        f64s = np.zeros(8, dtype=np.float64)
        f64s[K.F_TNEXT] = -1.0  # sentinel: schedule on first kernel entry
        i64s = np.zeros(5, dtype=np.int64)
        inf_nbrs = np.zeros(g.n, dtype=np.int64)
        if arrays is None:
            arrays = _build_arrays(g, params)
        state = cls(graph=g, params=params, x=x, a=a, inf_nbrs=inf_nbrs,
                    f64s=f64s, i64s=i64s, rng=rng, arrays=arrays)
        with K.overflow_ok():
            K.recount(arrays.adj_start, arrays.adj_node, arrays.adj_eidx,
                      arrays.edge_u, arrays.edge_v, arrays.beta, arrays.delta,
                      arrays.cut_u, arrays.cut_v, arrays.psi,
                      x, a, inf_nbrs, f64s, i64s)
        return state


def _advance(state: SimState, t_target: float, event_cap: int, reinfect_count: int,
             log=None) -> int:
    ar = state.arrays
    if log is None:
        lt, lk, li, lj = _EMPTY_F64, _EMPTY_I64, _EMPTY_I64, _EMPTY_I64
        ln = np.zeros(1, dtype=np.int64)
    else:
        lt, lk, li, lj, ln = log
    with K.overflow_ok():
        return K.advance(
            float(t_target), int(event_cap), int(reinfect_count),
            ar.adj_start, ar.adj_node, ar.adj_eidx, ar.edge_u, ar.edge_v,
            ar.beta, ar.delta, ar.cut_u, ar.cut_v, ar.psi,
            state.x, state.a, state.inf_nbrs, state.f64s, state.i64s, state.rng,
            lt, lk, li, lj, ln)


def coherence_gap(state: SimState) -> float:
    """Worst absolute difference between cached and recounted rate state.

    Recomputes the infected present-neighbor counts and the four aggregate
    family rates from (x, a) and compares against the incremental caches.
    """
    g = state.graph
    ar = state.arrays
    x = state.x.astype(np.int64)
    a = state.a.astype(np.int64)
    worst = 0.0
    r_inf = r_rec = 0.0
    for i in range(g.n):
        cnt = 0
        for k in range(ar.adj_start[i], ar.adj_start[i + 1]):
            if a[ar.adj_eidx[k]] and x[ar.adj_node[k]]:
                cnt += 1
        worst = max(worst, abs(cnt - state.inf_nbrs[i]))
        if x[i]:
            r_rec += ar.delta[i]
        else:
            r_inf += ar.beta[i] * cnt
    r_cut = float(np.sum(a * (ar.cut_u * x[ar.edge_u] + ar.cut_v * x[ar.edge_v])))
    r_rwd = float(np.sum((1 - a) * ar.psi))
    worst = max(worst, abs(r_inf - state.f64s[K.F_RINF]))
    worst = max(worst, abs(r_rec - state.f64s[K.F_RREC]))
    worst = max(worst, abs(r_cut - state.f64s[K.F_RCUT]))
    worst = max(worst, abs(r_rwd - state.f64s[K.F_RRWD]))
    worst = max(worst, abs(int(np.sum(x)) - state.infected_count))
    worst = max(worst, abs(int(np.sum(a)) - state.edges_present))
    return worst


@dataclass(frozen=True)
class TrajectoryStats:
    """Exact time-integrals of a piecewise-constant sample path."""

    y_integral: float
    z_integral: float
    t_end: float
    reinfection_count: int
    event_count: int

    @property
    def y(self) -> float:
        return self.y_integral / self.t_end if self.t_end > 0 else 0.0

    @property
    def z(self) -> float:
        return self.z_integral / self.t_end if self.t_end > 0 else 0.0


def _stats_of(state: SimState) -> TrajectoryStats:
    return TrajectoryStats(
        y_integral=float(state.f64s[K.F_YINT]),
        z_integral=float(state.f64s[K.F_ZINT]),
        t_end=state.t,
        reinfection_count=int(state.i64s[K.I_REINF]),
        event_count=state.event_count,
    )


@dataclass
class EventLog:
    """Chronological record of applied events (kind codes in EVENT_NAMES)."""

    t: np.ndarray
    kind: np.ndarray
    i: np.ndarray
    j: np.ndarray

    def __len__(self) -> int:
        return self.t.size


@dataclass
class RunResult:
    stats: TrajectoryStats
    state: SimState
    log: EventLog | None


_LOG_CHUNK = 1 << 16


def run(g: Graph, params: AsisParams, horizon: float, seed: int, *,
        infected="all", present_edges=None, reinfect_count: int = 0,
        event_cap: int = 10**9, collect_log: bool = False) -> RunResult:
    """Simulate one sample path up to time ``horizon``.

    ``infected`` is "all" or an iterable of node ids; ``present_edges`` is an
    optional boolean mask over the canonical edge order (default: every edge
    of the initial graph present). ``reinfect_count`` > 0 enables the
    re-seeding rule used by the metastable estimator. Raises
    SimulationBudgetError (with partial results attached) if ``event_cap``
    events fire before the horizon.
    """
    if not horizon > 0:
        raise ValidationError(["horizon must be positive"])
    require_valid(g, params, for_simulation=True)
    state = SimState.create(g, params, seed, infected=infected, present_edges=present_edges)
    chunks = []
    if not collect_log:
        status = _advance(state, horizon, event_cap, reinfect_count)
    else:
        while True:
            log = (np.zeros(_LOG_CHUNK), np.zeros(_LOG_CHUNK, dtype=np.int64),
                   np.zeros(_LOG_CHUNK, dtype=np.int64), np.zeros(_LOG_CHUNK, dtype=np.int64),
                   np.zeros(1, dtype=np.int64))
            status = _advance(state, horizon, event_cap, reinfect_count, log=log)
            used = int(log[4][0])
            if used:
                chunks.append(tuple(arr[:used].copy() for arr in log[:4]))
            if status != K.STATUS_LOGFULL:
                break
    log_out = None
    if collect_log:
        if chunks:
            log_out = EventLog(*(np.concatenate(parts) for parts in zip(*chunks)))
        else:
            log_out = EventLog(np.zeros(0), np.zeros(0, dtype=np.int64),
                               np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    result = RunResult(stats=_stats_of(state), state=state, log=log_out)
    if status == K.STATUS_BUDGET:
        raise SimulationBudgetError(
            f"event budget {event_cap} exhausted at t={state.t:.6g} (horizon {horizon})",
            partial=result)
    return result


@dataclass(frozen=True)
class TwinResult:
    """Outcome of the twin-run metastable estimation."""

    y_star: float
    y1: float
    y2: float
    z1: float
    z2: float
    t_stop: float
    metric: float
    events: int
    reinfections: int
    converged: bool


def _twin_metric(y1, y2, z1, z2) -> float:
    metric = 0.0
    for a, b in ((y1, y2), (z1, z2)):
        num = abs(a - b)
        if num > 0:
            metric += num / (a + b)
    return metric


def twin_metastable(g: Graph, params: AsisParams, seed: int, *,
                    stop_tol: float = 1e-4, burn_in: float = 100.0,
                    check_interval: float = 10.0, event_budget: int = 10**9,
                    infected_fraction: float = 0.1, reinfect_count: int = 1,
                    raise_on_timeout: bool = True) -> TwinResult:
    """Estimate the metastable number of infected nodes by the twin-run rule.

    Run 1 starts with ``infected_fraction`` of the nodes infected (uniformly
    at random, at least one); run 2 starts with every node infected. Both use
    the re-infection rule, so neither can be absorbed. Their long-time
    averages y_k(t) (infected nodes) and z_k(t) (present edges) are compared
    every ``check_interval`` time units once t >= ``burn_in``; the runs stop
    when |y1-y2|/(y1+y2) + |z1-z2|/(z1+z2) < ``stop_tol``. The estimate is
    y1 at the stopping time minus ``reinfect_count``, compensating the floor
    the re-seeding rule maintains.

    Raises SimulationBudgetError with the partial TwinResult attached if the
    combined event budget runs out first (or returns it, flagged
    ``converged=False``, when ``raise_on_timeout`` is false).
    """
    require_valid(g, params, for_simulation=True)
    if not is_connected(g):
        raise ValidationError(["graph must be connected"])
    if reinfect_count < 1:
        raise ValidationError(["reinfect_count must be >= 1"])
    n_seed = max(1, int(round(infected_fraction * g.n)))
    pick = np.random.default_rng(derive_seed(seed, 0)).choice(g.n, size=n_seed, replace=False)
    s1 = SimState.create(g, params, derive_seed(seed, 1), infected=pick.tolist())
    s2 = SimState.create(g, params, derive_seed(seed, 2), infected="all")

    t_check = burn_in
    timed_out = False
    while True:
        status1 = _advance(s1, t_check, event_budget - s2.event_count, reinfect_count)
        status2 = _advance(s2, t_check, event_budget - s1.event_count, reinfect_count)
        st1, st2 = _stats_of(s1), _stats_of(s2)
        y1, z1 = st1.y, st1.z
        y2, z2 = st2.y, st2.z
        metric = _twin_metric(y1, y2, z1, z2)
        if status1 == K.STATUS_BUDGET or status2 == K.STATUS_BUDGET:
            timed_out = True
            break
        if metric < stop_tol:
            break
        t_check += check_interval

    result = TwinResult(
        y_star=y1 - reinfect_count, y1=y1, y2=y2, z1=z1, z2=z2,
        t_stop=min(s1.t, s2.t), metric=metric,
        events=s1.event_count + s2.event_count,
        reinfections=int(s1.i64s[K.I_REINF] + s2.i64s[K.I_REINF]),
        converged=not timed_out)
    if timed_out and raise_on_timeout:
        raise SimulationBudgetError(
            f"twin runs exceeded event budget {event_budget} before converging "
            f"(metric {metric:.3g} at t={result.t_stop:.6g})", partial=result)
    return result


@dataclass(frozen=True)
class McTransients:
    """Monte-Carlo snapshots of the infection state at fixed times."""

    times: np.ndarray        # (T,)
    totals: np.ndarray       # (runs, T) infected counts
    node_sums: np.ndarray    # (T, n) per-node infection tallies

    @property
    def mean_total(self) -> np.ndarray:
        return self.totals.mean(axis=0)

    @property
    def sem_total(self) -> np.ndarray:
        return self.totals.std(axis=0, ddof=1) / np.sqrt(self.totals.shape[0])

    @property
    def node_means(self) -> np.ndarray:
        return self.node_sums / self.totals.shape[0]


def mc_transients(g: Graph, params: AsisParams, times, n_runs: int, seed: int, *,
                  infected="all", present_edges=None) -> McTransients:
    """Run ``n_runs`` independent trajectories, sampling x at the given times.

    Times must be increasing; each trajectory is advanced through all of them
    in one pass, so the per-run cost is a single short simulation.
    """
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise ValidationError(["times must be nonnegative"])
    require_valid(g, params, for_simulation=True)
    arrays = _build_arrays(g, params)
    totals = np.zeros((n_runs, times.size), dtype=np.int32)
    node_sums = np.zeros((times.size, g.n), dtype=np.int64)
    for r in range(n_runs):
        state = SimState.create(g, params, derive_seed(seed, r),
                                infected=infected, present_edges=present_edges,
                                arrays=arrays)
        for k, t in enumerate(times):
            _advance(state, t, 10**12, 0)
            totals[r, k] = state.infected_count
            node_sums[k] += state.x
    return McTransients(times=times, totals=totals, node_sums=node_sums)


@dataclass(frozen=True)
class SweepRow:
    beta: float
    phi: float
    y_star: float
    t_stop: float
    events: int
    converged: bool


def _cell_params(params_base: AsisParams, beta: float, phi: float) -> AsisParams:
    return replace(params_base,
                   beta=np.full_like(params_base.beta, float(beta)),
                   phi=np.full_like(params_base.phi, float(phi)))


def _sweep_cell(payload) -> SweepRow:
    g, params_base, beta, phi, cell_seed, twin_kwargs = payload
    params = _cell_params(params_base, beta, phi)
    try:
        res = twin_metastable(g, params, cell_seed, raise_on_timeout=False, **twin_kwargs)
    except SimulationBudgetError as exc:  # pragma: no cover - defensive
        res = exc.partial
    return SweepRow(beta=beta, phi=phi, y_star=res.y_star, t_stop=res.t_stop,
                    events=res.events, converged=res.converged)


def sweep(g: Graph, params_base: AsisParams, beta_grid, phi_grid, seed: int, *,
          jobs: int = 1, **twin_kwargs) -> list[SweepRow]:
    """Twin-metastable estimate over a (beta, phi) grid.

    Rows are emitted beta-major in deterministic order; each cell gets an
    independent stream derived from the master seed, so identical inputs give
    identical tables regardless of ``jobs``. Cell timeouts are flagged in the
    ``converged`` column rather than raised.
    """
    beta_grid = [float(b) for b in beta_grid]
    phi_grid = [float(f) for f in phi_grid]
    if not beta_grid or not phi_grid:
        raise ValidationError(["beta and phi grids must be nonempty"])
    payloads = []
    for idx, (b, f) in enumerate((b, f) for b in beta_grid for f in phi_grid):
        payloads.append((g, params_base, b, f, derive_seed(seed, idx), twin_kwargs))
    if jobs <= 1:
        return [_sweep_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_cell, payloads))
