"""Event-loop kernels for the coupled node/edge Markov process.

The functions below are written once in numpy-compatible Python and compiled
with numba's ``@njit`` when available. Setting ``ASISNET_NO_NUMBA=1`` in the
environment selects the pure-numpy fallback instead. Both paths execute the
same source and the same splitmix64 random stream, so a given seed produces
an identical event sequence either way (the fallback is just slower).

State is carried in flat arrays so the kernels stay allocation-free:

    f64s: [t, t_next, y_integral, z_integral, R_inf, R_rec, R_cut, R_rwd]
    i64s: [n_infected, n_edges_present, events, reinfections, since_recount]

Aggregate event-family rates (R_*) are updated incrementally, O(degree) per
event, and recomputed from scratch every RECOUNT_EVERY events to kill
floating-point drift.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

_flag = os.environ.get("ASISNET_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}
NUMBA_ENABLED = False
if not NUMBA_DISABLED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        pass

# float-slot and int-slot indices
F_T, F_TNEXT, F_YINT, F_ZINT, F_RINF, F_RREC, F_RCUT, F_RRWD = range(8)
I_NINF, I_NEDGE, I_EVENTS, I_REINF, I_RECOUNT = range(5)

# kernel return status
STATUS_REACHED = 0
STATUS_BUDGET = 1
STATUS_LOGFULL = 2

# event codes used in logs
EV_INFECT = 0
EV_RECOVER = 1
EV_CUT = 2
EV_RECONNECT = 3
EV_REINFECT = 4

RECOUNT_EVERY = 65536

# splitmix64 constants
_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_S11 = _U64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, k: int) -> int:
    """Derive the k-th child seed from a master seed (plain-int splitmix64)."""
    z = (int(master) + (k + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def overflow_ok():
    """Context suppressing numpy's benign uint64 wrap warnings (fallback path)."""
    if NUMBA_ENABLED:
        return contextlib.nullcontext()
    return np.errstate(over="ignore")


def _next_u64(rng):
    rng[0] += _GOLDEN
    z = rng[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def _unif(rng):
    # uniform double in [0, 1) from the top 53 bits
    return (_next_u64(rng) >> _S11) * _INV53


def _recount(adj_start, adj_node, adj_eidx, edge_u, edge_v,
             beta, delta, cut_u, cut_v, psi, x, a, inf_nbrs, f64s, i64s):
    n = x.shape[0]
    m = a.shape[0]
    n_inf = 0
    r_inf = 0.0
    r_rec = 0.0
    for i in range(n):
        cnt = 0
        for k in range(adj_start[i], adj_start[i + 1]):
            if a[adj_eidx[k]] == 1 and x[adj_node[k]] == 1:
                cnt += 1
        inf_nbrs[i] = cnt
        if x[i] == 1:
            n_inf += 1
            r_rec += delta[i]
        else:
            r_inf += beta[i] * cnt
    n_edge = 0
    r_cut = 0.0
    r_rwd = 0.0
    for e in range(m):
        if a[e] == 1:
            n_edge += 1
            r_cut += cut_u[e] * x[edge_u[e]] + cut_v[e] * x[edge_v[e]]
        else:
            r_rwd += psi[e]
    i64s[I_NINF] = n_inf
    i64s[I_NEDGE] = n_edge
    i64s[I_RECOUNT] = 0
    f64s[F_RINF] = r_inf
    f64s[F_RREC] = r_rec
    f64s[F_RCUT] = r_cut
    f64s[F_RRWD] = r_rwd


def _apply_infect(i, adj_start, adj_node, adj_eidx, edge_u, edge_v,
                  beta, delta, cut_u, cut_v, x, a, inf_nbrs, f64s, i64s):
    f64s[F_RINF] -= beta[i] * inf_nbrs[i]
    f64s[F_RREC] += delta[i]
    for k in range(adj_start[i], adj_start[i + 1]):
        e = adj_eidx[k]
        if a[e] == 1:
            j = adj_node[k]
            inf_nbrs[j] += 1
            if x[j] == 0:
                f64s[F_RINF] += beta[j]
            if i == edge_u[e]:
                f64s[F_RCUT] += cut_u[e]
            else:
                f64s[F_RCUT] += cut_v[e]
    x[i] = 1
    i64s[I_NINF] += 1


def _apply_recover(i, adj_start, adj_node, adj_eidx, edge_u, edge_v,
                   beta, delta, cut_u, cut_v, x, a, inf_nbrs, f64s, i64s):
    f64s[F_RREC] -= delta[i]
    f64s[F_RINF] += beta[i] * inf_nbrs[i]
    for k in range(adj_start[i], adj_start[i + 1]):
        e = adj_eidx[k]
        if a[e] == 1:
            j = adj_node[k]
            inf_nbrs[j] -= 1
            if x[j] == 0:
                f64s[F_RINF] -= beta[j]
            if i == edge_u[e]:
                f64s[F_RCUT] -= cut_u[e]
            else:
                f64s[F_RCUT] -= cut_v[e]
    x[i] = 0
    i64s[I_NINF] -= 1


def _apply_cut(e, edge_u, edge_v, beta, cut_u, cut_v, psi, x, a, inf_nbrs, f64s, i64s):
    u = edge_u[e]
    v = edge_v[e]
    f64s[F_RCUT] -= cut_u[e] * x[u] + cut_v[e] * x[v]
    f64s[F_RRWD] += psi[e]
    if x[u] == 1:
        inf_nbrs[v] -= 1
        if x[v] == 0:
            f64s[F_RINF] -= beta[v]
    if x[v] == 1:
        inf_nbrs[u] -= 1
        if x[u] == 0:
            f64s[F_RINF] -= beta[u]
    a[e] = 0
    i64s[I_NEDGE] -= 1


def _apply_reconnect(e, edge_u, edge_v, beta, cut_u, cut_v, psi, x, a, inf_nbrs, f64s, i64s):
    u = edge_u[e]
    v = edge_v[e]
    f64s[F_RRWD] -= psi[e]
    f64s[F_RCUT] += cut_u[e] * x[u] + cut_v[e] * x[v]
    if x[u] == 1:
        inf_nbrs[v] += 1
        if x[v] == 0:
            f64s[F_RINF] += beta[v]
    if x[v] == 1:
        inf_nbrs[u] += 1
        if x[u] == 0:
            f64s[F_RINF] += beta[u]
    a[e] = 1
    i64s[I_NEDGE] += 1


def _select_event(r, edge_u, edge_v, beta, delta, cut_u, cut_v, psi, x, a, inf_nbrs, f64s):
    """Pick the event at cumulative-rate offset r. Returns (etype, index).

    etype -1 signals that drift left no eligible candidate in the chosen
    family; the caller recounts and retries.
    """
    n = x.shape[0]
    m = a.shape[0]
    if r < f64s[F_RINF]:
        last = -1
        for i in range(n):
            if x[i] == 0 and inf_nbrs[i] > 0:
                w = beta[i] * inf_nbrs[i]
                if w > 0.0:
                    last = i
                    r -= w
                    if r < 0.0:
                        return EV_INFECT, i
        if last >= 0:
            return EV_INFECT, last
        return -1, -1
    r -= f64s[F_RINF]
    if r < f64s[F_RREC]:
        last = -1
        for i in range(n):
            if x[i] == 1:
                last = i
                r -= delta[i]
                if r < 0.0:
                    return EV_RECOVER, i
        if last >= 0:
            return EV_RECOVER, last
        return -1, -1
    r -= f64s[F_RREC]
    if r < f64s[F_RCUT]:
        last = -1
        for e in range(m):
            if a[e] == 1:
                w = cut_u[e] * x[edge_u[e]] + cut_v[e] * x[edge_v[e]]
                if w > 0.0:
                    last = e
                    r -= w
                    if r < 0.0:
                        return EV_CUT, e
        if last >= 0:
            return EV_CUT, last
        return -1, -1
    r -= f64s[F_RCUT]
    last = -1
    for e in range(m):
        if a[e] == 0 and psi[e] > 0.0:
            last = e
            r -= psi[e]
            if r < 0.0:
                return EV_RECONNECT, e
    if last >= 0:
        return EV_RECONNECT, last
    return -1, -1


def advance(t_target, event_cap, reinfect_count,
            adj_start, adj_node, adj_eidx, edge_u, edge_v,
            beta, delta, cut_u, cut_v, psi,
            x, a, inf_nbrs, f64s, i64s, rng,
            log_t, log_type, log_i, log_j, log_len):
    """Drive the process forward until time t_target.

    Returns STATUS_REACHED once the clock hits t_target, STATUS_BUDGET when
    the cumulative event count reaches event_cap, or STATUS_LOGFULL when the
    event-log arrays fill up. The pending event time survives pauses, so the
    sample path is independent of how the caller chops up the time axis.

    reinfect_count > 0 turns on the re-seeding rule: the moment the last
    infected node recovers, that many uniformly-random distinct nodes are
    reinfected at the same instant.
    """
    n = x.shape[0]
    log_cap = log_t.shape[0]
    while True:
        t_next = f64s[F_TNEXT]
        if t_next < f64s[F_T]:
            # sentinel: no event scheduled yet (fresh state or post-recount)
            total = f64s[F_RINF] + f64s[F_RREC] + f64s[F_RCUT] + f64s[F_RRWD]
            if total <= 0.0:
                t_next = np.inf
            else:
                t_next = f64s[F_T] - np.log(1.0 - _unif(rng)) / total
            f64s[F_TNEXT] = t_next
        if t_next > t_target:
            dt = t_target - f64s[F_T]
            f64s[F_YINT] += i64s[I_NINF] * dt
            f64s[F_ZINT] += i64s[I_NEDGE] * dt
            f64s[F_T] = t_target
            return STATUS_REACHED
        if i64s[I_EVENTS] >= event_cap:
            return STATUS_BUDGET
        if log_cap > 0 and log_len[0] + 1 + reinfect_count > log_cap:
            return STATUS_LOGFULL

        dt = t_next - f64s[F_T]
        f64s[F_YINT] += i64s[I_NINF] * dt
        f64s[F_ZINT] += i64s[I_NEDGE] * dt
        f64s[F_T] = t_next

        total = f64s[F_RINF] + f64s[F_RREC] + f64s[F_RCUT] + f64s[F_RRWD]
        etype, idx = _select_event(_unif(rng) * total, edge_u, edge_v, beta, delta,
                                   cut_u, cut_v, psi, x, a, inf_nbrs, f64s)
        if etype < 0:
            # accumulated drift emptied the selected family: recount and retry
            _recount(adj_start, adj_node, adj_eidx, edge_u, edge_v, beta, delta,
                     cut_u, cut_v, psi, x, a, inf_nbrs, f64s, i64s)
            total = f64s[F_RINF] + f64s[F_RREC] + f64s[F_RCUT] + f64s[F_RRWD]
            if total <= 0.0:
                f64s[F_TNEXT] = np.inf
                continue
            etype, idx = _select_event(_unif(rng) * total, edge_u, edge_v, beta, delta,
                                       cut_u, cut_v, psi, x, a, inf_nbrs, f64s)
            if etype < 0:
                f64s[F_TNEXT] = np.inf
                continue

        if etype == EV_INFECT:
            _apply_infect(idx, adj_start, adj_node, adj_eidx, edge_u, edge_v,
                          beta, delta, cut_u, cut_v, x, a, inf_nbrs, f64s, i64s)
            li, lj = idx, -1
        elif etype == EV_RECOVER:
            _apply_recover(idx, adj_start, adj_node, adj_eidx, edge_u, edge_v,
                           beta, delta, cut_u, cut_v, x, a, inf_nbrs, f64s, i64s)
            li, lj = idx, -1
        elif etype == EV_CUT:
            _apply_cut(idx, edge_u, edge_v, beta, cut_u, cut_v, psi,
                       x, a, inf_nbrs, f64s, i64s)
            li, lj = edge_u[idx], edge_v[idx]
        else:
            _apply_reconnect(idx, edge_u, edge_v, beta, cut_u, cut_v, psi,
                             x, a, inf_nbrs, f64s, i64s)
            li, lj = edge_u[idx], edge_v[idx]

        i64s[I_EVENTS] += 1
        i64s[I_RECOUNT] += 1
        if log_cap > 0:
            k = log_len[0]
            log_t[k] = f64s[F_T]
            log_type[k] = etype
            log_i[k] = li
            log_j[k] = lj
            log_len[0] = k + 1

        if i64s[I_NINF] == 0 and reinfect_count > 0:
            seeded = 0
            while seeded < reinfect_count and seeded < n:
                node = int(_unif(rng) * n)
                if node >= n:
                    node = n - 1
                if x[node] == 0:
                    _apply_infect(node, adj_start, adj_node, adj_eidx, edge_u, edge_v,
                                  beta, delta, cut_u, cut_v, x, a, inf_nbrs, f64s, i64s)
                    seeded += 1
                    if log_cap > 0:
                        k = log_len[0]
                        log_t[k] = f64s[F_T]
                        log_type[k] = EV_REINFECT
                        log_i[k] = node
                        log_j[k] = -1
                        log_len[0] = k + 1
            i64s[I_REINF] += seeded

        if i64s[I_RECOUNT] >= RECOUNT_EVERY:
            _recount(adj_start, adj_node, adj_eidx, edge_u, edge_v, beta, delta,
                     cut_u, cut_v, psi, x, a, inf_nbrs, f64s, i64s)

        total = f64s[F_RINF] + f64s[F_RREC] + f64s[F_RCUT] + f64s[F_RRWD]
        if total <= 0.0:
            f64s[F_TNEXT] = np.inf
        else:
            f64s[F_TNEXT] = f64s[F_T] - np.log(1.0 - _unif(rng)) / total


if NUMBA_ENABLED:
    _opts = dict(cache=True, nogil=True)
    _next_u64 = njit(**_opts)(_next_u64)
    _unif = njit(**_opts)(_unif)
    _recount = njit(**_opts)(_recount)
    _apply_infect = njit(**_opts)(_apply_infect)
    _apply_recover = njit(**_opts)(_apply_recover)
    _apply_cut = njit(**_opts)(_apply_cut)
    _apply_reconnect = njit(**_opts)(_apply_reconnect)
    _select_event = njit(**_opts)(_select_event)
    advance = njit(**_opts)(advance)

recount = _recount
