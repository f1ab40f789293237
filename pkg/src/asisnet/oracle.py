"""Brute-force ground truth on tiny instances.

Enumerates the full joint chain over node bits and edge bits (2^(n+m)
states), builds its sparse generator, and computes transient expectations by
uniformization with a certified Poisson-tail truncation. Intended for
validating the event simulator and the linear moment bound; guarded to
n + m <= 22.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import StateSpaceError, ValidationError
from .graphs import Graph
from .params import AsisParams, q_index, require_valid

__all__ = [
    "SIZE_GUARD",
    "state_index",
    "unpack_state",
    "generator_matrix",
    "transient_distribution",
    "transient_mean_infected",
    "transient_node_marginals",
    "linear_bound",
]

SIZE_GUARD = 22


def _check_size(g: Graph) -> None:
    if g.n + g.m > SIZE_GUARD:
        raise StateSpaceError(
            f"state space too large: n + m = {g.n + g.m} exceeds {SIZE_GUARD}")


def state_index(x, a, g: Graph) -> int:
    """Pack node bits (x_0..x_{n-1}) then edge bits into a state index."""
    s = 0
    for i in range(g.n):
        if x[i]:
            s |= 1 << i
    for e in range(g.m):
        if a[e]:
            s |= 1 << (g.n + e)
    return s


def unpack_state(s: int, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of state_index."""
    x = np.array([(s >> i) & 1 for i in range(g.n)], dtype=np.uint8)
    a = np.array([(s >> (g.n + e)) & 1 for e in range(g.m)], dtype=np.uint8)
    return x, a


def generator_matrix(g: Graph, params: AsisParams) -> sparse.csr_matrix:
    """Sparse CTMC generator Q over all 2^(n+m) joint states.

    Q[s, s'] for s != s' is the rate of the unique event turning s into s';
    diagonal entries make every row sum to zero.
    """
    _check_size(g)
    require_valid(g, params, for_simulation=True)
    n, m = g.n, g.m
    size = 1 << (n + m)
    states = np.arange(size, dtype=np.int64)

    rows, cols, vals = [], [], []

    def add(r, c, v):
        mask = v > 0
        rows.append(r[mask])
        cols.append(c[mask])
        vals.append(v[mask])

    xbits = [(states >> i) & 1 for i in range(n)]
    abits = [(states >> (n + e)) & 1 for e in range(m)]

    # recovery: x_i 1 -> 0 at rate delta_i
    for i in range(n):
        infected = xbits[i] == 1
        r = states[infected]
        add(r, r ^ (1 << i), np.full(r.size, params.delta[i]))

    # infection: x_i 0 -> 1 at rate beta_i * (# infected present neighbors)
    start, node, eidx = g.halfedge_csr
    for i in range(n):
        count = np.zeros(size, dtype=np.int64)
        for k in range(start[i], start[i + 1]):
            count += xbits[node[k]] & abits[eidx[k]]
        sus = xbits[i] == 0
        r = states[sus]
        add(r, r ^ (1 << i), params.beta[i] * count[sus])

    # cut: a_e 1 -> 0 at rate phi_uv x_u + phi_vu x_v
    qi = q_index(g)
    for e, (u, v) in enumerate(g.edges):
        present = abits[e] == 1
        r = states[present]
        rate = (params.phi[qi.position(u, v)] * xbits[u][present]
                + params.phi[qi.position(v, u)] * xbits[v][present]).astype(np.float64)
        add(r, r ^ (1 << (n + e)), rate)

    # reconnect: a_e 0 -> 1 at rate psi_e
    for e in range(m):
        absent = abits[e] == 0
        r = states[absent]
        add(r, r ^ (1 << (n + e)), np.full(r.size, params.psi[e]))

    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    Q = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    diag = np.asarray(Q.sum(axis=1)).ravel()
    Q = Q - sparse.diags(diag)
    return Q.tocsr()


def _initial_distribution(g: Graph, init) -> np.ndarray:
    size = 1 << (g.n + g.m)
    if isinstance(init, np.ndarray) and init.size == size:
        pi0 = np.asarray(init, dtype=np.float64)
        if abs(pi0.sum() - 1.0) > 1e-9 or np.any(pi0 < 0):
            raise ValidationError(["init distribution must be a probability vector"])
        return pi0
    x0, a0 = init
    pi0 = np.zeros(size)
    pi0[state_index(x0, a0, g)] = 1.0
    return pi0


def transient_distribution(g: Graph, params: AsisParams, init, t: float,
                           tol: float = 1e-10) -> np.ndarray:
    """Distribution at time t by uniformization, truncation error below tol.

    ``init`` is either a full probability vector over the packed states or a
    pair (x0, a0) of indicator arrays for a deterministic start.
    """
    _check_size(g)
    if t < 0:
        raise ValidationError(["t must be nonnegative"])
    pi = _initial_distribution(g, init)
    if t == 0:
        return pi
    Q = generator_matrix(g, params)
    lam = float(np.max(-Q.diagonal())) if Q.shape[0] else 0.0
    if lam == 0.0:
        return pi
    P = (sparse.identity(Q.shape[0], format="csr") + Q / lam).tocsr()
    # Poisson(lam*t) weights, iterated until the remaining tail is below tol
    mu = lam * t
    out = np.zeros_like(pi)
    vec = pi.copy()
    k = 0
    log_w = -mu  # log pmf at k = 0
    acc = 0.0
    while True:
        w = np.exp(log_w)
        out += w * vec
        acc += w
        if 1.0 - acc < tol and k >= mu:
            break
        k += 1
        if k > 10_000_000:  # pragma: no cover - defensive
            raise ValidationError(["uniformization failed to converge"])
        log_w = -mu + k * np.log(mu) - gammaln(k + 1)
        vec = vec @ P
    return out


def transient_mean_infected(g: Graph, params: AsisParams, init, t: float,
                            tol: float = 1e-10) -> float:
    """E[sum_i x_i(t)] for the exact chain."""
    pi = transient_distribution(g, params, init, t, tol=tol)
    states = np.arange(pi.size, dtype=np.int64)
    count = np.zeros(pi.size, dtype=np.int64)
    for i in range(g.n):
        count += (states >> i) & 1
    return float(pi @ count)


def transient_node_marginals(g: Graph, params: AsisParams, init, t: float,
                             tol: float = 1e-10) -> np.ndarray:
    """E[x_i(t)] for every node, from the exact chain."""
    pi = transient_distribution(g, params, init, t, tol=tol)
    states = np.arange(pi.size, dtype=np.int64)
    return np.array([float(pi @ ((states >> i) & 1)) for i in range(g.n)])


def linear_bound(g: Graph, params: AsisParams, p0: np.ndarray, q0: np.ndarray,
                 t: float) -> np.ndarray:
    """exp(M t) applied to the stacked vector [p0; q0].

    M is the linear moment-bound matrix; because the dropped higher-order
    terms are nonnegative, this dominates the exact moments entrywise.
    """
    from .threshold import build_M

    tm = build_M(g, params)
    v0 = np.concatenate([np.asarray(p0, dtype=np.float64),
                         np.asarray(q0, dtype=np.float64)])
    if v0.size != tm.dim:
        raise ValidationError([f"[p0; q0] must have length {tm.dim}"])
    if t == 0:
        return v0
    return expm(tm.matrix.toarray() * t) @ v0
