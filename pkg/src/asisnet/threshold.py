"""Linear moment-bound matrix and the spectral extinction condition.

The expected infection indicators p_i = E[x_i] and the mixed moments
q_ij = E[a_ij x_i] satisfy d/dt [p; q] <= M [p; q] entrywise, where M is the
(n + 2m) x (n + 2m) Metzler matrix assembled here:

    row p_i:      -delta_i on the diagonal, +beta_i at every q-column (k, i)
                  with k a neighbor of i;
    row q_(i,j):  +psi_ij at node column i, -(delta_i + phi_ij + psi_ij) on
                  the diagonal, +beta_i at every q-column (k, i).

The epidemic dies out exponentially fast whenever the dominant real
eigenvalue lambda_max(M) is negative. With homogeneous rates the condition
reduces to beta/delta < (1 + omega)/rho with omega = phi/(delta + psi) and
rho the spectral radius of the initial graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ValidationError
from .graphs import Graph, is_connected, power_iteration, spectral_radius
from .params import AsisParams, QIndex, q_index, require_valid

__all__ = [
    "ThresholdMatrix",
    "build_M",
    "lambda_max",
    "IrreducibilityReport",
    "is_irreducible",
    "effective_cutting_rate",
    "homogeneous_bound",
    "homogeneous_lambda_quadratic",
]


@dataclass
class ThresholdMatrix:
    """Sparse moment-bound matrix with its block metadata.

    Rows/columns 0..n-1 form the node block; column n + k corresponds to the
    directed pair at position k of the QIndex.
    """

    dim: int
    n: int
    matrix: sparse.csr_matrix
    qindex: QIndex
    _lambda_cache: dict = field(default_factory=dict, repr=False)


def build_M(g: Graph, params: AsisParams) -> ThresholdMatrix:
    """Assemble M entrywise from a validated parameter set on a connected graph."""
    require_valid(g, params)
    if not is_connected(g):
        raise ValidationError(["graph must be connected"])
    n, m = g.n, g.m
    qi = q_index(g)
    dim = n + 2 * m
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for i in range(n):
        put(i, i, -params.delta[i])
        for pos in qi.incoming(i):  # pairs (k, i), k a neighbor of i
            put(i, n + pos, params.beta[i])
    for pos, (i, j) in enumerate(qi.pairs):
        e = g.edge_position[(min(i, j), max(i, j))]
        row = n + pos
        put(row, i, params.psi[e])
        put(row, row, -(params.delta[i] + params.phi[pos] + params.psi[e]))
        for pin in qi.incoming(i):
            put(row, n + pin, params.beta[i])

    rows = np.asarray(rows)
    cols = np.asarray(cols)
    vals = np.asarray(vals, dtype=np.float64)
    off = rows != cols
    if np.any(vals[off] < 0):  # Metzler by construction; guards index bugs
        raise AssertionError("negative off-diagonal entry while assembling M")
    M = sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return ThresholdMatrix(dim=dim, n=n, matrix=M, qindex=qi)


def lambda_max(tm: ThresholdMatrix, tol: float = 1e-10,
               return_vector: bool = False):
    """Dominant real eigenvalue of the irreducible Metzler matrix M.

    Shifts by sigma = max |M_kk| so the matrix becomes nonnegative and
    primitive, finds its Perron root by power iteration, and shifts back.
    """
    key = ("lam", tol)
    if key not in tm._lambda_cache:
        M = tm.matrix
        sigma = float(np.max(np.abs(M.diagonal()))) if tm.dim else 0.0
        A = (M + sigma * sparse.identity(tm.dim, format="csr")).tocsr()
        lam, vec, _ = power_iteration(A, tol)
        tm._lambda_cache[key] = (lam - sigma, vec)
    lam, vec = tm._lambda_cache[key]
    if return_vector:
        return lam, vec
    return lam


@dataclass(frozen=True)
class IrreducibilityReport:
    """Truthy iff the auxiliary digraph is strongly connected.

    On failure, ``unreachable`` and ``not_reaching`` list witness vertices
    (labels "p_i" or "q_(i,j)") that the root cannot reach or that cannot
    reach the root.
    """

    irreducible: bool
    unreachable: tuple[str, ...] = ()
    not_reaching: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.irreducible


def is_irreducible(g: Graph) -> IrreducibilityReport:
    """Check irreducibility of M via the auxiliary digraph H.

    H has one vertex per node variable p_i and one per directed pair q_(i,j),
    with arcs p_i -> q_(j,i) for every neighbor j of i, q_(i,j) -> p_i, and
    q_(i,j) -> q_(k,i) for every neighbor k of i. M is irreducible exactly
    when H is strongly connected (checked by forward and backward
    reachability from vertex 0).
    """
    n = g.n
    qi = q_index(g)
    dim = n + 2 * g.m
    fwd: list[list[int]] = [[] for _ in range(dim)]
    for i in range(n):
        for pos in qi.incoming(i):  # (j, i) for j in N_i
            fwd[i].append(n + pos)
    for pos, (i, j) in enumerate(qi.pairs):
        fwd[n + pos].append(i)
        for pin in qi.incoming(i):  # (k, i) for k in N_i
            fwd[n + pos].append(n + pin)
    bwd: list[list[int]] = [[] for _ in range(dim)]
    for u, outs in enumerate(fwd):
        for v in outs:
            bwd[v].append(u)

    def reach(adj):
        seen = [False] * dim
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen

    def label(k: int) -> str:
        if k < n:
            return f"p_{k}"
        i, j = qi.pair(k - n)
        return f"q_({i},{j})"

    fseen = reach(fwd)
    bseen = reach(bwd)
    unreachable = tuple(label(k) for k in range(dim) if not fseen[k])
    not_reaching = tuple(label(k) for k in range(dim) if not bseen[k])
    return IrreducibilityReport(
        irreducible=not unreachable and not not_reaching,
        unreachable=unreachable, not_reaching=not_reaching)


def effective_cutting_rate(phi: float, delta: float, psi: float) -> float:
    """omega = phi / (delta + psi), the dimensionless adaptation strength."""
    if phi < 0 or delta <= 0 or psi <= 0:
        raise ValidationError(["need phi >= 0 and delta, psi > 0"])
    return phi / (delta + psi)


def homogeneous_bound(g: Graph, delta: float, phi: float, psi: float,
                      tol: float = 1e-10) -> float:
    """Critical infection rate beta* = delta (1 + omega) / rho.

    Homogeneous rates below beta* guarantee exponential extinction.
    """
    omega = effective_cutting_rate(phi, delta, psi)
    rho = spectral_radius(g, tol)
    return delta * (1.0 + omega) / rho


def homogeneous_lambda_quadratic(beta: float, delta: float, phi: float,
                                 psi: float, rho: float) -> tuple[float, float]:
    """Both real roots (lam1 <= lam2) of the homogeneous eigenvalue quadratic.

    lam2 equals lambda_max(M) for the homogeneous model on a graph with
    spectral radius rho. The quadratic is
    lam^2 + (2 delta + phi + psi - beta rho) lam
          + delta (delta + phi + psi) - beta rho (delta + psi) = 0,
    whose discriminant is provably positive for positive rates.
    """
    if min(beta, delta, phi, psi, rho) <= 0:
        raise ValidationError(["all rates and rho must be positive"])
    b = 2.0 * delta + phi + psi - beta * rho
    c = delta * (delta + phi + psi) - beta * rho * (delta + psi)
    disc = b * b - 4.0 * c
    assert disc > 0.0, "discriminant must be positive for positive rates"
    root = np.sqrt(disc)
    return (-b - root) / 2.0, (-b + root) / 2.0
