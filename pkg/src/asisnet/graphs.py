"""Graph container, random generators, and spectral/centrality utilities.

Nodes are integers ``0..n-1``. Edges are undirected pairs ``(i, j)`` with
``i < j`` kept in lexicographic order; every downstream index map (directed
pair ordering, rate containers, matrix blocks) relies on this canonical
order, so it must never be perturbed after construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import ConvergenceError, GraphParseError, ValidationError

__all__ = [
    "Graph",
    "load_edge_list",
    "dump_edge_list",
    "gen_erdos_renyi",
    "gen_barabasi_albert",
    "is_connected",
    "spectral_radius",
    "eigenvector_centrality",
    "edge_betweenness",
    "degree_product",
    "power_iteration",
]


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with a canonical edge order.

    ``edges`` must already be deduplicated, self-loop free, and sorted
    lexicographically with ``i < j`` inside each pair; use ``Graph.from_edges``
    to canonicalize arbitrary input.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("node count must be >= 1")
        prev = None
        for i, j in self.edges:
            if i == j:
                raise ValidationError(f"self-loop at node {i}")
            if not (0 <= i < j < self.n):
                raise ValidationError(f"edge ({i}, {j}) out of range or unordered")
            if prev is not None and (i, j) <= prev:
                raise ValidationError("edges not in canonical lexicographic order")
            prev = (i, j)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a Graph from any iterable of (u, v) pairs, canonicalizing."""
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValidationError(f"self-loop at node {u}")
            canon.add((min(u, v), max(u, v)))
        return cls(n=n, edges=tuple(sorted(canon)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbor list per node."""
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    @cached_property
    def edge_array(self) -> np.ndarray:
        """(m, 2) int64 array of canonical edges; empty graphs give shape (0, 2)."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    @cached_property
    def edge_position(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def adjacency_matrix(self) -> sparse.csr_matrix:
        rows, cols = [], []
        for i, j in self.edges:
            rows += [i, j]
            cols += [j, i]
        data = np.ones(len(rows), dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def halfedge_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR layout of directed half-edges in canonical (i asc, j asc) order.

        Returns (start, node, eidx): half-edges of node i live at positions
        start[i]..start[i+1], node[k] is the neighbor and eidx[k] the index of
        the undirected edge in canonical edge order.
        """
        start = np.zeros(self.n + 1, dtype=np.int64)
        start[1:] = np.cumsum(self.degrees)
        node = np.zeros(2 * self.m, dtype=np.int64)
        eidx = np.zeros(2 * self.m, dtype=np.int64)
        cursor = start[:-1].copy()
        for k, (i, j) in enumerate(self.edges):
            node[cursor[i]] = j
            eidx[cursor[i]] = k
            cursor[i] += 1
            node[cursor[j]] = i
            eidx[cursor[j]] = k
            cursor[j] += 1
        # lexicographic edge order already yields sorted neighbor slices;
        # the sort below is a cheap guard for that assumption
        for i in range(self.n):
            lo, hi = start[i], start[i + 1]
            order = np.argsort(node[lo:hi], kind="stable")
            node[lo:hi] = node[lo:hi][order]
            eidx[lo:hi] = eidx[lo:hi][order]
        return start, node, eidx


_N_DIRECTIVE = "# n="


def load_edge_list(text: str) -> Graph:
    """Parse a line-oriented edge list into a Graph.

    Each non-comment line holds two distinct non-negative integers. Lines
    starting with ``#`` are comments; a ``# n=K`` directive pins the node
    count (used by the generators to preserve isolated nodes on round-trip).
    Duplicate edges collapse; the node count is max id + 1 unless a larger
    ``# n=`` directive is present.
    """
    edges = set()
    max_id = -1
    header_n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            compact = line.replace(" ", "")
            if compact.startswith("#n="):
                try:
                    header_n = max(header_n, int(compact[3:]))
                except ValueError:
                    raise GraphParseError("malformed '# n=' directive", lineno)
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphParseError(f"expected two node ids, got {len(tokens)} tokens", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphParseError(f"non-integer node id in {tokens!r}", lineno)
        if u < 0 or v < 0:
            raise GraphParseError("negative node id", lineno)
        if u == v:
            raise ValidationError([f"line {lineno}: self-loop at node {u}"])
        edges.add((min(u, v), max(u, v)))
        max_id = max(max_id, u, v)
    n = max(max_id + 1, header_n, 1)
    return Graph(n=n, edges=tuple(sorted(edges)))


def dump_edge_list(g: Graph) -> str:
    """Serialize a Graph to the edge-list text format, with a node-count header."""
    lines = [f"{_N_DIRECTIVE}{g.n}"]
    lines += [f"{i} {j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p): each of the n(n-1)/2 pairs kept with probability p.

    Deterministic given ``seed``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not (0.0 <= p <= 1.0):
        raise ValidationError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    edges = tuple(zip(iu[mask].tolist(), ju[mask].tolist()))
    return Graph(n=n, edges=edges)


def gen_barabasi_albert(n: int, m_attach: int, seed: int) -> Graph:
    """Barabasi-Albert preferential attachment graph.

    Starts from a complete graph on ``m_attach + 1`` nodes; every arriving
    node links to ``m_attach`` distinct existing nodes chosen with
    probability proportional to degree. Deterministic given ``seed``.
    """
    if not (1 <= m_attach < n):
        raise ValidationError("need 1 <= m_attach < n")
    rng = np.random.default_rng(seed)
    edges = []
    repeated = []  # node id repeated once per incident edge endpoint
    core = m_attach + 1
    for i in range(core):
        for j in range(i + 1, core):
            edges.append((i, j))
            repeated += [i, j]
    for new in range(core, n):
        targets = set()
        while len(targets) < m_attach:
            targets.add(repeated[rng.integers(len(repeated))])
        for t in sorted(targets):
            edges.append((t, new))
            repeated += [t, new]
    return Graph.from_edges(n, edges)


def is_connected(g: Graph) -> bool:
    """True iff the graph has a single connected component."""
    seen = np.zeros(g.n, dtype=bool)
    queue = deque([0])
    seen[0] = True
    count = 1
    while queue:
        u = queue.popleft()
        for v in g.neighbors[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == g.n


def power_iteration(A, tol: float, max_iter: int = 1_000_000):
    """Dominant eigenpair of a nonnegative primitive matrix by power iteration.

    Starts from the all-ones direction. Converges when successive Rayleigh
    quotients differ by less than ``tol`` and the residual ``||Av - lam v||_inf``
    drops below ``tol``. Returns (eigenvalue, unit eigenvector, iterations).
    """
    dim = A.shape[0]
    v = np.full(dim, 1.0 / np.sqrt(dim))
    lam_prev = None
    for it in range(1, max_iter + 1):
        w = A @ v
        lam = float(v @ w)
        resid = float(np.max(np.abs(w - lam * v)))
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0, v, it  # v is in the kernel: eigenvalue 0
        v = w / nrm
        if lam_prev is not None and abs(lam - lam_prev) < tol and resid <= tol:
            return lam, v, it
        lam_prev = lam
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (tol={tol})"
    )


def _shifted_perron(g: Graph, tol: float):
    # A + I is primitive for connected graphs (bipartite adjacency alone is
    # periodic, which stalls plain power iteration), and shares eigenvectors
    # with A while shifting every eigenvalue by +1.
    if not is_connected(g):
        raise ValidationError("graph must be connected")
    B = (g.adjacency_matrix + sparse.identity(g.n, format="csr")).tocsr()
    lam, v, _ = power_iteration(B, tol)
    return lam - 1.0, v


def spectral_radius(g: Graph, tol: float = 1e-10) -> float:
    """Largest adjacency eigenvalue of a connected graph, to absolute accuracy tol."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    lam, _ = _shifted_perron(g, tol)
    return lam


def eigenvector_centrality(g: Graph, tol: float = 1e-10) -> np.ndarray:
    """Entrywise-positive dominant eigenvector of the adjacency matrix, unit 2-norm."""
    _, v = _shifted_perron(g, tol)
    v = np.abs(v)
    if np.min(v) <= 0:
        raise ConvergenceError("eigenvector centrality has a nonpositive entry")
    return v / np.linalg.norm(v)


def edge_betweenness(g: Graph) -> np.ndarray:
    """Shortest-path betweenness per edge, in canonical edge order.

    Counts unordered node pairs, splitting credit fractionally across tied
    shortest paths (standard breadth-first accumulation).
    """
    if not is_connected(g):
        raise ValidationError("graph must be connected")
    pos = g.edge_position
    eb = np.zeros(g.m, dtype=np.float64)
    for s in range(g.n):
        dist = [-1] * g.n
        sigma = [0.0] * g.n
        preds: list[list[int]] = [[] for _ in range(g.n)]
        order = []
        dist[s] = 0
        sigma[s] = 1.0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for w in g.neighbors[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = [0.0] * g.n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for u in preds[w]:
                credit = sigma[u] * coeff
                eb[pos[(min(u, w), max(u, w))]] += credit
                delta[u] += credit
    return eb / 2.0  # each unordered pair was visited from both endpoints


def degree_product(g: Graph) -> np.ndarray:
    """d_i * d_j for every canonical edge (i, j)."""
    d = g.degrees
    if g.m == 0:
        return np.zeros(0, dtype=np.float64)
    ea = g.edge_array
    return (d[ea[:, 0]] * d[ea[:, 1]]).astype(np.float64)
