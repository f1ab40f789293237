"""Heterogeneous ASIS rate containers and the canonical directed-pair index.

Rates live in flat numpy arrays keyed by the graph's canonical orders:
per-node arrays for infection (beta) and recovery (delta), one entry per
directed pair (i, j) for the cutting rates phi, and one entry per undirected
edge for the symmetric reconnecting rates psi.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .graphs import Graph

__all__ = [
    "AsisParams",
    "QIndex",
    "q_index",
    "homogeneous",
    "validate",
    "require_valid",
    "params_from_json",
    "params_to_json",
]


@dataclass(frozen=True)
class QIndex:
    """Canonical ordering of the 2m directed pairs (i, j), j in N_i.

    Pairs are grouped by i ascending and sorted by j inside each group, so the
    layout coincides with the graph's half-edge CSR. Positions are the row and
    column indices of the q-block in every matrix built downstream.
    """

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    @cached_property
    def _pos(self) -> dict[tuple[int, int], int]:
        return {p: k for k, p in enumerate(self.pairs)}

    def position(self, i: int, j: int) -> int:
        return self._pos[(i, j)]

    def pair(self, k: int) -> tuple[int, int]:
        return self.pairs[k]

    def incoming(self, i: int) -> tuple[int, ...]:
        """Positions of the pairs (k, i) for k in N_i; the selector row T_i."""
        return self._incoming[i]

    @cached_property
    def _incoming(self) -> tuple[tuple[int, ...], ...]:
        by_second: list[list[int]] = [[] for _ in range(self.n)]
        for k, (_, j) in enumerate(self.pairs):
            by_second[j].append(k)
        return tuple(tuple(v) for v in by_second)


def q_index(g: Graph) -> QIndex:
    """Canonical directed-pair index of a graph."""
    pairs = []
    for i in range(g.n):
        for j in g.neighbors[i]:
            pairs.append((i, j))
    return QIndex(n=g.n, pairs=tuple(pairs))


@dataclass(frozen=True)
class AsisParams:
    """Rate set of the heterogeneous ASIS model.

    beta, delta: per node. phi: per directed pair in QIndex order (phi[k] is
    the cutting rate applied to edge {i, j} while i is infected, for
    (i, j) = pair k). psi: per undirected edge in canonical edge order.
    """

    beta: np.ndarray
    delta: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def is_homogeneous(self) -> bool:
        return (
            np.all(self.beta == self.beta[0])
            and np.all(self.delta == self.delta[0])
            and (self.phi.size == 0 or np.all(self.phi == self.phi[0]))
            and (self.psi.size == 0 or np.all(self.psi == self.psi[0]))
        )


def homogeneous(g: Graph, beta: float, delta: float, phi: float, psi: float) -> AsisParams:
    """Constant-rate parameter set; all four rates must be positive."""
    for name, value in (("beta", beta), ("delta", delta), ("phi", phi), ("psi", psi)):
        if not value > 0:
            raise ValidationError([f"nonpositive rate: {name} = {value}"])
    return AsisParams(
        beta=np.full(g.n, float(beta)),
        delta=np.full(g.n, float(delta)),
        phi=np.full(2 * g.m, float(phi)),
        psi=np.full(g.m, float(psi)),
    )


def validate(g: Graph, params: AsisParams, for_simulation: bool = False) -> list[str]:
    """Return the list of invariant violations (empty means valid).

    ``for_simulation`` relaxes the strict-positivity check on beta and phi:
    the simulator is well defined with beta = 0 (no spreading) or phi = 0
    (no cutting), which sweep grids use as axis endpoints. The threshold and
    optimizer modules require all rates strictly positive.
    """
    errs = []
    if params.beta.shape != (g.n,):
        errs.append(f"size mismatch: beta has {params.beta.size} entries, expected {g.n}")
    if params.delta.shape != (g.n,):
        errs.append(f"size mismatch: delta has {params.delta.size} entries, expected {g.n}")
    if params.phi.shape != (2 * g.m,):
        errs.append(f"size mismatch: phi has {params.phi.size} entries, expected {2 * g.m}")
    if params.psi.shape != (g.m,):
        errs.append(f"size mismatch: psi has {params.psi.size} entries, expected {g.m}")
    if errs:
        return errs
    for name, arr in (("beta", params.beta), ("delta", params.delta),
                      ("phi", params.phi), ("psi", params.psi)):
        if arr.size == 0:
            continue
        if not np.all(np.isfinite(arr)):
            errs.append(f"non-finite rate in {name}")
        elif name in ("beta", "phi") and for_simulation:
            if not np.all(arr >= 0):
                errs.append(f"negative rate in {name}")
        elif not np.all(arr > 0):
            errs.append(f"nonpositive rate in {name}")
    return errs


def require_valid(g: Graph, params: AsisParams, for_simulation: bool = False) -> None:
    errs = validate(g, params, for_simulation=for_simulation)
    if errs:
        raise ValidationError(errs)


def params_from_json(g: Graph, doc: str | dict) -> AsisParams:
    """Load rates from a JSON document.

    Two layouts are accepted: the homogeneous shorthand
    ``{"beta": b, "delta": d, "phi": f, "psi": s}`` with scalar rates, and the
    full form ``{"n": n, "beta": [...], "delta": [...],
    "phi": {"i,j": value, ...}, "psi": {"i-j": value, ...}}`` where phi is
    keyed by directed pair and psi by undirected edge.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    required = {"beta", "delta", "phi", "psi"}
    missing = required - set(doc)
    if missing:
        raise ValidationError([f"missing parameter field(s): {sorted(missing)}"])
    if all(isinstance(doc[k], (int, float)) for k in required):
        return homogeneous(g, doc["beta"], doc["delta"], doc["phi"], doc["psi"])
    if "n" in doc and int(doc["n"]) != g.n:
        raise ValidationError([f"parameter file is for n={doc['n']}, graph has n={g.n}"])
    beta = np.asarray(doc["beta"], dtype=np.float64)
    delta = np.asarray(doc["delta"], dtype=np.float64)
    qi = q_index(g)
    phi = np.zeros(2 * g.m)
    for key, value in doc["phi"].items():
        try:
            i, j = (int(t) for t in key.split(","))
            phi[qi.position(i, j)] = float(value)
        except (KeyError, ValueError):
            raise ValidationError([f"phi key '{key}' is not a directed pair of the graph"])
    psi = np.zeros(g.m)
    for key, value in doc["psi"].items():
        try:
            u, v = sorted(int(t) for t in key.split("-"))
            psi[g.edge_position[(u, v)]] = float(value)
        except (KeyError, ValueError):
            raise ValidationError([f"psi key '{key}' is not an edge of the graph"])
    params = AsisParams(beta=beta, delta=delta, phi=phi, psi=psi)
    require_valid(g, params)
    return params


def params_to_json(g: Graph, params: AsisParams) -> dict:
    """Serialize rates to the full JSON layout."""
    qi = q_index(g)
    return {
        "n": g.n,
        "beta": params.beta.tolist(),
        "delta": params.delta.tolist(),
        "phi": {f"{i},{j}": params.phi[k] for k, (i, j) in enumerate(qi.pairs)},
        "psi": {f"{i}-{j}": params.psi[k] for k, (i, j) in enumerate(g.edges)},
    }
