"""Cost-optimal eradication of the adaptive-SIS epidemic.

Given tuning costs for the infection, recovery, and cutting rates, find the
cheapest rates inside box bounds such that the infection probabilities decay
exponentially at a prescribed rate lam_bar. The spectral condition
lambda_max(M) <= -lam_bar is equivalent to the existence of an entrywise
positive certificate vector v with M v < -lam_bar v, which turns the problem
into a geometric program after substituting the decreasing variables:
delta~_i = q_i - delta_i and phi~_ij = s_ij - phi_ij.

Adding (lam_bar + kappa) I with kappa = max(q) + max(psi) + max(s) to M makes
every coefficient of the shifted matrix a posynomial in the positive decision
variables (the shift applies to the whole matrix so that
(M + (lam_bar + kappa) I) v < kappa v is exactly Mv < -lam_bar v). The
resulting geometric program is solved in log space with a barrier method:
variables are replaced by their logarithms, posynomial constraints become
log-sum-exp inequalities, and Newton steps drive a standard path-following
loop to the requested duality gap.

Reconnecting rates psi enter the matrix with both signs after the shift, so
they cannot be decision variables; they stay fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import GpInfeasibleError, GpSolverError, ValidationError
from .graphs import Graph, degree_product, edge_betweenness, eigenvector_centrality, is_connected
from .params import AsisParams, q_index
from .threshold import ThresholdMatrix, build_M, lambda_max

__all__ = [
    "TunableFamily",
    "FixedFamily",
    "CostModel",
    "Normalization",
    "normalize_costs",
    "evaluate_cost",
    "GpProblem",
    "build_gp",
    "GpSolution",
    "solve_gp",
    "VerificationReport",
    "verify",
    "CentralityRow",
    "centrality_report",
]


@dataclass(frozen=True)
class TunableFamily:
    """A rate family that is a decision variable: box bounds plus cost shape.

    ``exponents`` holds one positive exponent per rate entry. ``offsets``
    (the q_i / s_ij constants) are required for the decreasing families
    (recovery, cutting) and must exceed the upper bound so the substituted
    variables stay positive; the infection family has no offsets.
    """

    lower: float
    upper: float
    exponents: np.ndarray
    offsets: np.ndarray | None = None


@dataclass(frozen=True)
class FixedFamily:
    """A rate family pinned to given values and excluded from the cost."""

    values: np.ndarray


@dataclass(frozen=True)
class CostModel:
    """Cost structure and target decay rate of the eradication problem."""

    beta: TunableFamily | FixedFamily
    delta: TunableFamily | FixedFamily
    phi: TunableFamily | FixedFamily
    decay_rate: float


@dataclass(frozen=True)
class Normalization:
    """Constants c1..c6 scaling each family's cost to [0, 1] over its box."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float


def _family_power_sum(arg: np.ndarray, exponents: np.ndarray) -> float:
    return float(np.sum(arg ** (-exponents)))


def _normalize_family(fam, name: str) -> tuple[float, float]:
    """Solve the 2x2 normalization for one tunable family.

    The infection cost (no offsets) is decreasing: zero at the upper bound,
    one at the lower. The recovery/cutting costs work through their offsets
    so the original costs are increasing: zero at the lower bound, one at
    the upper.
    """
    if isinstance(fam, FixedFamily):
        return 0.0, 0.0
    if not fam.lower < fam.upper:
        raise ValidationError([f"{name}: singular normalization, need lower < upper"])
    if np.any(fam.exponents <= 0):
        raise ValidationError([f"{name}: exponents must be positive"])
    if fam.offsets is None:
        if fam.lower <= 0:
            raise ValidationError([f"{name}: lower bound must be positive"])
        s_lo = _family_power_sum(np.full_like(fam.exponents, fam.lower), fam.exponents)
        s_hi = _family_power_sum(np.full_like(fam.exponents, fam.upper), fam.exponents)
        coef = 1.0 / (s_lo - s_hi)
        const = -coef * s_hi
        return const, coef
    if np.any(fam.offsets <= fam.upper):
        raise ValidationError([f"{name}: offsets must exceed the upper bound"])
    s_hi = _family_power_sum(fam.offsets - fam.upper, fam.exponents)
    s_lo = _family_power_sum(fam.offsets - fam.lower, fam.exponents)
    coef = 1.0 / (s_hi - s_lo)
    const = -coef * s_lo
    return const, coef


def normalize_costs(model: CostModel) -> Normalization:
    """Normalization constants for all three families (zeros for fixed ones).

    For the infection cost f, f(upper bounds) = 0 and f(lower bounds) = 1;
    for the recovery and cutting costs g and h it is the reverse. The
    returned coefficients c2, c4, c6 are positive by construction; the
    constants c1, c3, c5 may be negative and are excluded from the optimized
    posynomial objective, then re-added for reporting.
    """
    c1, c2 = _normalize_family(model.beta, "beta")
    c3, c4 = _normalize_family(model.delta, "delta")
    c5, c6 = _normalize_family(model.phi, "phi")
    return Normalization(c1, c2, c3, c4, c5, c6)


def evaluate_cost(model: CostModel, norm: Normalization,
                  beta: np.ndarray, delta: np.ndarray, phi: np.ndarray) -> float:
    """Total tuning cost f + g + h at given rates, normalization included."""
    total = 0.0
    if isinstance(model.beta, TunableFamily):
        total += norm.c1 + norm.c2 * _family_power_sum(np.asarray(beta, float),
                                                       model.beta.exponents)
    if isinstance(model.delta, TunableFamily):
        total += norm.c3 + norm.c4 * _family_power_sum(model.delta.offsets - delta,
                                                       model.delta.exponents)
    if isinstance(model.phi, TunableFamily):
        total += norm.c5 + norm.c6 * _family_power_sum(model.phi.offsets - phi,
                                                       model.phi.exponents)
    return total


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------


@dataclass
class _Layout:
    """Variable index layout of the log-space program (v_0 is pinned to 1)."""

    n: int
    m2: int
    beta_off: int  # -1 when fixed
    delta_off: int
    phi_off: int
    v_off: int
    nvars: int

    def v_var(self, k: int) -> int:
        # certificate entry k; entry 0 is the pinned scale and has no variable
        return self.v_off + k - 1


@dataclass
class GpProblem:
    """Posynomial program assembled from a graph, fixed psi, and a cost model.

    ``constraints`` is a list of (label, terms) with each term a
    (coefficient, {var_index: exponent}) pair; the objective is a plain term
    list. All coefficients are positive by construction.
    """

    graph: Graph
    psi: np.ndarray
    model: CostModel
    norm: Normalization
    layout: _Layout
    objective: list
    constraints: list
    const_offset: float
    kappa: float
    epsilon: float
    q_vec: np.ndarray  # per-node offsets (q_i, or the fixed delta values)
    s_vec: np.ndarray  # per-directed-pair offsets (s_ij, or fixed phi values)

    @property
    def variable_count(self) -> int:
        """Decision variables of the underlying program, certificate included."""
        n, m2 = self.layout.n, self.layout.m2
        total = n + m2  # certificate vector v
        if self.layout.beta_off >= 0:
            total += n
        if self.layout.delta_off >= 0:
            total += n
        if self.layout.phi_off >= 0:
            total += m2
        return total


def _as_psi_array(g: Graph, psi) -> np.ndarray:
    arr = np.asarray(psi, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(g.m, float(arr))
    if arr.shape != (g.m,):
        raise ValidationError(["psi must be a scalar or one entry per edge"])
    if np.any(arr <= 0):
        raise ValidationError(["psi entries must be positive"])
    return arr


def _family_sizes_ok(model: CostModel, n: int, m2: int) -> None:
    def size_of(fam):
        return fam.values.size if isinstance(fam, FixedFamily) else fam.exponents.size

    for fam, name, want in ((model.beta, "beta", n), (model.delta, "delta", n),
                            (model.phi, "phi", m2)):
        if size_of(fam) != want:
            raise ValidationError([f"{name} family must have {want} entries"])
        if isinstance(fam, FixedFamily) and np.any(fam.values <= 0):
            raise ValidationError([f"{name}: fixed values must be positive"])
        if isinstance(fam, TunableFamily) and fam.offsets is not None \
                and fam.offsets.size != want:
            raise ValidationError([f"{name}: offsets must have {want} entries"])


def build_gp(g: Graph, psi, model: CostModel, epsilon: float = 1e-9) -> GpProblem:
    """Transform the eradication problem into an explicit geometric program.

    Emits the objective posynomial, one posynomial constraint per row of the
    shifted matrix inequality (divided by kappa v_k and tightened by the
    factor 1 - epsilon to keep the feasible interior), and monomial box
    constraints for every tunable rate.
    """
    if not is_connected(g):
        raise ValidationError(["graph must be connected"])
    if not model.decay_rate > 0:
        raise ValidationError(["decay_rate must be positive"])
    psi = _as_psi_array(g, psi)
    n, m = g.n, g.m
    m2 = 2 * m
    _family_sizes_ok(model, n, m2)
    if isinstance(model.delta, TunableFamily) and model.delta.offsets is None:
        raise ValidationError(["delta family needs offsets q_i > upper bound"])
    if isinstance(model.phi, TunableFamily) and model.phi.offsets is None:
        raise ValidationError(["phi family needs offsets s_ij > upper bound"])
    norm = normalize_costs(model)
    qi = q_index(g)

    q_vec = (model.delta.values if isinstance(model.delta, FixedFamily)
             else model.delta.offsets).astype(np.float64)
    s_vec = (model.phi.values if isinstance(model.phi, FixedFamily)
             else model.phi.offsets).astype(np.float64)
    lam_bar = float(model.decay_rate)
    kappa = float(np.max(q_vec) + np.max(psi) + np.max(s_vec))

    # variable layout
    off = 0
    beta_off = delta_off = phi_off = -1
    if isinstance(model.beta, TunableFamily):
        beta_off, off = off, off + n
    if isinstance(model.delta, TunableFamily):
        delta_off, off = off, off + n
    if isinstance(model.phi, TunableFamily):
        phi_off, off = off, off + m2
    v_off = off
    nvars = off + (n + m2 - 1)
    lay = _Layout(n=n, m2=m2, beta_off=beta_off, delta_off=delta_off,
                  phi_off=phi_off, v_off=v_off, nvars=nvars)

    def v_mono(k: int, power: int, expo: dict) -> None:
        # multiply the monomial by v_k**power (v_0 contributes nothing)
        if k != 0:
            var = lay.v_var(k)
            expo[var] = expo.get(var, 0.0) + power

    denom = (1.0 - epsilon) * kappa
    constraints = []
    dim = n + m2

    for row in range(dim):
        terms = []
        if row < n:
            i = row
            const = kappa + lam_bar - q_vec[i]
            assert const > 0, "shift leaves a negative node-diagonal constant"
            if delta_off >= 0:
                terms.append((1.0 / denom, {delta_off + i: 1.0}))
            terms.append((const / denom, {}))
            for pin in qi.incoming(i):
                expo: dict = {}
                coef = 1.0 / denom
                if beta_off >= 0:
                    expo[beta_off + i] = 1.0
                else:
                    coef *= model.beta.values[i]
                v_mono(n + pin, +1, expo)
                v_mono(row, -1, expo)
                terms.append((coef, expo))
            label = f"row p_{i}"
        else:
            pos = row - n
            i, j = qi.pair(pos)
            e = g.edge_position[(min(i, j), max(i, j))]
            const = kappa + lam_bar - q_vec[i] - s_vec[pos] - psi[e]
            assert const > 0, "shift leaves a negative q-diagonal constant"
            if delta_off >= 0:
                terms.append((1.0 / denom, {delta_off + i: 1.0}))
            if phi_off >= 0:
                terms.append((1.0 / denom, {phi_off + pos: 1.0}))
            terms.append((const / denom, {}))
            expo = {}
            v_mono(i, +1, expo)
            v_mono(row, -1, expo)
            terms.append((psi[e] / denom, expo))
            for pin in qi.incoming(i):
                expo = {}
                coef = 1.0 / denom
                if beta_off >= 0:
                    expo[beta_off + i] = 1.0
                else:
                    coef *= model.beta.values[i]
                v_mono(n + pin, +1, expo)
                v_mono(row, -1, expo)
                terms.append((coef, expo))
            label = f"row q_({i},{j})"
        constraints.append((label, terms))

    # monomial box constraints
    if beta_off >= 0:
        fam = model.beta
        for i in range(n):
            constraints.append((f"beta_ub_{i}", [(1.0 / fam.upper, {beta_off + i: 1.0})]))
            constraints.append((f"beta_lb_{i}", [(fam.lower, {beta_off + i: -1.0})]))
    if delta_off >= 0:
        fam = model.delta
        for i in range(n):
            hi = q_vec[i] - fam.lower   # largest admissible delta~
            lo = q_vec[i] - fam.upper   # smallest admissible delta~ (positive)
            constraints.append((f"delta_ub_{i}", [(1.0 / hi, {delta_off + i: 1.0})]))
            constraints.append((f"delta_lb_{i}", [(lo, {delta_off + i: -1.0})]))
    if phi_off >= 0:
        fam = model.phi
        for pos in range(m2):
            hi = s_vec[pos] - fam.lower
            lo = s_vec[pos] - fam.upper
            i, j = qi.pair(pos)
            constraints.append((f"phi_ub_({i},{j})", [(1.0 / hi, {phi_off + pos: 1.0})]))
            constraints.append((f"phi_lb_({i},{j})", [(lo, {phi_off + pos: -1.0})]))

    # posynomial objective (normalization constants re-added for reporting)
    objective = []
    const_offset = 0.0
    if beta_off >= 0:
        for i in range(n):
            objective.append((norm.c2, {beta_off + i: -float(model.beta.exponents[i])}))
        const_offset += norm.c1
    if delta_off >= 0:
        for i in range(n):
            objective.append((norm.c4, {delta_off + i: -float(model.delta.exponents[i])}))
        const_offset += norm.c3
    if phi_off >= 0:
        for pos in range(m2):
            objective.append((norm.c6, {phi_off + pos: -float(model.phi.exponents[pos])}))
        const_offset += norm.c5
    if not objective:
        raise ValidationError(["at least one rate family must be tunable"])
    for coef, _ in objective:
        assert coef > 0, "posynomial objective needs positive coefficients"

    return GpProblem(graph=g, psi=psi, model=model, norm=norm, layout=lay,
                     objective=objective, constraints=constraints,
                     const_offset=const_offset, kappa=kappa, epsilon=epsilon,
                     q_vec=q_vec, s_vec=s_vec)


# ---------------------------------------------------------------------------
# log-space barrier solver
# ---------------------------------------------------------------------------


class _LseProgram:
    """Flattened log-sum-exp views of the posynomial program."""

    def __init__(self, problem: GpProblem):
        self.nvars = problem.layout.nvars
        self.labels = [label for label, _ in problem.constraints]

        def flatten(term_lists):
            logc, t_con, e_term, e_var, e_exp = [], [], [], [], []
            ptr = [0]
            for cid, terms in enumerate(term_lists):
                for coef, expo in terms:
                    t = len(logc)
                    logc.append(np.log(coef))
                    t_con.append(cid)
                    for var, ex in expo.items():
                        e_term.append(t)
                        e_var.append(var)
                        e_exp.append(ex)
                ptr.append(len(logc))
            return (np.asarray(logc), np.asarray(t_con, dtype=np.int64),
                    np.asarray(ptr, dtype=np.int64),
                    np.asarray(e_term, dtype=np.int64),
                    np.asarray(e_var, dtype=np.int64), np.asarray(e_exp))

        self.c_logc, self.c_con, self.c_ptr, self.c_eterm, self.c_evar, self.c_eexp = \
            flatten(terms for _, terms in problem.constraints)
        self.o_logc, _, _, self.o_eterm, self.o_evar, self.o_eexp = \
            flatten([problem.objective])
        self.n_cons = len(problem.constraints)

        # per-constraint local structure for Hessian assembly; entry arrays are
        # emitted in term order, so each constraint owns a contiguous slice
        self.local = []
        entry_lo = np.searchsorted(self.c_eterm, self.c_ptr[:-1], side="left")
        entry_hi = np.searchsorted(self.c_eterm, self.c_ptr[1:], side="left")
        for cid in range(self.n_cons):
            t0, t1 = self.c_ptr[cid], self.c_ptr[cid + 1]
            e0, e1 = entry_lo[cid], entry_hi[cid]
            vars_j = np.unique(self.c_evar[e0:e1])
            A = np.zeros((t1 - t0, vars_j.size))
            colmap = {v: k for k, v in enumerate(vars_j)}
            for term, var, ex in zip(self.c_eterm[e0:e1], self.c_evar[e0:e1],
                                     self.c_eexp[e0:e1]):
                A[term - t0, colmap[var]] = ex
            self.local.append((int(t0), int(t1), vars_j, A))
        o_vars = np.unique(self.o_evar) if self.o_evar.size else np.zeros(0, np.int64)
        A0 = np.zeros((self.o_logc.size, o_vars.size))
        colmap = {v: k for k, v in enumerate(o_vars)}
        for term, var, ex in zip(self.o_eterm, self.o_evar, self.o_eexp):
            A0[term, colmap[var]] = ex
        self.o_vars, self.o_A = o_vars, A0

    def _lin(self, z, logc, eterm, evar, eexp):
        lin = logc.copy()
        if eterm.size:
            np.add.at(lin, eterm, eexp * z[evar])
        return lin

    def constraint_values(self, z):
        lin = self._lin(z, self.c_logc, self.c_eterm, self.c_evar, self.c_eexp)
        mx = np.maximum.reduceat(lin, self.c_ptr[:-1])
        shifted = np.exp(lin - mx[self.c_con])
        sums = np.add.reduceat(shifted, self.c_ptr[:-1])
        f = mx + np.log(sums)
        w = shifted / sums[self.c_con]
        return f, w

    def objective_value(self, z):
        lin = self._lin(z, self.o_logc, self.o_eterm, self.o_evar, self.o_eexp)
        mx = float(np.max(lin))
        shifted = np.exp(lin - mx)
        s = float(np.sum(shifted))
        return mx + np.log(s), shifted / s

    def gradient(self, z, inv_t, f, w, w0):
        # scaled potential f0 + (1/t) * sum -log(-f_j): O(1) values throughout
        grad = np.zeros(self.nvars)
        if self.o_evar.size:
            np.add.at(grad, self.o_evar, self.o_eexp * w0[self.o_eterm])
        if self.c_evar.size:
            mult = inv_t * w / (-f[self.c_con])
            np.add.at(grad, self.c_evar, self.c_eexp * mult[self.c_eterm])
        return grad

    def hessian(self, inv_t, f, w, w0):
        H = np.zeros((self.nvars, self.nvars))
        if self.o_vars.size:
            A = self.o_A
            g0 = A.T @ w0
            H0 = A.T @ (A * w0[:, None]) - np.outer(g0, g0)
            H[np.ix_(self.o_vars, self.o_vars)] += H0
        for cid, (t0, t1, vars_j, A) in enumerate(self.local):
            if vars_j.size == 0:
                continue
            wj = w[t0:t1]
            u = -f[cid]
            gj = A.T @ wj
            Hj = A.T @ (A * wj[:, None])
            block = (Hj - np.outer(gj, gj)) / u + np.outer(gj, gj) / (u * u)
            H[np.ix_(vars_j, vars_j)] += inv_t * block
        return H


@dataclass(frozen=True)
class GpSolution:
    """Optimal rates with their positivity certificate and solver diagnostics."""

    beta: np.ndarray
    delta: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    cost: float
    lambda_max: float
    decay_rate: float
    iterations: int
    duality_gap: float


def _rates_at_corner(problem: GpProblem, shrink: float):
    """Most aggressive admissible rates, pulled inside the box by ``shrink``."""
    model = problem.model
    n, m2 = problem.layout.n, problem.layout.m2
    if isinstance(model.beta, FixedFamily):
        beta = model.beta.values.copy()
    else:
        beta = np.full(n, model.beta.lower + shrink * (model.beta.upper - model.beta.lower))
    if isinstance(model.delta, FixedFamily):
        delta = model.delta.values.copy()
    else:
        delta = np.full(n, model.delta.upper - shrink * (model.delta.upper - model.delta.lower))
    if isinstance(model.phi, FixedFamily):
        phi = model.phi.values.copy()
    else:
        phi = np.full(m2, model.phi.upper - shrink * (model.phi.upper - model.phi.lower))
    return beta, delta, phi


def _spectral_at(problem: GpProblem, beta, delta, phi):
    params = AsisParams(beta=beta, delta=delta, phi=phi, psi=problem.psi)
    tm = build_M(problem.graph, params)
    return lambda_max(tm, tol=1e-12, return_vector=True)


def _initial_point(problem: GpProblem):
    lay = problem.layout
    lam_bar = problem.model.decay_rate
    margin = 10.0 * problem.epsilon * problem.kappa + 1e-12
    for shrink in (1e-4, 1e-3, 1e-2, 0.1):
        beta, delta, phi = _rates_at_corner(problem, shrink)
        lam, vec = _spectral_at(problem, beta, delta, phi)
        if lam <= -lam_bar - margin:
            node0 = vec[0]
            v = np.abs(vec) / abs(node0)
            z = np.zeros(lay.nvars)
            if lay.beta_off >= 0:
                z[lay.beta_off:lay.beta_off + lay.n] = np.log(beta)
            if lay.delta_off >= 0:
                z[lay.delta_off:lay.delta_off + lay.n] = np.log(problem.q_vec - delta)
            if lay.phi_off >= 0:
                z[lay.phi_off:lay.phi_off + lay.m2] = np.log(problem.s_vec - phi)
            z[lay.v_off:] = np.log(v[1:])
            return z
    beta, delta, phi = _rates_at_corner(problem, 0.0)
    lam, _ = _spectral_at(problem, beta, delta, phi)
    raise GpInfeasibleError(
        f"the decay target is unattainable or numerically binding: the most "
        f"aggressive rates give lambda_max(M) = {lam:.6g} vs required "
        f"<= -{lam_bar:.6g} with interior margin",
        binding="spectral abscissa at the aggressive rate corner")


def solve_gp(problem: GpProblem, tol: float = 1e-8, *, newton_tol: float = 1e-9,
             mu: float = 10.0, max_outer: int = 64, max_newton: int = 200) -> GpSolution:
    """Solve the geometric program by a log-space barrier method.

    Follows the central path with Newton steps and backtracking line search,
    multiplying the path parameter by ``mu`` each round until the duality-gap
    bound (#constraints / t) drops below ``tol``. Raises GpInfeasibleError if
    no rates inside the bounds can reach the decay target, GpSolverError on
    numerical failure.
    """
    # exact feasibility pre-check: lambda_max is monotone in each rate, so the
    # aggressive corner minimizes it over the box
    beta_c, delta_c, phi_c = _rates_at_corner(problem, 0.0)
    lam_corner, _ = _spectral_at(problem, beta_c, delta_c, phi_c)
    if lam_corner > -problem.model.decay_rate:
        raise GpInfeasibleError(
            f"even the most aggressive rates give lambda_max(M) = {lam_corner:.6g} > "
            f"-{problem.model.decay_rate:.6g}",
            binding="spectral abscissa at the aggressive rate corner")

    prog = _LseProgram(problem)
    z = _initial_point(problem)
    f, w = prog.constraint_values(z)
    if np.any(f >= 0):
        worst = prog.labels[int(np.argmax(f))]
        raise GpSolverError(f"initial point infeasible at constraint '{worst}'")

    n_cons = prog.n_cons
    t_path = 1.0
    newton_steps = 0
    step_budget = max_outer * max_newton

    while True:
        # center at the current path parameter (potential scaled by 1/t so
        # line-search comparisons stay well above float rounding)
        inv_t = 1.0 / t_path
        for _ in range(max_newton):
            if newton_steps > step_budget:
                raise GpSolverError("Newton step budget exhausted")
            f, w = prog.constraint_values(z)
            f0, w0 = prog.objective_value(z)
            grad = prog.gradient(z, inv_t, f, w, w0)
            H = prog.hessian(inv_t, f, w, w0)
            step = None
            for ridge in (0.0, 1e-14, 1e-11, 1e-8):
                try:
                    cf = linalg.cho_factor(H + ridge * np.eye(prog.nvars), lower=True)
                    step = linalg.cho_solve(cf, -grad)
                    break
                except linalg.LinAlgError:
                    continue
            if step is None:
                raise GpSolverError("Newton system not positive definite")
            decrement = float(-grad @ step)
            if decrement / 2.0 <= newton_tol:
                break
            F_cur = f0 - inv_t * float(np.sum(np.log(-f)))
            alpha = 1.0
            for _ in range(80):
                z_try = z + alpha * step
                f_try, _ = prog.constraint_values(z_try)
                if np.all(f_try < 0):
                    f0_try, _ = prog.objective_value(z_try)
                    F_try = f0_try - inv_t * float(np.sum(np.log(-f_try)))
                    if F_try <= F_cur - 0.1 * alpha * decrement:
                        break
                alpha *= 0.5
            else:
                raise GpSolverError("line search failed to make progress")
            z = z + alpha * step
            newton_steps += 1
        else:
            raise GpSolverError(f"centering did not converge at t = {t_path:.3g}")
        if n_cons / t_path <= tol:
            break
        t_path *= mu

    lay = problem.layout
    model = problem.model
    vals = np.exp(z)
    if lay.beta_off >= 0:
        beta = vals[lay.beta_off:lay.beta_off + lay.n].copy()
    else:
        beta = model.beta.values.copy()
    if lay.delta_off >= 0:
        delta = problem.q_vec - vals[lay.delta_off:lay.delta_off + lay.n]
    else:
        delta = model.delta.values.copy()
    if lay.phi_off >= 0:
        phi = problem.s_vec - vals[lay.phi_off:lay.phi_off + lay.m2]
    else:
        phi = model.phi.values.copy()
    v = np.concatenate([[1.0], vals[lay.v_off:]])
    lam_opt, _ = _spectral_at(problem, beta, delta, phi)
    cost = evaluate_cost(model, problem.norm, beta, delta, phi)
    return GpSolution(beta=beta, delta=delta, phi=phi, v=v, cost=cost,
                      lambda_max=lam_opt, decay_rate=model.decay_rate,
                      iterations=newton_steps, duality_gap=n_cons / t_path)


@dataclass(frozen=True)
class VerificationReport:
    """Independent check of a returned solution against the original problem."""

    passed: bool
    lambda_max: float
    eigenvalue_ok: bool
    bounds_ok: bool
    certificate_ok: bool
    worst_margin: float  # max_k (Mv)_k + lam_bar v_k, negative when valid
    messages: tuple[str, ...]


def verify(g: Graph, psi, solution: GpSolution, lam_bar: float | None = None,
           model: CostModel | None = None, tol: float = 1e-6) -> VerificationReport:
    """Re-derive the guarantees of a solution from scratch.

    Rebuilds M at the returned rates and checks lambda_max(M) <= -lam_bar +
    tol, the box bounds (when the cost model is supplied), and the entrywise
    certificate inequality (Mv)_k < -lam_bar v_k. Report-only: never raises.
    """
    psi = _as_psi_array(g, psi)
    if lam_bar is None:
        lam_bar = solution.decay_rate
    msgs = []
    params = AsisParams(beta=solution.beta, delta=solution.delta,
                        phi=solution.phi, psi=psi)
    tm = build_M(g, params)
    lam = lambda_max(tm, tol=1e-12)
    eig_ok = lam <= -lam_bar + tol
    if not eig_ok:
        msgs.append(f"lambda_max = {lam:.8g} exceeds -{lam_bar:.8g} + {tol:g}")

    bounds_ok = True
    if model is not None:
        slack = 1e-9
        checks = []
        if isinstance(model.beta, TunableFamily):
            checks.append(("beta", solution.beta, model.beta.lower, model.beta.upper))
        if isinstance(model.delta, TunableFamily):
            checks.append(("delta", solution.delta, model.delta.lower, model.delta.upper))
        if isinstance(model.phi, TunableFamily):
            checks.append(("phi", solution.phi, model.phi.lower, model.phi.upper))
        for name, arr, lo, hi in checks:
            if np.any(arr < lo - slack) or np.any(arr > hi + slack):
                bounds_ok = False
                msgs.append(f"{name} leaves its box [{lo:.6g}, {hi:.6g}]")

    v = np.asarray(solution.v, dtype=np.float64)
    cert_ok = bool(np.all(v > 0)) and v.size == tm.dim
    worst = np.inf
    if cert_ok:
        margins = tm.matrix @ v + lam_bar * v
        worst = float(np.max(margins))
        cert_ok = worst < 0
        if not cert_ok:
            msgs.append(f"certificate margin max (Mv + lam_bar v)_k = {worst:.3g} >= 0")
    else:
        msgs.append("certificate vector is not entrywise positive")

    return VerificationReport(passed=eig_ok and bounds_ok and cert_ok,
                              lambda_max=lam, eigenvalue_ok=eig_ok,
                              bounds_ok=bounds_ok, certificate_ok=cert_ok,
                              worst_margin=worst, messages=tuple(msgs))


@dataclass(frozen=True)
class CentralityRow:
    i: int
    j: int
    phi: float
    degree_product: float
    eigenvector_product: float
    betweenness: float


def centrality_report(g: Graph, solution: GpSolution) -> list[CentralityRow]:
    """Optimal cutting rate of every directed pair next to its edge centralities.

    Emits 2m rows (one per orientation); the three centrality columns are
    properties of the underlying undirected edge.
    """
    qi = q_index(g)
    dp = degree_product(g)
    eb = edge_betweenness(g)
    ev = eigenvector_centrality(g)
    rows = []
    for pos, (i, j) in enumerate(qi.pairs):
        e = g.edge_position[(min(i, j), max(i, j))]
        rows.append(CentralityRow(
            i=i, j=j, phi=float(solution.phi[pos]),
            degree_product=float(dp[e]),
            eigenvector_product=float(ev[i] * ev[j]),
            betweenness=float(eb[e])))
    return rows
