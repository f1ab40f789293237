"""Adaptive-SIS epidemics on networks.

Simulation of the coupled node/edge Markov process, spectral lower bounds on
the epidemic threshold, exact small-instance oracles, and cost-optimal rate
tuning by geometric programming.
"""

__version__ = "0.1.0"

from .errors import (AsisError, ConvergenceError, GpInfeasibleError, GpSolverError,
                     GraphParseError, SimulationBudgetError, StateSpaceError,
                     ValidationError)
from .graphs import (Graph, dump_edge_list, degree_product, edge_betweenness,
                     eigenvector_centrality, gen_barabasi_albert, gen_erdos_renyi,
                     is_connected, load_edge_list, spectral_radius)
from .params import (AsisParams, QIndex, homogeneous, params_from_json,
                     params_to_json, q_index, validate)
from .simulate import (EventLog, McTransients, RunResult, SimState, SweepRow,
                       TrajectoryStats, TwinResult, derive_seed, mc_transients,
                       run, sweep, twin_metastable)
from .oracle import (generator_matrix, linear_bound, transient_mean_infected,
                     transient_node_marginals)
from .threshold import (ThresholdMatrix, build_M, effective_cutting_rate,
                        homogeneous_bound, homogeneous_lambda_quadratic,
                        is_irreducible, lambda_max)
from .optimize import (CostModel, FixedFamily, GpProblem, GpSolution, TunableFamily,
                       build_gp, centrality_report, evaluate_cost, normalize_costs,
                       solve_gp, verify)

__all__ = [name for name in dir() if not name.startswith("_")]
