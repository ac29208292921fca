"""Markov-chain dynamics for the ferromagnetic Ising model with exact
desk-scale verification: cluster/heat-bath kernels, censored variants,
monotone grand couplings, spectral and operator-decomposition checks, and
sphere-influence (aggregate strong spatial mixing) computation.
"""

from .coupling import CouplingResult, coupling_time, monotonicity_audit
from .dynamics import DynamicsSpec, run_chain
from .exact import (
    SpectralReport,
    TransitionMatrix,
    censored_dominance,
    check_censoring_order,
    check_reversibility,
    check_stationarity,
    dirichlet_form,
    spectral_report,
    transition_matrix,
    tv_mixing_time,
    verify_decompositions,
)
from .graph import Graph, generate, load_edge_list
from .ising import (
    GibbsTable,
    beta_c,
    conditional_marginal,
    gibbs_exact,
    stochastically_dominates,
    weight,
)
from .ssm import InfluenceTable, assm_check, find_assm_radius, influence_au

__version__ = "0.1.0"
