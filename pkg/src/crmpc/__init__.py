"""Linear-quadratic MPC with online constraint removal.

Condenses MPC problems into dense parametric QPs, certifies inactive
constraint rows before each online solve from a Lyapunov cost bound, and
benchmarks the resulting speedup across active-set and interior-point
solvers.
"""

from .bench import (
    CampaignConfig,
    CdfSeries,
    QpRecord,
    compute_cdf,
    emit_outputs,
    prepared_example,
    run_campaign,
    summarize,
)
from .condense import CondensedQp, condense, condition_number, prestabilize, reduced_qp
from .crem import (
    CremPrecomp,
    RemovalContext,
    RemovalResult,
    StepStats,
    certify_inactive,
    gamma_update,
    mpc_step,
    precompute,
)
from .errors import (
    CrmpcError,
    DimensionMismatch,
    EmptySelection,
    InfeasibleState,
    IoFailure,
    NonConvergence,
    NotPositiveDefinite,
    SamplingStalled,
    UnstablePrestabilization,
)
from .examples import ExampleId, build_example
from .model import (
    HalfspaceSet,
    LtiSystem,
    MpcSpec,
    dare,
    dare_residual,
    load_spec,
    lqr_gain,
    save_spec,
    validate_spec,
)
from .qp import (
    QpInstance,
    QpResult,
    QpStatus,
    kkt_residual,
    solve_active_set,
    solve_ipm,
    solve_unconstrained,
)
from .redundancy import LpInstance, LpSolution, LpStatus, lp_solve, remove_redundant
from .sim import Termination, Trajectory, rollout, sample_x0

__version__ = "0.1.0"

__all__ = [
    "CampaignConfig", "CdfSeries", "QpRecord", "compute_cdf", "emit_outputs",
    "prepared_example", "run_campaign", "summarize",
    "CondensedQp", "condense", "condition_number", "prestabilize", "reduced_qp",
    "CremPrecomp", "RemovalContext", "RemovalResult", "StepStats",
    "certify_inactive", "gamma_update", "mpc_step", "precompute",
    "CrmpcError", "DimensionMismatch", "EmptySelection", "InfeasibleState",
    "IoFailure", "NonConvergence", "NotPositiveDefinite", "SamplingStalled",
    "UnstablePrestabilization",
    "ExampleId", "build_example",
    "HalfspaceSet", "LtiSystem", "MpcSpec", "dare", "dare_residual",
    "load_spec", "lqr_gain", "save_spec", "validate_spec",
    "QpInstance", "QpResult", "QpStatus", "kkt_residual",
    "solve_active_set", "solve_ipm", "solve_unconstrained",
    "LpInstance", "LpSolution", "LpStatus", "lp_solve", "remove_redundant",
    "Termination", "Trajectory", "rollout", "sample_x0",
]
