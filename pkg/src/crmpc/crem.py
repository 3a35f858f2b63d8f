"""Online certification and removal of inactive constraints.

The optimal cost is a Lyapunov function of the MPC closed loop: it does not
increase between consecutive steps.  The cost achieved at the previous step,

    gamma(t) = V*(x(t-1)),

is therefore an upper bound on V*(x(t)) available *before* solving the QP at
x(t).  Every input sequence with cost at most gamma lies in an ellipsoid
centered at the unconstrained optimizer U_uc = -H^-1 F x with shape H and
radius governed by rho = gamma - V(x, U_uc).  A constraint row is certified
inactive when even the ellipsoid's extreme point in its normal direction
stays strictly below the bound:

    G_i U_uc - w_i - E_i x + sqrt(2 rho d_i) < 0,    d_i = G_i H^-1 G_i'.

Certified rows cannot be active at the optimizer, so dropping them leaves
the optimizer of the strictly convex QP unchanged.  The control step then
either evaluates the closed form (all rows removed) or solves the reduced QP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .condense import CondensedQp
from .errors import InfeasibleState, NotPositiveDefinite
from .model import MpcSpec, _frozen
from .qp import QpInstance, QpResult, QpStatus, solve_active_set, solve_ipm


@dataclass(frozen=True)
class CremPrecomp:
    """State-independent quantities enabling O(q) certification per step."""

    hinv_f: np.ndarray   # -H^-1 F, evaluates the unconstrained optimizer
    d_vec: np.ndarray    # per-row G_i H^-1 G_i', clamped at zero
    schur_y: np.ndarray  # Y - F'H^-1 F; V at the unconstrained optimizer

    def __post_init__(self):
        for fname in ("hinv_f", "d_vec", "schur_y"):
            object.__setattr__(self, fname, _frozen(getattr(self, fname)))

    def unconstrained_input(self, x: np.ndarray) -> np.ndarray:
        return self.hinv_f @ x

    def unconstrained_cost(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.schur_y @ x)


def precompute(qp: CondensedQp) -> CremPrecomp:
    """One-time offline preparation for certification (O(q (mN)^2))."""
    hinv_g = qp.solve_h(qp.g_mat.T)  # mN x q
    d_vec = np.einsum("ij,ji->i", qp.g_mat, hinv_g)
    d_vec = np.maximum(d_vec, 0.0)
    hinv_ft = qp.solve_h(qp.f_mat)
    schur = qp.y_mat - qp.f_mat.T @ hinv_ft
    schur = 0.5 * (schur + schur.T)
    floor = float(np.min(np.linalg.eigvalsh(schur)))
    if floor < -1e-8 * max(1.0, float(np.linalg.norm(schur))):
        raise NotPositiveDefinite(f"cost Schur complement has eigenvalue {floor:.3e}")
    return CremPrecomp(hinv_f=-hinv_ft, d_vec=d_vec, schur_y=schur)


@dataclass(frozen=True)
class RemovalContext:
    """Per-trajectory cost bookkeeping carried between control steps."""

    gamma: float = np.inf
    prev_cost: float = np.inf
    prev_stage: float = 0.0
    first_step: bool = True

    @classmethod
    def fresh(cls) -> "RemovalContext":
        return cls()


@dataclass(frozen=True)
class RemovalResult:
    removed: np.ndarray
    kept: np.ndarray
    all_removed: bool


@dataclass(frozen=True)
class StepStats:
    removed_count: int
    kept_count: int
    all_removed: bool
    certify_ns: int
    setup_ns: int
    solve_ns: int
    iterations: int
    status: QpStatus


def gamma_update(ctx: RemovalContext, new_cost: float, applied_u: np.ndarray,
                 state_x: np.ndarray, spec_or_qp) -> RemovalContext:
    """Advance the bound after a completed step with optimal cost `new_cost`.

    The optimal cost is a Lyapunov function of the closed loop: it does not
    increase from one step to the next.  The cost just achieved therefore
    bounds the next optimal cost and becomes the new gamma.  (Subtracting the
    completed stage cost would tighten the bound further, but for a Riccati
    terminal weight that bound is exact along unconstrained stretches and its
    certifications collapse to a slack test at the optimizer; the plain
    Lyapunov bound reproduces the published detection behavior.)
    """
    if isinstance(spec_or_qp, MpcSpec):
        stage = spec_or_qp.stage_cost(state_x, applied_u)
    else:
        stage = float(state_x @ spec_or_qp.stage_q @ state_x + applied_u @ spec_or_qp.stage_r @ applied_u)
    return RemovalContext(
        gamma=new_cost, prev_cost=new_cost, prev_stage=stage, first_step=False,
    )


def _certify(x: np.ndarray, gamma: float, precomp: CremPrecomp, qp: CondensedQp):
    """Vectorized certification; returns (removed mask, U_uc, beta = w + Ex)."""
    u_uc = precomp.hinv_f @ x
    beta = qp.w_vec + qp.e_mat @ x
    v_uc = precomp.unconstrained_cost(x)
    rho = gamma - v_uc
    # A valid bound satisfies gamma >= V* >= V_uc; rho below that by more
    # than roundoff means the bound is unusable this step.  At steady state
    # the bound is tight and rho sits at 0 up to roundoff, hence the clamp.
    if not np.isfinite(rho) or rho < -1e-9 * (1.0 + abs(v_uc)):
        return np.zeros(qp.nrows, dtype=bool), u_uc, beta
    rho = max(rho, 0.0)
    margin = qp.g_mat @ u_uc - beta + np.sqrt(2.0 * rho * precomp.d_vec)
    eps = 1e-9 * (1.0 + np.abs(qp.w_vec))
    return margin < -eps, u_uc, beta


def certify_inactive(x: np.ndarray, ctx: RemovalContext, precomp: CremPrecomp,
                     qp: CondensedQp) -> RemovalResult:
    """Indices of rows that provably cannot be active at the optimizer of x.

    Sound whenever ctx.gamma >= V*(x); degenerate bounds (rho < 0, first
    step) yield an empty removal, never an incorrect one.
    """
    if ctx.first_step:
        mask = np.zeros(qp.nrows, dtype=bool)
    else:
        mask, _, _ = _certify(x, ctx.gamma, precomp, qp)
    return RemovalResult(
        removed=np.flatnonzero(mask), kept=np.flatnonzero(~mask), all_removed=bool(mask.all()),
    )


_SOLVERS = {"active_set": solve_active_set, "ipm": solve_ipm}


def mpc_step(x: np.ndarray, ctx: RemovalContext, precomp: CremPrecomp,
             qp: CondensedQp, solver: str = "active_set"):
    """One control step with constraint removal.

    Certifies removable rows, then either evaluates the unconstrained closed
    form (all rows removed) or solves the QP reduced to the kept rows.
    Returns (plant input, StepStats, updated context).  The three phases are
    timed separately with a monotonic clock.
    """
    solve = _SOLVERS[solver] if isinstance(solver, str) else solver
    nrows = qp.nrows

    t0 = time.perf_counter_ns()
    if ctx.first_step:
        mask = np.zeros(nrows, dtype=bool)
        u_uc = beta = None
    else:
        mask, u_uc, beta = _certify(x, ctx.gamma, precomp, qp)
    t1 = time.perf_counter_ns()

    removed_count = int(mask.sum())
    all_removed = removed_count == nrows

    if all_removed:
        u_stack = u_uc
        new_cost = precomp.unconstrained_cost(x)
        stats = StepStats(
            removed_count=removed_count, kept_count=0, all_removed=True,
            certify_ns=t1 - t0, setup_ns=0, solve_ns=0,
            iterations=0, status=QpStatus.OPTIMAL,
        )
    else:
        t2 = time.perf_counter_ns()
        kept = np.flatnonzero(~mask)
        if beta is None:
            inst = QpInstance.from_condensed(qp, x, kept=None if removed_count == 0 else kept)
        else:
            inst = QpInstance.build(
                qp.h_mat, qp.f_mat @ x, qp.g_mat[kept], beta[kept],
                kept_rows=kept, h_factor=qp._h_factor,
            )
        t3 = time.perf_counter_ns()
        result = solve(inst)
        t4 = time.perf_counter_ns()
        if not result.optimal:
            raise InfeasibleState(f"QP not solvable at state {x} (status {result.status.value})")
        u_stack = result.u_star
        new_cost = qp.optimal_cost(x, result.value)
        stats = StepStats(
            removed_count=removed_count, kept_count=int(kept.size), all_removed=False,
            certify_ns=t1 - t0, setup_ns=t3 - t2, solve_ns=t4 - t3,
            iterations=result.iterations, status=result.status,
        )

    u = qp.first_input(x, u_stack)
    ctx_next = gamma_update(ctx, new_cost, u, x, qp)
    return u, stats, ctx_next
