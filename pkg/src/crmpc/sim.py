"""Closed-loop MPC simulation: initial-state sampling and rollouts.

Initial states are drawn uniformly from the example's sampling box and kept
only if the full QP is feasible there.  A rollout applies the first input of
each solve to the exact model until the regulated state norm drops below
1e-3, recording per-step cost and timing statistics.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .condense import CondensedQp
from .crem import CremPrecomp, RemovalContext, StepStats, mpc_step
from .errors import InfeasibleState, SamplingStalled
from .model import MpcSpec
from .qp import QpInstance, QpStatus, solve_active_set, solve_ipm

CONVERGENCE_NORM = 1e-3
DEFAULT_STEP_CAP = 1000


class Termination(enum.Enum):
    CONVERGED = "converged"
    STEP_CAP = "step_cap"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class TrajectoryStep:
    state: np.ndarray
    inp: np.ndarray
    cost: float
    stats: StepStats


@dataclass(frozen=True)
class Trajectory:
    x0: np.ndarray
    steps: tuple
    terminated: Termination

    def __len__(self) -> int:
        return len(self.steps)


def sample_x0(spec: MpcSpec, qp: CondensedQp, rng_seed, count: int):
    """Uniform draws from the sampling box, accepted iff the full QP solves.

    Deterministic for a fixed seed.  Raises SamplingStalled if fewer than
    0.1% of draws are accepted over a million attempts.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    lo, hi = spec.sampling_box()
    rng = np.random.default_rng(rng_seed)
    accepted = []
    draws = 0
    while len(accepted) < count:
        x = rng.uniform(lo, hi)
        draws += 1
        inst = QpInstance.from_condensed(qp, x)
        if solve_active_set(inst).optimal:
            accepted.append(x)
        if draws >= 1_000_000 and len(accepted) < 0.001 * draws:
            raise SamplingStalled(f"{len(accepted)} accepted in {draws} draws")
    return accepted


_SOLVERS = {"active_set": solve_active_set, "ipm": solve_ipm}


def _full_step(qp: CondensedQp, x: np.ndarray, solve):
    """Full-QP control step; instance assembly and solve are both timed."""
    t0 = time.perf_counter_ns()
    inst = QpInstance.from_condensed(qp, x)
    result = solve(inst)
    t1 = time.perf_counter_ns()
    stats = StepStats(
        removed_count=0, kept_count=qp.nrows, all_removed=False,
        certify_ns=0, setup_ns=0, solve_ns=t1 - t0,
        iterations=result.iterations, status=result.status,
    )
    return result, stats


def rollout(spec: MpcSpec, qp: CondensedQp, x0: np.ndarray, mode: str = "full",
            solver: str = "active_set", precomp: Optional[CremPrecomp] = None,
            step_cap: int = DEFAULT_STEP_CAP) -> Trajectory:
    """Simulate the closed loop from x0 until convergence, cap, or infeasibility.

    mode "full" solves the complete QP each step; mode "cr" runs the
    constraint-removal step.  Both produce the same control law, so state
    trajectories agree between modes for the same x0.
    """
    if mode == "cr" and precomp is None:
        raise ValueError("cr mode needs a CremPrecomp")
    solve = _SOLVERS[solver]
    a, b = spec.sys.a, spec.sys.b
    x = np.asarray(x0, dtype=float)
    ctx = RemovalContext.fresh()
    steps = []
    terminated = Termination.STEP_CAP
    while len(steps) < step_cap:
        if spec.convergence_norm(x) <= CONVERGENCE_NORM:
            terminated = Termination.CONVERGED
            break
        if mode == "cr":
            try:
                u, stats, ctx = mpc_step(x, ctx, precomp, qp, solver=solver)
            except InfeasibleState:
                terminated = Termination.INFEASIBLE
                break
            cost = ctx.prev_cost
        else:
            result, stats = _full_step(qp, x, solve)
            if not result.optimal:
                terminated = Termination.INFEASIBLE
                break
            u = qp.first_input(x, result.u_star)
            cost = qp.optimal_cost(x, result.value)
        steps.append(TrajectoryStep(x, u, cost, stats))
        x = a @ x + b @ u
    return Trajectory(x0=np.asarray(x0, dtype=float), steps=tuple(steps), terminated=terminated)
