"""Transcription of an MPC problem into a dense parametric QP.

The finite-horizon problem is condensed onto the stacked input sequence
U = (u(0)', ..., u(N-1)')' by eliminating the states through the dynamics.
The result is

    minimize  V(x, U) = 1/2 x'Yx + U'Fx + 1/2 U'HU
    s.t.      G U <= w + E x

where the matrices are scaled so that V(x, U) *equals* the original cost of
the corresponding trajectory (H carries a factor 2 relative to the bare
Hessian).  Keeping cost units intact lets the constraint-removal layer
compare optimal costs directly against stage costs.

Optionally the inputs are reparametrized through an LQR gain, u = -Kx + c,
which improves the conditioning of H; the decision variables are then the
perturbations c(k) and input-constraint rows acquire state dependence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionMismatch, NotPositiveDefinite
from .model import HalfspaceSet, MpcSpec, lqr_gain, spectral_radius, _frozen


@dataclass(frozen=True)
class RowTag:
    """Provenance of one condensed constraint row."""

    step: int
    kind: str  # "state" | "input" | "terminal" | "step0-state"
    local: int  # row index within the originating constraint set


@dataclass(frozen=True)
class StageProblem:
    """Stage-wise optimal control problem in the form condensable directly.

    Stage cost x'q x + 2 u's x + u'r u, terminal cost x'p x, dynamics
    x+ = a x + b u.  Input rows may mix state and input (cx x + cu u <= d),
    which is how an LQR reparametrization manifests.
    """

    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    s: np.ndarray  # m x n cross term
    r: np.ndarray
    p: np.ndarray
    horizon: int
    state_rows: HalfspaceSet
    input_cx: np.ndarray
    input_cu: np.ndarray
    input_d: np.ndarray
    terminal_rows: HalfspaceSet
    include_step0_state_rows: bool
    k_gain: Optional[np.ndarray]
    # original stage weights, kept for cost bookkeeping in plant coordinates
    plant_q: np.ndarray
    plant_r: np.ndarray

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]


def to_stage(spec: MpcSpec) -> StageProblem:
    """Rewrite an MpcSpec in stage form without reparametrization."""
    n, m = spec.n, spec.m
    iu = spec.input_set
    return StageProblem(
        a=spec.sys.a, b=spec.sys.b,
        q=spec.q_mat, s=np.zeros((m, n)), r=spec.r_mat, p=spec.p_mat,
        horizon=spec.horizon,
        state_rows=spec.state_set,
        input_cx=np.zeros((iu.nrows, n)), input_cu=iu.c, input_d=iu.d,
        terminal_rows=spec.terminal_set,
        include_step0_state_rows=spec.include_step0_state_rows,
        k_gain=None,
        plant_q=spec.q_mat, plant_r=spec.r_mat,
    )


def prestabilize(spec: MpcSpec, k_gain: np.ndarray) -> StageProblem:
    """Equivalent problem over perturbations c(k), where u(k) = -K x(k) + c(k).

    The dynamics matrix becomes a - b k_gain, the stage cost gains a cross
    term, and input rows become mixed state/input rows.  The closed-loop
    input sequence is unchanged: the map U <-> C is a bijection.
    """
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    if k_gain.shape != (spec.m, spec.n):
        raise DimensionMismatch(f"gain shape {k_gain.shape} != ({spec.m}, {spec.n})")
    rho = spectral_radius(spec.sys.a - spec.sys.b @ k_gain)
    if rho >= 1.0:
        from .errors import UnstablePrestabilization

        raise UnstablePrestabilization(f"closed-loop spectral radius {rho:.6f} >= 1")
    stage = to_stage(spec)
    rk = spec.r_mat @ k_gain
    return StageProblem(
        a=spec.sys.a - spec.sys.b @ k_gain, b=spec.sys.b,
        q=spec.q_mat + k_gain.T @ rk, s=-rk, r=spec.r_mat, p=spec.p_mat,
        horizon=spec.horizon,
        state_rows=stage.state_rows,
        input_cx=-stage.input_cu @ k_gain, input_cu=stage.input_cu, input_d=stage.input_d,
        terminal_rows=stage.terminal_rows,
        include_step0_state_rows=stage.include_step0_state_rows,
        k_gain=k_gain,
        plant_q=spec.q_mat, plant_r=spec.r_mat,
    )


@dataclass(frozen=True)
class CondensedQp:
    """Dense parametric QP min 1/2 x'Yx + U'Fx + 1/2 U'HU s.t. GU <= w + Ex.

    phi_n/gam_n map (x, U) to the terminal state; terminal_defect is the
    one-step Riccati defect of the terminal weight (zero when it solves the
    DARE), used by the constraint-removal cost bound.
    """

    h_mat: np.ndarray
    f_mat: np.ndarray
    y_mat: np.ndarray
    g_mat: np.ndarray
    e_mat: np.ndarray
    w_vec: np.ndarray
    row_tags: tuple
    k_gain: Optional[np.ndarray]
    stage_q: np.ndarray
    stage_r: np.ndarray
    horizon: int
    phi_n: np.ndarray = None
    gam_n: np.ndarray = None
    terminal_defect: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        h = 0.5 * (np.asarray(self.h_mat, dtype=float) + np.asarray(self.h_mat, dtype=float).T)
        object.__setattr__(self, "h_mat", _frozen(h))
        n = self.e_mat.shape[1] if self.e_mat.ndim == 2 else 0
        if self.phi_n is None:
            object.__setattr__(self, "phi_n", np.zeros((n, n)))
        if self.gam_n is None:
            object.__setattr__(self, "gam_n", np.zeros((n, self.h_mat.shape[0])))
        if self.terminal_defect is None:
            object.__setattr__(self, "terminal_defect", np.zeros((n, n)))
        for fname in ("f_mat", "y_mat", "g_mat", "e_mat", "w_vec", "stage_q", "stage_r",
                      "phi_n", "gam_n", "terminal_defect"):
            object.__setattr__(self, fname, _frozen(getattr(self, fname)))
        if self.k_gain is not None:
            object.__setattr__(self, "k_gain", _frozen(self.k_gain))
        if not (self.g_mat.shape[0] == self.e_mat.shape[0] == self.w_vec.shape[0] == len(self.row_tags)):
            raise DimensionMismatch("constraint row counts disagree")
        try:
            factor = cho_factor(self.h_mat, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("condensed Hessian is not positive definite") from exc
        object.__setattr__(self, "_h_factor", factor)

    @property
    def nvars(self) -> int:
        return self.h_mat.shape[0]

    @property
    def nrows(self) -> int:
        return self.g_mat.shape[0]

    @property
    def n(self) -> int:
        return self.e_mat.shape[1]

    @property
    def m(self) -> int:
        return self.nvars // self.horizon

    def solve_h(self, v: np.ndarray) -> np.ndarray:
        """H^-1 v through the cached Cholesky factor."""
        return cho_solve(self._h_factor, v)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """Right-hand side w + E x of the constraint system at state x."""
        return self.w_vec + self.e_mat @ x

    def objective(self, x: np.ndarray, u_stack: np.ndarray) -> float:
        """V(x, U); equals the stage-summed trajectory cost."""
        return float(
            0.5 * x @ self.y_mat @ x + u_stack @ self.f_mat @ x + 0.5 * u_stack @ self.h_mat @ u_stack
        )

    def optimal_cost(self, x: np.ndarray, qp_value: float) -> float:
        """Total cost V*(x) from a solver's 1/2 U'HU + f'U value."""
        return qp_value + float(0.5 * x @ self.y_mat @ x)

    def first_input(self, x: np.ndarray, u_stack: np.ndarray) -> np.ndarray:
        """Plant input applied at the current step (maps c(0) back if needed)."""
        u0 = u_stack[: self.m]
        if self.k_gain is None:
            return u0
        return u0 - self.k_gain @ x

    def terminal_state(self, x: np.ndarray, u_stack: np.ndarray) -> np.ndarray:
        """Predicted x(N) for the given state and decision vector."""
        return self.phi_n @ x + self.gam_n @ u_stack


def _transition_stack(a: np.ndarray, b: np.ndarray, horizon: int):
    """Powers of a and the causal input-to-state map for x(0..N-1) and x(N)."""
    n, m = a.shape[0], b.shape[1]
    powers = [np.eye(n)]
    for _ in range(horizon):
        powers.append(a @ powers[-1])
    phi0 = np.vstack(powers[:horizon])  # x(0..N-1) rows
    gam0 = np.zeros((horizon * n, horizon * m))
    for k in range(1, horizon):
        for j in range(k):
            gam0[k * n : (k + 1) * n, j * m : (j + 1) * m] = powers[k - 1 - j] @ b
    phi_n = powers[horizon]
    gam_n = np.hstack([powers[horizon - 1 - j] @ b for j in range(horizon)])
    return phi0, gam0, phi_n, gam_n


def condense(problem) -> CondensedQp:
    """Condense an MpcSpec (or prepared StageProblem) into a CondensedQp.

    For an MpcSpec with prestabilize=True the LQR gain is computed from the
    terminal weight and the problem is reparametrized first.
    """
    if isinstance(problem, MpcSpec):
        if problem.prestabilize:
            k = lqr_gain(problem.sys.a, problem.sys.b, problem.q_mat, problem.r_mat, problem.p_mat)
            stage = prestabilize(problem, k)
        else:
            stage = to_stage(problem)
        name = problem.name
    else:
        stage = problem
        name = ""

    n, m, big_n = stage.n, stage.m, stage.horizon
    phi0, gam0, phi_n, gam_n = _transition_stack(stage.a, stage.b, big_n)

    qb = np.kron(np.eye(big_n), stage.q)
    rb = np.kron(np.eye(big_n), stage.r)
    sb = np.kron(np.eye(big_n), stage.s)

    sg = sb @ gam0
    h = 2.0 * (gam0.T @ qb @ gam0 + sg + sg.T + rb + gam_n.T @ stage.p @ gam_n)
    f = 2.0 * (gam0.T @ qb @ phi0 + sb @ phi0 + gam_n.T @ stage.p @ phi_n)
    y = 2.0 * (phi0.T @ qb @ phi0 + phi_n.T @ stage.p @ phi_n)

    g_rows, e_rows, w_entries, tags = [], [], [], []
    sx, su = stage.state_rows, (stage.input_cx, stage.input_cu, stage.input_d)
    for k in range(big_n):
        xk_phi = phi0[k * n : (k + 1) * n]
        xk_gam = gam0[k * n : (k + 1) * n]
        if k >= 1 or stage.include_step0_state_rows:
            kind = "state" if k >= 1 else "step0-state"
            g_rows.append(sx.c @ xk_gam)
            e_rows.append(-sx.c @ xk_phi)
            w_entries.append(sx.d)
            tags.extend(RowTag(k, kind, i) for i in range(sx.nrows))
        cx, cu, d = su
        gk = cx @ xk_gam
        gk[:, k * m : (k + 1) * m] += cu
        g_rows.append(gk)
        e_rows.append(-cx @ xk_phi)
        w_entries.append(d)
        tags.extend(RowTag(k, "input", i) for i in range(cu.shape[0]))
    st = stage.terminal_rows
    g_rows.append(st.c @ gam_n)
    e_rows.append(-st.c @ phi_n)
    w_entries.append(st.d)
    tags.extend(RowTag(big_n, "terminal", i) for i in range(st.nrows))

    return CondensedQp(
        h_mat=h, f_mat=f, y_mat=y,
        g_mat=np.vstack(g_rows), e_mat=np.vstack(e_rows), w_vec=np.concatenate(w_entries),
        row_tags=tuple(tags), k_gain=stage.k_gain,
        stage_q=stage.plant_q, stage_r=stage.plant_r, horizon=big_n,
        phi_n=phi_n, gam_n=gam_n, terminal_defect=_terminal_defect(stage), name=name,
    )


def _terminal_defect(stage: StageProblem) -> np.ndarray:
    """One-step Riccati defect of the terminal weight.

    For the best linear controller appended after the horizon, the extra cost
    of extending the horizon by one step is x(N)' defect x(N).  The defect
    vanishes exactly when the terminal weight solves the DARE (prestabilized
    examples); for a zero terminal weight it reduces to the state weight.
    """
    a, b, p = stage.a, stage.b, stage.p
    k = np.linalg.solve(stage.r + b.T @ p @ b, stage.s + b.T @ p @ a)
    a_cl = a - b @ k
    defect = (
        stage.q - k.T @ stage.s - stage.s.T @ k + k.T @ stage.r @ k
        + a_cl.T @ p @ a_cl - p
    )
    return 0.5 * (defect + defect.T)


def condition_number(h_mat: np.ndarray) -> float:
    """lambda_max / lambda_min of a symmetric positive definite matrix."""
    ew = np.linalg.eigvalsh(0.5 * (h_mat + h_mat.T))
    if ew[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {ew[0]:.3e} <= 0")
    return float(ew[-1] / ew[0])


def reduced_qp(qp: CondensedQp, kept_rows: np.ndarray) -> CondensedQp:
    """CondensedQp restricted to a subset of constraint rows (tags preserved)."""
    kept_rows = np.asarray(kept_rows, dtype=int)
    return CondensedQp(
        h_mat=qp.h_mat, f_mat=qp.f_mat, y_mat=qp.y_mat,
        g_mat=qp.g_mat[kept_rows], e_mat=qp.e_mat[kept_rows], w_vec=qp.w_vec[kept_rows],
        row_tags=tuple(qp.row_tags[i] for i in kept_rows),
        k_gain=qp.k_gain, stage_q=qp.stage_q, stage_r=qp.stage_r,
        horizon=qp.horizon, phi_n=qp.phi_n, gam_n=qp.gam_n,
        terminal_defect=qp.terminal_defect, name=qp.name,
    )


# ---------------------------------------------------------------------------
# Serialization


def qp_to_dict(qp: CondensedQp) -> dict:
    return {
        "name": qp.name,
        "horizon": qp.horizon,
        "h_mat": qp.h_mat.tolist(),
        "f_mat": qp.f_mat.tolist(),
        "y_mat": qp.y_mat.tolist(),
        "g_mat": qp.g_mat.tolist(),
        "e_mat": qp.e_mat.tolist(),
        "w_vec": qp.w_vec.tolist(),
        "row_tags": [[t.step, t.kind, t.local] for t in qp.row_tags],
        "k_gain": None if qp.k_gain is None else qp.k_gain.tolist(),
        "stage_q": qp.stage_q.tolist(),
        "stage_r": qp.stage_r.tolist(),
        "phi_n": qp.phi_n.tolist(),
        "gam_n": qp.gam_n.tolist(),
        "terminal_defect": qp.terminal_defect.tolist(),
    }


def qp_from_dict(d: dict) -> CondensedQp:
    return CondensedQp(
        h_mat=np.array(d["h_mat"]), f_mat=np.array(d["f_mat"]), y_mat=np.array(d["y_mat"]),
        g_mat=np.array(d["g_mat"]), e_mat=np.array(d["e_mat"]), w_vec=np.array(d["w_vec"]),
        row_tags=tuple(RowTag(int(s), k, int(i)) for s, k, i in d["row_tags"]),
        k_gain=None if d["k_gain"] is None else np.array(d["k_gain"]),
        stage_q=np.array(d["stage_q"]), stage_r=np.array(d["stage_r"]),
        horizon=int(d["horizon"]),
        phi_n=np.array(d["phi_n"]) if "phi_n" in d else None,
        gam_n=np.array(d["gam_n"]) if "gam_n" in d else None,
        terminal_defect=np.array(d["terminal_defect"]) if "terminal_defect" in d else None,
        name=d.get("name", ""),
    )


def save_qp(qp: CondensedQp, path) -> None:
    with open(path, "w") as fh:
        json.dump(qp_to_dict(qp), fh)


def load_qp(path) -> CondensedQp:
    with open(path) as fh:
        return qp_from_dict(json.load(fh))
