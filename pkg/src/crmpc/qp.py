"""Dense strictly convex QP solvers.

Two solvers cover the two algorithm families of the benchmark:

* `solve_active_set` - a dual active-set method (Goldfarb-Idnani).  It starts
  from the unconstrained minimizer, which is always dual feasible, so no
  phase-I is needed; constraints enter one at a time with full or partial
  (constraint-dropping) steps.
* `solve_ipm` - a primal-dual predictor-corrector interior-point method with
  a single Mehrotra corrector on the slack form G u + s = b, s > 0.

Both operate on a QpInstance

    minimize 1/2 u'Hu + f'u   s.t.   G u <= b

with H positive definite and reuse a cached Cholesky factor of H.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NotPositiveDefinite


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class QpInstance:
    """One dense inequality-constrained QP, possibly a row subset of a parent."""

    h_mat: np.ndarray
    f_vec: np.ndarray
    g_sub: np.ndarray
    b_sub: np.ndarray
    kept_rows: np.ndarray
    h_factor: Optional[tuple] = None

    def __post_init__(self):
        if not (self.g_sub.shape[0] == self.b_sub.shape[0] == self.kept_rows.shape[0]):
            raise ValueError("constraint row counts disagree")
        if self.h_factor is None:
            try:
                object.__setattr__(self, "h_factor", cho_factor(np.asarray(self.h_mat, dtype=float), lower=True))
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite("QP Hessian is not positive definite") from exc

    @classmethod
    def build(cls, h_mat, f_vec, g_sub, b_sub, kept_rows=None, h_factor=None) -> "QpInstance":
        g = np.atleast_2d(np.asarray(g_sub, dtype=float))
        if g.size == 0:
            g = g.reshape(0, np.asarray(h_mat).shape[0])
        b = np.atleast_1d(np.asarray(b_sub, dtype=float))
        if kept_rows is None:
            kept_rows = np.arange(g.shape[0])
        return cls(
            h_mat=np.asarray(h_mat, dtype=float),
            f_vec=np.asarray(f_vec, dtype=float),
            g_sub=g, b_sub=b, kept_rows=np.asarray(kept_rows, dtype=int),
            h_factor=h_factor,
        )

    @classmethod
    def from_condensed(cls, qp, x, kept=None) -> "QpInstance":
        """Instance at state x; `kept` selects rows (None keeps all)."""
        f = qp.f_mat @ x
        if kept is None:
            return cls.build(qp.h_mat, f, qp.g_mat, qp.rhs(x), h_factor=qp._h_factor)
        kept = np.asarray(kept, dtype=int)
        return cls.build(
            qp.h_mat, f, qp.g_mat[kept], qp.w_vec[kept] + qp.e_mat[kept] @ x,
            kept_rows=kept, h_factor=qp._h_factor,
        )

    @property
    def nvars(self) -> int:
        return self.h_mat.shape[0]

    @property
    def nrows(self) -> int:
        return self.g_sub.shape[0]

    def objective(self, u: np.ndarray) -> float:
        return float(0.5 * u @ self.h_mat @ u + self.f_vec @ u)


@dataclass(frozen=True)
class QpResult:
    u_star: Optional[np.ndarray]
    value: float
    status: QpStatus
    iterations: int
    active_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    duals: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def solve_unconstrained(h_mat, f_vec, h_factor=None) -> np.ndarray:
    """u = -H^-1 f through a (possibly cached) Cholesky factor."""
    if h_factor is None:
        try:
            h_factor = cho_factor(np.asarray(h_mat, dtype=float), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("Hessian is not positive definite") from exc
    return -cho_solve(h_factor, np.asarray(f_vec, dtype=float))


# ---------------------------------------------------------------------------
# Dual active-set method


def solve_active_set(inst: QpInstance) -> QpResult:
    """Goldfarb-Idnani dual active-set iteration.

    Starts at the unconstrained optimum and repeatedly enforces the most
    violated constraint, taking dual (constraint-dropping) steps whenever a
    multiplier would turn negative.  Ties in row selection are broken by the
    lowest original row index, so the iteration is deterministic.
    """
    return _active_set(inst)


def _active_set(inst: QpInstance, trace: Optional[list] = None) -> QpResult:
    h_factor = inst.h_factor
    g, b = inst.g_sub, inst.b_sub
    u = -cho_solve(h_factor, inst.f_vec)
    max_iter = 10 * (inst.nrows + inst.nvars)

    active: list = []       # original-position indices into g
    lam: list = []
    hinv_cols: list = []    # cached H^-1 g_i' for i in active
    feas_tol = 1e-10 * (1.0 + np.abs(b)) if inst.nrows else np.empty(0)

    iters = 0
    if trace is not None:
        trace.append(inst.objective(u))
    while True:
        slack = g @ u - b if inst.nrows else np.empty(0)
        violated = slack > feas_tol
        if not np.any(violated):
            order = np.argsort(active) if active else []
            return QpResult(
                u_star=u, value=inst.objective(u), status=QpStatus.OPTIMAL, iterations=iters,
                active_rows=np.array([active[i] for i in order], dtype=int),
                duals=np.array([lam[i] for i in order]),
            )
        p = int(np.argmax(slack))  # most violated; argmax takes lowest index on ties
        n_plus = g[p]
        hg_p = cho_solve(h_factor, n_plus)
        lam_p = 0.0

        while True:
            if iters >= max_iter:
                return QpResult(None, np.nan, QpStatus.ITERATION_LIMIT, iters)
            iters += 1
            if active:
                hn = np.column_stack(hinv_cols)
                m_mat = g[active] @ hn
                rhs = g[active] @ hg_p
                try:
                    r = np.linalg.solve(m_mat, rhs)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(m_mat, rhs, rcond=None)[0]
                z = hg_p - hn @ r
            else:
                r = np.empty(0)
                z = hg_p
            kappa = float(n_plus @ z)
            kappa_tol = 1e-13 * max(1.0, float(n_plus @ hg_p))

            # dual step bound: first multiplier driven to zero
            t1 = np.inf
            blocker = -1
            for j, (idx, rj) in enumerate(zip(active, r)):
                if rj > 1e-13:
                    tj = lam[j] / rj
                    if tj < t1 - 1e-15 or (abs(tj - t1) <= 1e-15 and (blocker < 0 or idx < active[blocker])):
                        t1 = tj
                        blocker = j
            t2 = (float(g[p] @ u - b[p]) / kappa) if kappa > kappa_tol else np.inf

            if not np.isfinite(t1) and not np.isfinite(t2):
                # no primal progress possible and no multiplier blocks: the
                # dual is unbounded, hence the primal is infeasible
                return QpResult(None, np.nan, QpStatus.INFEASIBLE, iters)

            t = min(t1, t2)
            if np.isfinite(t2) and t == t2 and kappa > kappa_tol:
                # full step: constraint p becomes active and satisfied exactly
                u = u - t * z
                lam = [lj - t * rj for lj, rj in zip(lam, r)]
                lam_p += t
                active.append(p)
                lam.append(lam_p)
                hinv_cols.append(hg_p)
                if trace is not None:
                    trace.append(inst.objective(u))
                break
            # partial step: drop the blocking constraint, stay on p
            if np.isfinite(t):
                if np.isfinite(t2):
                    u = u - t * z
                lam = [lj - t * rj for lj, rj in zip(lam, r)]
                lam_p += t
            del active[blocker], lam[blocker], hinv_cols[blocker]
            if trace is not None:
                trace.append(inst.objective(u))


# ---------------------------------------------------------------------------
# Mehrotra predictor-corrector interior-point method


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def solve_ipm(inst: QpInstance, max_iter: int = 100) -> QpResult:
    """Primal-dual interior-point solve with one Mehrotra corrector per step.

    Terminates when the duality measure drops below 1e-9 and the scaled
    primal/dual residuals below 1e-8.  With no constraint rows the closed
    form is returned directly.
    """
    h, f, g, b = inst.h_mat, inst.f_vec, inst.g_sub, inst.b_sub
    nrows = inst.nrows
    if nrows == 0:
        u = solve_unconstrained(h, f, inst.h_factor)
        return QpResult(u, inst.objective(u), QpStatus.OPTIMAL, 0)

    u = -cho_solve(inst.h_factor, f)
    s = np.ones(nrows)
    lam = np.ones(nrows)
    b_scale = 1.0 + float(np.max(np.abs(b)))
    f_scale = 1.0 + float(np.max(np.abs(f)))

    for it in range(max_iter):
        r_d = h @ u + f + g.T @ lam
        r_p = g @ u + s - b
        mu = float(s @ lam) / nrows
        # declared convergence is mu <= 1e-9 with residuals <= 1e-8; running
        # one order tighter keeps cross-solver agreement within 1e-6
        if (
            mu <= 1e-11
            and np.max(np.abs(r_p)) <= 1e-9 * b_scale
            and np.max(np.abs(r_d)) <= 1e-9 * f_scale
        ):
            return _ipm_result(inst, u, lam, QpStatus.OPTIMAL, it)
        if np.max(lam) > 1e9 * f_scale and np.max(r_p / b_scale) > 1e-6:
            # dual blow-up with a persistent primal gap: no feasible point
            return QpResult(None, np.nan, QpStatus.INFEASIBLE, it)

        d = lam / s
        m_mat = h + (g.T * d) @ g
        factor = None
        jitter = 0.0
        for _ in range(4):
            try:
                factor = cho_factor(m_mat + jitter * np.eye(inst.nvars), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = max(10.0 * jitter, 1e-12 * np.trace(m_mat) / inst.nvars)
        if factor is None:
            return QpResult(None, np.nan, QpStatus.NUMERICAL_FAILURE, it)

        # predictor (affine scaling direction)
        rhs3 = -s * lam
        du_aff = cho_solve(factor, -r_d - g.T @ ((rhs3 + lam * r_p) / s))
        ds_aff = -r_p - g @ du_aff
        dlam_aff = (rhs3 - lam * ds_aff) / s
        alpha_aff = min(1.0, _max_step(s, ds_aff), _max_step(lam, dlam_aff))
        mu_aff = float((s + alpha_aff * ds_aff) @ (lam + alpha_aff * dlam_aff)) / nrows
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector with centering
        rhs3 = -s * lam + sigma * mu - ds_aff * dlam_aff
        du = cho_solve(factor, -r_d - g.T @ ((rhs3 + lam * r_p) / s))
        ds = -r_p - g @ du
        dlam = (rhs3 - lam * ds) / s
        alpha = min(1.0, 0.995 * min(_max_step(s, ds), _max_step(lam, dlam)))

        u = u + alpha * du
        s = s + alpha * ds
        lam = lam + alpha * dlam

    return QpResult(None, np.nan, QpStatus.ITERATION_LIMIT, max_iter)


def _ipm_result(inst: QpInstance, u, lam, status, iters) -> QpResult:
    slack = inst.b_sub - inst.g_sub @ u
    act = np.flatnonzero(slack <= 1e-7 * (1.0 + np.abs(inst.b_sub)))
    return QpResult(
        u_star=u, value=inst.objective(u), status=status, iterations=iters,
        active_rows=act, duals=lam[act],
    )


# ---------------------------------------------------------------------------


def kkt_residual(inst: QpInstance, result: QpResult):
    """(primal infeasibility, stationarity, complementary slackness) norms."""
    u = result.u_star
    if inst.nrows:
        viol = inst.g_sub @ u - inst.b_sub
        primal = float(max(0.0, np.max(viol)))
    else:
        primal = 0.0
    grad = inst.h_mat @ u + inst.f_vec
    if len(result.active_rows):
        grad = grad + inst.g_sub[result.active_rows].T @ result.duals
        comp = float(
            np.max(np.abs(result.duals * (inst.g_sub[result.active_rows] @ u - inst.b_sub[result.active_rows])))
        )
    else:
        comp = 0.0
    return primal, float(np.max(np.abs(grad))), comp
