"""Offline elimination of redundant constraint rows via linear programming.

A row is redundant when it can never become active: its left-hand side stays
below its bound over the polyhedron cut out by all other rows, with the state
restricted to its box.  Each test maximizes one row's value by LP; rows are
tested in ascending index against the currently kept set, so the surviving
rows describe the same polyhedron.

`lp_solve` is a self-contained two-phase revised simplex with Bland's rule
(deterministic and cycle-free); it is exercised directly by the small LPs of
the test suite and doubles as a cross-check oracle.  The per-row tests of
`remove_redundant` default to scipy's HiGHS backend, which handles the large,
badly scaled test LPs (variable bounds at 1e6 next to milli-scale rows) in
seconds; a cheap ray-shooting certificate skips the LP for most non-redundant
rows.  The "bland" engine routes every row test through `lp_solve` instead.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog as _scipy_linprog

from .condense import CondensedQp, reduced_qp
from .model import HalfspaceSet

log = logging.getLogger(__name__)

SAFEGUARD_BOUND = 1e6
REDUNDANCY_TOL = 1e-9


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    STALLED = "stalled"


@dataclass(frozen=True)
class LpInstance:
    """maximize/minimize objective' z subject to rows_c z <= rows_d."""

    objective: np.ndarray
    rows_c: np.ndarray
    rows_d: np.ndarray
    maximize: bool = True


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float = np.nan
    z: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# Revised simplex core (standard form min c'w s.t. A w = b, w >= 0)

_RC_TOL = 1e-9   # reduced-cost optimality tolerance
_PIV_TOL = 1e-9  # smallest acceptable ratio-test pivot


def _phase_iterate(c, a, b, basis, iter_cap):
    """Bland-rule simplex on one phase; every iterate refactorizes the basis.

    Returns (status, basis, xb).  Solve-based iterations trade speed for
    numerical robustness, which is ample at the sizes lp_solve is used for.
    """
    m, n = a.shape
    for _ in range(iter_cap):
        bmat = a[:, basis]
        try:
            b_inv_t = np.linalg.solve(bmat.T, c[basis])  # y' = c_B' B^-1
            xb = np.linalg.solve(bmat, b)
        except np.linalg.LinAlgError:
            return LpStatus.STALLED, basis, None
        reduced = c - b_inv_t @ a
        reduced[basis] = 0.0
        neg = np.flatnonzero(reduced < -_RC_TOL * (1.0 + np.abs(c).max()))
        if neg.size == 0:
            return LpStatus.OPTIMAL, basis, np.maximum(xb, 0.0)
        entering = int(neg[0])  # Bland: smallest eligible index
        d = np.linalg.solve(bmat, a[:, entering])
        pos = d > _PIV_TOL * max(1.0, float(np.max(np.abs(d))))
        if not np.any(pos):
            return LpStatus.UNBOUNDED, basis, None
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xb[pos], 0.0) / d[pos]
        best = float(np.min(ratios))
        tied = np.flatnonzero(ratios <= best + 1e-10 * (1.0 + best))
        leave = int(tied[np.argmin(np.asarray(basis)[tied])])  # Bland tie-break
        basis[leave] = entering
    return LpStatus.STALLED, basis, None


def _revised_simplex(c, a, b, iter_cap: int = 20_000):
    """Two-phase revised simplex with Bland's rule.

    Returns (status, w, basis) for min c'w s.t. a w = b, w >= 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = a.shape

    flip = b < 0
    if np.any(flip):
        a = a.copy()
        a[flip] *= -1.0
        b[flip] *= -1.0

    # phase 1: minimize the sum of artificial variables
    a1 = np.hstack([a, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    status, basis, xb = _phase_iterate(c1, a1, b, basis, iter_cap)
    if status is not LpStatus.OPTIMAL:
        return LpStatus.STALLED, None, None
    if float(c1[basis] @ xb) > 1e-7 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        return LpStatus.INFEASIBLE, None, None

    # swap leftover artificials for structural columns; drop dependent rows
    keep = np.ones(m, dtype=bool)
    if any(j >= n for j in basis):
        b_inv = np.linalg.inv(a1[:, basis])
        tab = b_inv @ a
        for r in range(m):
            if basis[r] < n:
                continue
            cand = [j for j in np.flatnonzero(np.abs(tab[r]) > 1e-8) if j not in basis]
            if cand:
                basis[r] = int(cand[0])
            else:
                keep[r] = False
        if not np.all(keep):
            rows = np.flatnonzero(keep)
            a, b = a[rows], b[rows]
            basis = [basis[i] for i in rows]
            m = len(rows)

    # phase 2 on the original objective
    status, basis, xb = _phase_iterate(c, a, b, basis, iter_cap)
    if status is not LpStatus.OPTIMAL:
        return status, None, None
    w = np.zeros(n)
    w[basis] = xb
    return LpStatus.OPTIMAL, w, list(basis)


def lp_solve(inst: LpInstance) -> LpSolution:
    """Solve max/min objective'z s.t. rows_c z <= rows_d by revised simplex.

    Free variables are split, slacks complete the standard form.  Returns
    Optimal with a basic feasible optimizer, Infeasible, or Unbounded.
    """
    rows_c = np.atleast_2d(np.asarray(inst.rows_c, dtype=float))
    rows_d = np.asarray(inst.rows_d, dtype=float)
    obj = np.asarray(inst.objective, dtype=float)
    m_rows, dim = rows_c.shape
    sign = -1.0 if inst.maximize else 1.0

    a = np.hstack([rows_c, -rows_c, np.eye(m_rows)])
    c = np.concatenate([sign * obj, -sign * obj, np.zeros(m_rows)])
    status, w, _ = _revised_simplex(c, a, rows_d)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status=status)
    z = w[:dim] - w[dim : 2 * dim]
    return LpSolution(status=LpStatus.OPTIMAL, value=float(obj @ z), z=z)


# ---------------------------------------------------------------------------
# Redundancy elimination


def _joint_rows(qp: CondensedQp, x_domain: HalfspaceSet):
    """Rows of the joint polyhedron over z = (x, U), QP rows first."""
    nv = qp.nvars
    qp_rows = np.hstack([-qp.e_mat, qp.g_mat])
    dom_rows = np.hstack([x_domain.c, np.zeros((x_domain.nrows, nv))])
    return np.vstack([qp_rows, dom_rows]), np.concatenate([qp.w_vec, x_domain.d])


def _ray_certificates(mat, rhs, nq):
    """Max ray value from the origin along each QP row normal (inf if free).

    Sound lower bounds on the per-row LP maxima, valid against any subset of
    the other rows; requires a strictly interior origin (rhs > 0).
    """
    normals = mat[:nq]
    dots = mat @ normals.T  # (all rows) x (candidates)
    values = np.full(nq, np.inf)
    sq = np.einsum("ij,ij->i", normals, normals)
    for i in range(nq):
        col = dots[:, i]
        blocking = col > 1e-12
        blocking[i] = False
        if not np.any(blocking):
            continue
        t = np.min(rhs[blocking] / col[blocking])
        values[i] = t * sq[i]
    return values


def _row_max_highs(objective, mat, rhs):
    """(status, value, z) of max objective'z s.t. mat z <= rhs, |z| <= 1e6."""
    res = _scipy_linprog(
        -objective, A_ub=mat, b_ub=rhs,
        bounds=[(-SAFEGUARD_BOUND, SAFEGUARD_BOUND)] * mat.shape[1],
        method="highs",
    )
    if res.status == 3:
        return LpStatus.UNBOUNDED, np.nan, None
    if res.status == 2:
        return LpStatus.INFEASIBLE, np.nan, None
    if not res.success:
        return LpStatus.STALLED, np.nan, None
    return LpStatus.OPTIMAL, float(-res.fun), res.x


def _row_max_bland(objective, mat, rhs):
    dim = mat.shape[1]
    box = HalfspaceSet.box(-SAFEGUARD_BOUND * np.ones(dim), SAFEGUARD_BOUND * np.ones(dim))
    sol = lp_solve(LpInstance(
        objective=objective,
        rows_c=np.vstack([mat, box.c]), rows_d=np.concatenate([rhs, box.d]),
        maximize=True,
    ))
    return sol.status, sol.value, sol.z


_ROW_ENGINES = {"highs": _row_max_highs, "bland": _row_max_bland}


def remove_redundant(qp: CondensedQp, x_domain: HalfspaceSet, engine: str = "highs"):
    """Drop every constraint row that can never become active.

    Row i is removed iff the maximum of G_i U - E_i x over all other kept
    rows (with x in x_domain and a +-1e6 safety box on every variable) stays
    within w_i + 1e-9.  A test LP whose optimum leans on the safety box (or
    fails numerically) keeps its row.  Returns (reduced qp, removed indices).
    """
    row_max = _ROW_ENGINES[engine]
    mat, rhs = _joint_rows(qp, x_domain)
    nq = qp.nrows
    kept = np.ones(mat.shape[0], dtype=bool)

    certificates = None
    if np.all(rhs > 1e-12):
        certificates = _ray_certificates(mat, rhs, nq)

    removed = []
    for i in range(nq):
        if certificates is not None and certificates[i] > qp.w_vec[i] + 1e-6:
            continue  # provably attains more than its bound: not redundant
        kept[i] = False  # exclude the row under test
        sel = np.flatnonzero(kept)
        status, value, z = row_max(mat[i], mat[sel], rhs[sel])
        kept[i] = True
        if status is LpStatus.UNBOUNDED:
            continue
        if status is not LpStatus.OPTIMAL:
            log.warning("redundancy LP for row %d returned %s; keeping row", i, status.value)
            continue
        if value > qp.w_vec[i] + REDUNDANCY_TOL:
            continue
        if np.max(np.abs(z)) >= SAFEGUARD_BOUND * (1.0 - 1e-9):
            continue  # optimum leans on the safety box: treat as unbounded
        kept[i] = False
        removed.append(i)

    kept_qp_rows = np.flatnonzero(kept[:nq])
    return reduced_qp(qp, kept_qp_rows), np.array(removed, dtype=int)


def default_x_domain(n: int, half_width: float = 1e4) -> HalfspaceSet:
    """Wide state box for parametric redundancy certification.

    A row removed over a wide domain is redundant over every smaller one, and
    the surviving row set stops changing once the domain comfortably covers
    the operating range (for the benchmark problems it is identical from
    twice the state box up to this default width).
    """
    return HalfspaceSet.box(-half_width * np.ones(n), half_width * np.ones(n))


def removal_report(qp: CondensedQp, removed: np.ndarray) -> str:
    """Text report of removed rows: index, time step, row kind."""
    lines = ["row,step,kind,local"]
    for i in removed:
        t = qp.row_tags[int(i)]
        lines.append(f"{int(i)},{t.step},{t.kind},{t.local}")
    return "\n".join(lines) + "\n"
