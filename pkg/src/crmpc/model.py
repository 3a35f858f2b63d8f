"""LTI systems, polytopic constraint sets, MPC problem data, and Riccati machinery.

The central object is :class:`MpcSpec`, which bundles a discrete-time system
x(t+1) = A x(t) + B u(t) with horizon, stage weights Q/R, terminal weight P,
and polytopic state/input/terminal sets.  All containers are frozen after
construction (arrays are marked read-only) so they can be shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NonConvergence, UnstablePrestabilization


def _frozen(a, dtype=float) -> np.ndarray:
    """Copy to a contiguous read-only float array."""
    out = np.array(a, dtype=dtype, order="C")
    out.setflags(write=False)
    return out


def spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a))))


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time linear system x(t+1) = a x(t) + b u(t)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        b = _frozen(np.atleast_2d(self.b))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"state map must be square, got {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise DimensionMismatch(f"input map {b.shape} incompatible with state dim {a.shape[0]}")
        if a.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionMismatch("state and input dimensions must be at least 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DimensionMismatch("system matrices must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True)
class HalfspaceSet:
    """Polyhedron {z : c z <= d}."""

    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        c = _frozen(np.atleast_2d(self.c))
        d = _frozen(np.atleast_1d(self.d))
        if c.shape[0] != d.shape[0]:
            raise DimensionMismatch(f"{c.shape[0]} rows vs {d.shape[0]} offsets")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def nrows(self) -> int:
        return self.c.shape[0]

    @property
    def dim(self) -> int:
        return self.c.shape[1]

    def contains(self, z: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.c @ z <= self.d + tol))

    def origin_margin(self) -> float:
        """min d over rows; > 0 iff the origin is strictly interior."""
        return float(np.min(self.d)) if self.nrows else np.inf

    @classmethod
    def box(cls, lo, hi) -> "HalfspaceSet":
        """Axis-aligned box lo <= z <= hi, rows interleaved (z_i <= hi_i, -z_i <= -lo_i)."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds must have equal length")
        k = lo.shape[0]
        c = np.zeros((2 * k, k))
        d = np.zeros(2 * k)
        for i in range(k):
            c[2 * i, i] = 1.0
            d[2 * i] = hi[i]
            c[2 * i + 1, i] = -1.0
            d[2 * i + 1] = -lo[i]
        return cls(c, d)


@dataclass(frozen=True)
class MpcSpec:
    """Finite-horizon MPC problem specification.

    Objective (to be minimized over the input sequence):

        x(N)' p x(N) + sum_{k=0}^{N-1} x(k)' q x(k) + u(k)' r u(k)

    subject to x(k) in state_set for k = 1..N-1 (and k = 0 when
    include_step0_state_rows), x(N) in terminal_set, u(k) in input_set.
    """

    sys: LtiSystem
    horizon: int
    q_mat: np.ndarray
    r_mat: np.ndarray
    p_mat: np.ndarray
    state_set: HalfspaceSet
    input_set: HalfspaceSet
    terminal_set: HalfspaceSet
    prestabilize: bool = False
    include_step0_state_rows: bool = False
    eliminate_redundant: bool = False
    name: str = ""
    # sampling box for initial states; defaults to the state box
    x0_lo: Optional[np.ndarray] = None
    x0_hi: Optional[np.ndarray] = None
    # state coordinates whose norm decides closed-loop convergence
    regulated_dims: Optional[tuple] = None

    def __post_init__(self):
        for fname in ("q_mat", "r_mat", "p_mat"):
            object.__setattr__(self, fname, _frozen(getattr(self, fname)))
        for fname in ("x0_lo", "x0_hi"):
            v = getattr(self, fname)
            if v is not None:
                object.__setattr__(self, fname, _frozen(v))
        if self.horizon < 1:
            raise DimensionMismatch("horizon must be at least 1")

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def m(self) -> int:
        return self.sys.m

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        """x' q x + u' r u for one completed step."""
        return float(x @ self.q_mat @ x + u @ self.r_mat @ u)

    def sampling_box(self):
        """(lo, hi) box from which initial states are drawn."""
        if self.x0_lo is not None and self.x0_hi is not None:
            return self.x0_lo, self.x0_hi
        return _bounding_box(self.state_set)

    def convergence_norm(self, x: np.ndarray) -> float:
        """Euclidean norm of the regulated coordinates of x."""
        if self.regulated_dims is None:
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(x[list(self.regulated_dims)]))


def _bounding_box(hs: HalfspaceSet):
    """Tightest axis-aligned box implied by single-variable rows of hs."""
    lo = np.full(hs.dim, -np.inf)
    hi = np.full(hs.dim, np.inf)
    for row, d in zip(hs.c, hs.d):
        nz = np.nonzero(row)[0]
        if len(nz) != 1:
            continue
        i = nz[0]
        if row[i] > 0:
            hi[i] = min(hi[i], d / row[i])
        else:
            lo[i] = max(lo[i], d / row[i])
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DimensionMismatch("state set has unbounded coordinates; provide an explicit x0 box")
    return lo, hi


# ---------------------------------------------------------------------------
# Riccati machinery


def dare(a, b, q_mat, r_mat, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Solve P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA by fixed-point iteration.

    Starts at P = Q and iterates until the Frobenius norm of the update falls
    below `tol` and the fixed-point residual is below 1e-9 (1 + ||P||_F).
    Converges for stabilizable (a, b) with detectable (a, q^1/2).
    """
    a = np.asarray(a, dtype=float)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    q = np.asarray(q_mat, dtype=float)
    r = np.atleast_2d(np.asarray(r_mat, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n or q.shape != (n, n) or r.shape != (b.shape[1],) * 2:
        raise DimensionMismatch("dare: inconsistent matrix dimensions")

    p = q.copy()
    for _ in range(max_iter):
        bpb = r + b.T @ p @ b
        k = np.linalg.solve(bpb, b.T @ p @ a)
        p_next = q + a.T @ p @ a - a.T @ p @ b @ k
        p_next = 0.5 * (p_next + p_next.T)
        delta = np.linalg.norm(p_next - p, "fro")
        p = p_next
        if delta <= tol and dare_residual(a, b, q, r, p) <= 1e-9 * (1.0 + np.linalg.norm(p, "fro")):
            return p
    raise NonConvergence(f"Riccati fixed point did not converge in {max_iter} iterations")


def dare_residual(a, b, q_mat, r_mat, p_mat) -> float:
    """Frobenius norm of P - (Q + A'PA - A'PB (R+B'PB)^-1 B'PA)."""
    a, b, q, r, p = (np.asarray(m, dtype=float) for m in (a, b, q_mat, r_mat, p_mat))
    b = np.atleast_2d(b)
    r = np.atleast_2d(r)
    k = np.linalg.solve(r + b.T @ p @ b, b.T @ p @ a)
    return float(np.linalg.norm(p - (q + a.T @ p @ a - a.T @ p @ b @ k), "fro"))


def lqr_gain(a, b, q_mat, r_mat, p_mat) -> np.ndarray:
    """Feedback gain K = (R + B'PB)^-1 B'PA for u = -K x.

    Raises UnstablePrestabilization unless the closed loop A - BK is strictly
    stable (spectral radius < 1 - 1e-9).
    """
    a = np.asarray(a, dtype=float)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    r = np.atleast_2d(np.asarray(r_mat, dtype=float))
    p = np.asarray(p_mat, dtype=float)
    k = np.linalg.solve(r + b.T @ p @ b, b.T @ p @ a)
    rho = spectral_radius(a - b @ k)
    if rho >= 1.0 - 1e-9:
        raise UnstablePrestabilization(f"closed-loop spectral radius {rho:.6f} >= 1")
    return k


def _is_stabilizable(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """PBH test: rank [A - lam I, B] = n for every eigenvalue with |lam| >= 1."""
    n = a.shape[0]
    for lam in np.linalg.eigvals(a):
        if abs(lam) < 1.0 - tol:
            continue
        if np.linalg.matrix_rank(np.hstack([a - lam * np.eye(n), b]), tol=1e-8) < n:
            return False
    return True


# ---------------------------------------------------------------------------
# Validation


def _sym_eig_floor(m: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(0.5 * (m + m.T))))


def validate_spec(spec: MpcSpec) -> list:
    """Check all MpcSpec invariants; returns a list of violation strings.

    An empty list means the spec is valid.  Violations are data, not errors.
    """
    v = []
    n, m = spec.n, spec.m
    if spec.q_mat.shape != (n, n):
        v.append("q_mat dimension mismatch")
    elif np.linalg.norm(spec.q_mat - spec.q_mat.T) > 1e-10 * (1 + np.linalg.norm(spec.q_mat)):
        v.append("q_mat not symmetric")
    elif _sym_eig_floor(spec.q_mat) < -1e-10:
        v.append("q_mat not positive semidefinite")

    if spec.r_mat.shape != (m, m):
        v.append("r_mat dimension mismatch")
    elif np.linalg.norm(spec.r_mat - spec.r_mat.T) > 1e-10 * (1 + np.linalg.norm(spec.r_mat)):
        v.append("r_mat not symmetric")
    elif _sym_eig_floor(spec.r_mat) <= 0.0:
        v.append("r_mat not positive definite")

    if spec.p_mat.shape != (n, n):
        v.append("p_mat dimension mismatch")
    elif _sym_eig_floor(spec.p_mat) < -1e-10:
        v.append("p_mat not positive semidefinite")

    if spec.state_set.dim != n:
        v.append("state_set dimension mismatch")
    if spec.terminal_set.dim != n:
        v.append("terminal_set dimension mismatch")
    if spec.input_set.dim != m:
        v.append("input_set dimension mismatch")

    # The input set must contain the origin strictly; state/terminal sets may
    # touch it (ACC-style coupled rows place the origin on the boundary).
    if spec.input_set.origin_margin() <= 0.0:
        v.append("input_set interior violation")
    if spec.state_set.origin_margin() < 0.0:
        v.append("state_set does not contain the origin")
    if spec.terminal_set.origin_margin() < 0.0:
        v.append("terminal_set does not contain the origin")

    if spec.prestabilize and not _is_stabilizable(spec.sys.a, spec.sys.b):
        v.append("system not stabilizable but prestabilization requested")
    return v


# ---------------------------------------------------------------------------
# Serialization (self-describing JSON; matrices as nested row-major lists)


def spec_to_dict(spec: MpcSpec) -> dict:
    d = {
        "name": spec.name,
        "a": spec.sys.a.tolist(),
        "b": spec.sys.b.tolist(),
        "horizon": spec.horizon,
        "q_mat": spec.q_mat.tolist(),
        "r_mat": spec.r_mat.tolist(),
        "p_mat": spec.p_mat.tolist(),
        "state_set": {"c": spec.state_set.c.tolist(), "d": spec.state_set.d.tolist()},
        "input_set": {"c": spec.input_set.c.tolist(), "d": spec.input_set.d.tolist()},
        "terminal_set": {"c": spec.terminal_set.c.tolist(), "d": spec.terminal_set.d.tolist()},
        "prestabilize": spec.prestabilize,
        "include_step0_state_rows": spec.include_step0_state_rows,
        "eliminate_redundant": spec.eliminate_redundant,
    }
    if spec.x0_lo is not None:
        d["x0_lo"] = spec.x0_lo.tolist()
        d["x0_hi"] = spec.x0_hi.tolist()
    if spec.regulated_dims is not None:
        d["regulated_dims"] = list(spec.regulated_dims)
    return d


def spec_from_dict(d: dict) -> MpcSpec:
    return MpcSpec(
        sys=LtiSystem(np.array(d["a"]), np.array(d["b"])),
        horizon=int(d["horizon"]),
        q_mat=np.array(d["q_mat"]),
        r_mat=np.array(d["r_mat"]),
        p_mat=np.array(d["p_mat"]),
        state_set=HalfspaceSet(np.array(d["state_set"]["c"]), np.array(d["state_set"]["d"])),
        input_set=HalfspaceSet(np.array(d["input_set"]["c"]), np.array(d["input_set"]["d"])),
        terminal_set=HalfspaceSet(np.array(d["terminal_set"]["c"]), np.array(d["terminal_set"]["d"])),
        prestabilize=bool(d.get("prestabilize", False)),
        include_step0_state_rows=bool(d.get("include_step0_state_rows", False)),
        eliminate_redundant=bool(d.get("eliminate_redundant", False)),
        name=d.get("name", ""),
        x0_lo=np.array(d["x0_lo"]) if "x0_lo" in d else None,
        x0_hi=np.array(d["x0_hi"]) if "x0_hi" in d else None,
        regulated_dims=tuple(d["regulated_dims"]) if "regulated_dims" in d else None,
    )


def save_spec(spec: MpcSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=1)


def load_spec(path) -> MpcSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
