"""Timing campaigns, empirical CDFs, summary statistics, and report emission.

A campaign pairs every requested (example, solver) combination in both modes
(full QP vs constraint removal) over the identical set of initial states and
emits one record per solved QP.  Timing campaigns run strictly sequentially;
summaries compare mean times, the fraction of CR solves beating the fastest
full solve, CDF quantiles, and the unconstrained-detection rate.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .condense import CondensedQp, condense
from .crem import CremPrecomp, precompute
from .errors import EmptySelection, IoFailure
from .examples import ExampleId, build_example
from .model import MpcSpec
from .redundancy import default_x_domain, remove_redundant
from .sim import Termination, rollout, sample_x0
from .qp import QpInstance, solve_active_set, solve_ipm

RECORD_FIELDS = (
    "example", "solver", "mode", "traj", "step", "kept_rows", "all_removed",
    "certify_ns", "setup_ns", "solve_ns", "total_ns", "iters", "status",
)

# initial-condition counts used by the original study (Tab-1 scale)
FULL_SCALE_X0 = {
    ExampleId.MIMO30: 4935, ExampleId.MIMO75: 5046, ExampleId.MIMORED30: 4708,
    ExampleId.ACC25: 6159, ExampleId.INPE50: 6764, ExampleId.COMA40: 8028,
}


@dataclass(frozen=True)
class QpRecord:
    example: str
    solver: str
    mode: str
    traj: int
    step: int
    kept_rows: int
    all_removed: bool
    certify_ns: int
    setup_ns: int
    solve_ns: int
    total_ns: int
    iters: int
    status: str

    def astuple(self):
        return tuple(getattr(self, f) for f in RECORD_FIELDS)


@dataclass(frozen=True)
class CampaignConfig:
    examples: tuple
    solvers: tuple = ("active_set", "ipm")
    modes: tuple = ("full", "cr")
    seed: int = 2024
    x0_count: int = 100
    step_cap: int = 1000
    warmup: int = 100
    full_scale: bool = False
    parallel: bool = False


@dataclass
class CampaignResult:
    records: list
    capped: set = field(default_factory=set)      # (example, solver, mode, traj)
    infeasible: set = field(default_factory=set)
    timing_valid: bool = True


_PREPARED: dict = {}


def prepared_example(example: ExampleId):
    """(spec, condensed qp, certification precomp) with per-process caching.

    MIMORED30 includes the offline redundant-row elimination.
    """
    if example not in _PREPARED:
        spec = build_example(example)
        qp = condense(spec)
        if spec.eliminate_redundant:
            qp, _ = remove_redundant(qp, default_x_domain(spec.n))
        _PREPARED[example] = (spec, qp, precompute(qp))
    return _PREPARED[example]


def _example_seed(config: CampaignConfig, example: ExampleId) -> list:
    return [config.seed, list(ExampleId).index(example)]


def _trajectory_records(example, solver, mode, ti, traj) -> list:
    out = []
    for si, step in enumerate(traj.steps):
        st = step.stats
        total = st.certify_ns + st.setup_ns + st.solve_ns
        out.append(QpRecord(
            example=example, solver=solver, mode=mode, traj=ti, step=si,
            kept_rows=st.kept_count, all_removed=st.all_removed,
            certify_ns=st.certify_ns, setup_ns=st.setup_ns, solve_ns=st.solve_ns,
            total_ns=total, iters=st.iterations, status=st.status.value,
        ))
    return out


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """Run all (example, solver, mode) cases over shared initial states.

    The same x0 set (per example, drawn once from the seeded sampler) is used
    in every case.  Each case is preceded by untimed warm-up solves.  Timing
    campaigns are single-threaded; with parallel=True trajectories may run
    concurrently and all recorded times are zeroed (correctness-only run).
    """
    result = CampaignResult(records=[], timing_valid=not config.parallel)
    solve = {"active_set": solve_active_set, "ipm": solve_ipm}
    for example in config.examples:
        spec, qp, precomp = prepared_example(example)
        count = FULL_SCALE_X0[example] if config.full_scale else config.x0_count
        x0s = sample_x0(spec, qp, _example_seed(config, example), count)
        for solver in config.solvers:
            for mode in config.modes:
                for _ in range(config.warmup):
                    solve[solver](QpInstance.from_condensed(qp, x0s[0]))
                runs = [(ti, x0) for ti, x0 in enumerate(x0s)]

                def _one(ti_x0):
                    ti, x0 = ti_x0
                    traj = rollout(spec, qp, x0, mode=mode, solver=solver,
                                   precomp=precomp, step_cap=config.step_cap)
                    return ti, traj

                if config.parallel:
                    from concurrent.futures import ThreadPoolExecutor

                    with ThreadPoolExecutor() as pool:
                        outcomes = list(pool.map(_one, runs))
                else:
                    outcomes = [_one(r) for r in runs]

                for ti, traj in outcomes:
                    key = (spec.name, solver, mode, ti)
                    if traj.terminated is Termination.STEP_CAP:
                        result.capped.add(key)
                    elif traj.terminated is Termination.INFEASIBLE:
                        result.infeasible.add(key)
                    result.records.extend(_trajectory_records(spec.name, solver, mode, ti, traj))
    if config.parallel:
        result.records = [
            QpRecord(**{**{f: getattr(r, f) for f in RECORD_FIELDS},
                        "certify_ns": 0, "setup_ns": 0, "solve_ns": 0, "total_ns": 0})
            for r in result.records
        ]
    return result


# ---------------------------------------------------------------------------
# Empirical CDFs


@dataclass(frozen=True)
class CdfSeries:
    """Empirical CDF of per-QP total times (right-continuous step function)."""

    times: np.ndarray  # sorted ascending

    def __post_init__(self):
        t = np.sort(np.asarray(self.times, dtype=np.int64))
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)

    def eval(self, t) -> float:
        """Fraction of records with total time <= t."""
        return float(np.searchsorted(self.times, t, side="right")) / len(self.times)

    def quantile(self, p: float) -> float:
        """Time at which the CDF reaches p, linearly interpolated between steps."""
        m = len(self.times)
        levels = np.arange(1, m + 1) / m
        return float(np.interp(p, levels, self.times))

    @property
    def max_time(self) -> int:
        return int(self.times[-1])


def compute_cdf(records) -> CdfSeries:
    """CDF of total_ns over a (nonempty) record selection."""
    records = list(records)
    if not records:
        raise EmptySelection("no records to build a CDF from")
    return CdfSeries(np.array([r.total_ns for r in records], dtype=np.int64))


# ---------------------------------------------------------------------------
# Summary statistics


@dataclass(frozen=True)
class SummaryRow:
    example: str
    solver: str
    n_full: int
    n_cr: int
    mean_full_ns: float
    mean_cr_ns: float
    diff_abs_ns: float        # mean_cr - mean_full (negative: CR faster)
    diff_rel_pct: float       # 100 * diff_abs / mean_full
    frac_faster_pct: float    # CR records beating the fastest full record
    t70_full_ns: float
    t70_cr_ns: float
    detect_frac_pct: float    # CR records solved by the closed form
    cr_left_dominant: bool    # CR CDF everywhere >= full CDF


@dataclass(frozen=True)
class SummaryTables:
    rows: tuple

    def find(self, example: str, solver: str) -> SummaryRow:
        for r in self.rows:
            if r.example == example and r.solver == solver:
                return r
        raise KeyError((example, solver))


def _timing_subset(records, invalid_keys):
    if not invalid_keys:
        return records
    return [r for r in records if (r.example, r.solver, r.mode, r.traj) not in invalid_keys]


def summarize(records, invalid_timing_keys=frozenset()) -> SummaryTables:
    """Per (example, solver) comparison of the two modes.

    Records from trajectories in invalid_timing_keys (e.g. step-capped runs)
    are excluded from time statistics but still count toward the
    unconstrained-detection fraction.
    """
    records = list(records)
    if not records:
        raise EmptySelection("no records to summarize")
    pairs = sorted({(r.example, r.solver) for r in records})
    rows = []
    for example, solver in pairs:
        sel = [r for r in records if r.example == example and r.solver == solver]
        full_all = [r for r in sel if r.mode == "full"]
        cr_all = [r for r in sel if r.mode == "cr"]
        if not full_all or not cr_all:
            continue
        full = _timing_subset(full_all, invalid_timing_keys)
        cr = _timing_subset(cr_all, invalid_timing_keys)
        if not full or not cr:
            continue
        t_full = np.array([r.total_ns for r in full], dtype=float)
        t_cr = np.array([r.total_ns for r in cr], dtype=float)
        mean_full = float(np.mean(t_full))
        mean_cr = float(np.mean(t_cr))
        cdf_full = CdfSeries(t_full.astype(np.int64))
        cdf_cr = CdfSeries(t_cr.astype(np.int64))
        grid = np.unique(np.concatenate([cdf_full.times, cdf_cr.times]))
        dominant = all(cdf_cr.eval(t) >= cdf_full.eval(t) - 1e-12 for t in grid)
        detect = 100.0 * np.mean([r.all_removed for r in cr_all])
        rows.append(SummaryRow(
            example=example, solver=solver, n_full=len(full), n_cr=len(cr),
            mean_full_ns=mean_full, mean_cr_ns=mean_cr,
            diff_abs_ns=mean_cr - mean_full,
            diff_rel_pct=100.0 * (mean_cr - mean_full) / mean_full,
            frac_faster_pct=100.0 * float(np.mean(t_cr < np.min(t_full))),
            t70_full_ns=cdf_full.quantile(0.7), t70_cr_ns=cdf_cr.quantile(0.7),
            detect_frac_pct=float(detect), cr_left_dominant=dominant,
        ))
    return SummaryTables(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Output emission


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow(r.astuple())


def load_records_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(QpRecord(
                example=row["example"], solver=row["solver"], mode=row["mode"],
                traj=int(row["traj"]), step=int(row["step"]),
                kept_rows=int(row["kept_rows"]), all_removed=row["all_removed"] == "True",
                certify_ns=int(row["certify_ns"]), setup_ns=int(row["setup_ns"]),
                solve_ns=int(row["solve_ns"]), total_ns=int(row["total_ns"]),
                iters=int(row["iters"]), status=row["status"],
            ))
    return out


def write_cdf_csv(series: CdfSeries, path) -> None:
    m = len(series)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_ns", "h_cdf"])
        for i, t in enumerate(series.times):
            writer.writerow([int(t), (i + 1) / m])


def load_cdf_csv(path) -> CdfSeries:
    times = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(int(row["time_ns"]))
    return CdfSeries(np.array(times, dtype=np.int64))


def _plot_pair(cdf_full: Optional[CdfSeries], cdf_cr: Optional[CdfSeries], title: str, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    upper = 0.0
    for series, color, label in ((cdf_full, "blue", "full-MPC"), (cdf_cr, "red", "CR-MPC")):
        if series is None:
            continue
        m = len(series)
        ax.step(series.times / 1e6, np.arange(1, m + 1) / m, where="post", color=color, label=label)
        upper = max(upper, series.quantile(0.99) / 1e6)
    ax.set_xlim(0.0, 1.05 * upper if upper > 0 else 1.0)
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("time per QP [ms]")
    ax.set_ylabel("fraction of QPs solved")
    ax.set_title(title)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def emit_outputs(records, tables: Optional[SummaryTables], out_dir) -> list:
    """Write record/CDF/summary CSVs and one overlay plot per (example, solver).

    Returns the list of written paths.  An empty record set produces only a
    warning file.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
        written = []
        records = list(records)
        if not records:
            path = os.path.join(out_dir, "warning.txt")
            with open(path, "w") as fh:
                fh.write("no records matched the selection; nothing to plot\n")
            return [path]

        path = os.path.join(out_dir, "records.csv")
        write_records_csv(records, path)
        written.append(path)

        cases = sorted({(r.example, r.solver) for r in records})
        for example, solver in cases:
            series = {}
            for mode in ("full", "cr"):
                sel = [r for r in records if (r.example, r.solver, r.mode) == (example, solver, mode)]
                if sel:
                    series[mode] = compute_cdf(sel)
                    path = os.path.join(out_dir, f"cdf_{example}_{solver}_{mode}.csv")
                    write_cdf_csv(series[mode], path)
                    written.append(path)
            path = os.path.join(out_dir, f"cdf_{example}_{solver}.svg")
            _plot_pair(series.get("full"), series.get("cr"), f"{example} / {solver}", path)
            written.append(path)

        if tables is not None:
            path = os.path.join(out_dir, "summary.csv")
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow([
                    "example", "solver", "n_full", "n_cr", "mean_full_ns", "mean_cr_ns",
                    "diff_abs_ns", "diff_rel_pct", "frac_faster_pct",
                    "t70_full_ns", "t70_cr_ns", "detect_frac_pct", "cr_left_dominant",
                ])
                for r in tables.rows:
                    writer.writerow([
                        r.example, r.solver, r.n_full, r.n_cr,
                        f"{r.mean_full_ns:.1f}", f"{r.mean_cr_ns:.1f}",
                        f"{r.diff_abs_ns:.1f}", f"{r.diff_rel_pct:.2f}",
                        f"{r.frac_faster_pct:.2f}", f"{r.t70_full_ns:.1f}",
                        f"{r.t70_cr_ns:.1f}", f"{r.detect_frac_pct:.2f}", r.cr_left_dominant,
                    ])
            written.append(path)
        return written
    except OSError as exc:
        raise IoFailure(f"cannot write outputs to {out_dir}: {exc}") from exc


# ---------------------------------------------------------------------------
# Oracle equivalence verification (drives the `verify` CLI command)


def verify_equivalence(example: ExampleId, x0_count: int = 5, seed: int = 7,
                       solver: str = "active_set", step_cap: int = 1000):
    """Check CR steps against full-QP solves along closed-loop trajectories.

    For every step of every trajectory the CR input must match the full-QP
    input within 1e-6 and every removed row must be strictly inactive at the
    full optimizer.  Returns (ok, checked_steps, message).
    """
    from .crem import RemovalContext, certify_inactive, mpc_step

    spec, qp, precomp = prepared_example(example)
    x0s = sample_x0(spec, qp, [seed, list(ExampleId).index(example)], x0_count)
    solve = {"active_set": solve_active_set, "ipm": solve_ipm}[solver]
    checked = 0
    for x0 in x0s:
        x = np.asarray(x0)
        ctx = RemovalContext.fresh()
        for _ in range(step_cap):
            if spec.convergence_norm(x) <= 1e-3:
                break
            removal = certify_inactive(x, ctx, precomp, qp)
            full = solve(QpInstance.from_condensed(qp, x))
            if not full.optimal:
                return False, checked, f"full QP not optimal at {x}"
            u_full = qp.first_input(x, full.u_star)
            u_cr, _, ctx = mpc_step(x, ctx, precomp, qp, solver=solver)
            scale = 1.0 + float(np.max(np.abs(u_full)))
            if np.max(np.abs(u_cr - u_full)) > 1e-6 * scale:
                return False, checked, f"input mismatch at state {x}"
            if removal.removed.size:
                slack = qp.rhs(x)[removal.removed] - qp.g_mat[removal.removed] @ full.u_star
                eps = 1e-9 * (1.0 + np.abs(qp.w_vec[removal.removed]))
                if np.any(slack <= 0.5 * eps):
                    return False, checked, f"removed row not strictly inactive at {x}"
            checked += 1
            x = spec.sys.a @ x + spec.sys.b @ u_cr
    return True, checked, "ok"
