"""Registry of the six benchmark MPC problems.

Four plants, six problems: the MIMO plant appears with horizons 30 and 75 and
once more with offline redundant-constraint elimination; ACC is an adaptive
cruise controller; INPE an inverted pendulum on a cart; COMA a chain of six
coupled masses.  System matrices are stored verbatim at their published
3-significant-digit precision and are not re-derived from continuous-time
models.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .model import HalfspaceSet, LtiSystem, MpcSpec, dare


class ExampleId(enum.Enum):
    MIMO30 = "mimo30"
    MIMO75 = "mimo75"
    MIMORED30 = "mimored30"
    ACC25 = "acc25"
    INPE50 = "inpe50"
    COMA40 = "coma40"

    @classmethod
    def parse(cls, name: str) -> "ExampleId":
        try:
            return cls(name.strip().lower())
        except ValueError:
            known = ", ".join(e.value for e in cls)
            raise ValueError(f"unknown example {name!r}; expected one of: {known}") from None


MIMO_A = np.array([
    [8.34e-01, 1.81e-01, 7.27e-02, -5.61e-02, -1.59e-02, 4.28e-03, -1.95e-03, -6.74e-03, -5.56e-03, -7.94e-03],
    [-1.02e-01, 9.38e-01, -5.11e-03, -1.62e-01, -1.44e-02, 2.39e-03, 1.19e-03, -4.30e-03, 2.66e-03, 3.95e-03],
    [-4.09e-02, 1.37e-01, 8.91e-01, 3.14e-01, 1.02e-02, 9.60e-04, 4.77e-04, -1.73e-03, 1.07e-03, 1.59e-03],
    [3.16e-02, 1.50e-02, -1.37e-01, 8.62e-01, -1.55e-02, -7.41e-04, -3.68e-04, 1.34e-03, -8.27e-04, -1.23e-03],
    [8.94e-03, 7.21e-03, -8.31e-03, 4.17e-02, 8.84e-01, -2.10e-04, -1.04e-04, 3.78e-04, -2.34e-04, -3.47e-04],
    [-2.41e-03, -2.00e-03, 1.39e-03, 1.30e-03, -1.74e-02, 9.18e-01, -2.52e-01, -1.20e-02, 4.08e-02, -5.90e-04],
    [1.09e-03, 9.08e-04, -6.33e-04, -5.90e-04, 7.92e-03, 1.62e-01, 9.18e-01, 4.38e-02, 2.21e-02, 5.48e-02],
    [3.79e-03, 3.14e-03, -2.19e-03, -2.04e-03, 2.74e-02, -9.34e-03, -1.06e-01, 9.27e-01, 1.35e-01, -1.21e-02],
    [3.13e-03, 2.59e-03, -1.81e-03, -1.69e-03, 2.26e-02, 3.53e-04, 7.34e-03, -1.30e-01, 9.56e-01, 1.39e-01],
    [4.47e-03, 3.70e-03, -2.58e-03, -2.41e-03, 3.23e-02, -1.05e-04, -5.21e-05, 1.89e-04, -1.17e-04, 1.00e+00],
])

MIMO_B = np.array([
    [-4.58e-01, 3.06e-17, 3.30e-19],
    [-1.69e-01, 5.31e-02, -3.52e-05],
    [2.77e-01, -4.41e-02, -1.41e-05],
    [-2.98e-01, -3.67e-02, 1.09e-05],
    [1.97e-02, 5.20e-01, 3.09e-06],
    [6.21e-04, -5.04e-03, 4.69e-01],
    [-2.82e-04, 2.29e-03, 7.61e-01],
    [-9.76e-04, 7.92e-03, 3.26e-01],
    [-8.06e-04, 6.53e-03, -7.85e-02],
    [-1.15e-03, 9.33e-03, -1.56e-01],
])

INPE_A = np.array([
    [1.00e+00, -1.07e-03, 4.77e-02, -1.11e-05],
    [0.00e+00, 1.03e+00, 4.73e-03, 5.03e-02],
    [0.00e+00, -4.22e-02, 9.09e-01, -8.00e-04],
    [0.00e+00, 1.08e+00, 1.87e-01, 1.02e+00],
])

INPE_B = np.array([
    [3.63e-04],
    [-7.53e-04],
    [1.43e-02],
    [-2.97e-02],
])

COMA_A = np.array([
    [7.63e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 2.63e-10, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06, 5.26e-09, 1.20e-11],
    [1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06, 5.26e-09],
    [2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04, 1.51e-06],
    [2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02, 2.51e-04],
    [9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 5.26e-09, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01, 1.98e-02],
    [2.63e-10, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.63e-01, 1.20e-11, 5.26e-09, 1.51e-06, 2.51e-04, 1.98e-02, 4.60e-01],
    [-8.99e-01, 4.20e-01, 1.93e-02, 2.48e-04, 1.50e-06, 5.24e-09, 7.63e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08, 2.63e-10],
    [4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.48e-04, 1.50e-06, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05, 9.42e-08],
    [1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.48e-04, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03, 2.09e-05],
    [2.48e-04, 1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 1.93e-02, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01, 2.48e-03],
    [1.50e-06, 2.48e-04, 1.93e-02, 4.20e-01, -8.80e-01, 4.20e-01, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.65e-01, 1.15e-01],
    [5.24e-09, 1.50e-06, 2.48e-04, 1.93e-02, 4.20e-01, -8.99e-01, 2.63e-10, 9.42e-08, 2.09e-05, 2.48e-03, 1.15e-01, 7.63e-01],
])

COMA_B = np.array([
    [1.17e-01, 2.11e-05, 9.48e-08],
    [-1.17e-01, 2.52e-03, 2.11e-05],
    [-2.50e-03, 1.20e-01, 2.52e-03],
    [-2.10e-05, 5.02e-13, 1.20e-01],
    [-9.45e-08, -1.20e-01, 9.48e-08],
    [-2.64e-10, -2.52e-03, -1.20e-01],
    [4.40e-01, 2.51e-04, 1.51e-06],
    [-4.40e-01, 1.98e-02, 2.51e-04],
    [-1.96e-02, 4.60e-01, 1.98e-02],
    [-2.50e-04, 1.20e-11, 4.60e-01],
    [-1.50e-06, -4.60e-01, 1.51e-06],
    [-5.25e-09, -1.98e-02, -4.59e-01],
])

ACC_TS = 0.1


def _acc_system() -> LtiSystem:
    ts = ACC_TS
    a = np.array([
        [1.0, -ts, 0.0, 1.5 * ts + 0.5 * ts * ts],
        [0.0, 1.0, 0.0, -ts],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([[0.0], [0.0], [0.0], [1.0]])
    return LtiSystem(a, b)


def _acc_state_set() -> HalfspaceSet:
    # State x = (e, v_r, v_t, a_h).  Distance error bounds are coupled to the
    # velocities; the target-velocity rows put the origin on the boundary.
    c = np.array([
        [1.0, 1.5, -1.5, 0.0],   # e <= 3.5 + 1.5 (v_t - v_r)
        [-1.0, -1.5, 1.5, 0.0],  # e >= 3.5 + 1.5 (v_t - v_r) - 200
        [0.0, 1.0, -1.0, 0.0],   # v_r <= v_t
        [0.0, -1.0, 1.0, 0.0],   # v_r >= v_t - 50
        [0.0, 0.0, 1.0, 0.0],    # v_t <= 50
        [0.0, 0.0, -1.0, 0.0],   # v_t >= 0
        [0.0, 0.0, 0.0, 1.0],    # a_h <= 2
        [0.0, 0.0, 0.0, -1.0],   # a_h >= -3
    ])
    d = np.array([3.5, 196.5, 0.0, 50.0, 50.0, 0.0, 2.0, 3.0])
    return HalfspaceSet(c, d)


def _mimo_spec(horizon: int, eliminate_redundant: bool, name: str) -> MpcSpec:
    sys = LtiSystem(MIMO_A, MIMO_B)
    q = np.eye(10)
    r = 0.25 * np.eye(3)
    state = HalfspaceSet.box(-10.0 * np.ones(10), 10.0 * np.ones(10))
    inputs = HalfspaceSet.box(-np.ones(3), np.ones(3))
    return MpcSpec(
        sys=sys, horizon=horizon, q_mat=q, r_mat=r, p_mat=dare(sys.a, sys.b, q, r),
        state_set=state, input_set=inputs, terminal_set=state,
        prestabilize=True, eliminate_redundant=eliminate_redundant, name=name,
    )


def build_example(example: ExampleId) -> MpcSpec:
    """Construct the MpcSpec for one of the six benchmark problems."""
    if example is ExampleId.MIMO30:
        return _mimo_spec(30, False, "mimo30")
    if example is ExampleId.MIMO75:
        return _mimo_spec(75, False, "mimo75")
    if example is ExampleId.MIMORED30:
        return _mimo_spec(30, True, "mimored30")

    if example is ExampleId.ACC25:
        sys = _acc_system()
        state = _acc_state_set()
        inputs = HalfspaceSet.box([-0.3], [0.3])
        # The target velocity v_t is uncontrollable and unweighted: it never
        # decays, so convergence is judged on (e, v_r, a_h) and initial
        # errors are kept within reach of the +-0.3 jerk authority.
        return MpcSpec(
            sys=sys, horizon=25,
            q_mat=np.diag([2.5, 5.0, 0.0, 1.0]), r_mat=np.eye(1), p_mat=np.zeros((4, 4)),
            state_set=state, input_set=inputs, terminal_set=state,
            prestabilize=False, include_step0_state_rows=True, name="acc25",
            x0_lo=np.array([-12.0, -7.0, 5.0, -3.0]),
            x0_hi=np.array([3.5, 7.0, 50.0, 2.0]),
            regulated_dims=(0, 1, 3),
        )

    if example is ExampleId.INPE50:
        sys = LtiSystem(INPE_A, INPE_B)
        q = np.eye(4)
        r = 0.01 * np.eye(1)
        state = HalfspaceSet.box(
            [-1.0, -math.pi / 3.0, -9.0, -2.0 * math.pi],
            [1.0, math.pi / 3.0, 9.0, 2.0 * math.pi],
        )
        inputs = HalfspaceSet.box([-10.0], [10.0])
        return MpcSpec(
            sys=sys, horizon=50, q_mat=q, r_mat=r, p_mat=dare(sys.a, sys.b, q, r),
            state_set=state, input_set=inputs, terminal_set=state,
            prestabilize=True, name="inpe50",
        )

    if example is ExampleId.COMA40:
        sys = LtiSystem(COMA_A, COMA_B)
        q = np.eye(12)
        r = np.eye(3)
        state = HalfspaceSet.box(-4.0 * np.ones(12), 4.0 * np.ones(12))
        inputs = HalfspaceSet.box(-0.5 * np.ones(3), 0.5 * np.ones(3))
        return MpcSpec(
            sys=sys, horizon=40, q_mat=q, r_mat=r, p_mat=dare(sys.a, sys.b, q, r),
            state_set=state, input_set=inputs, terminal_set=state,
            prestabilize=True, name="coma40",
        )

    raise ValueError(f"unhandled example {example}")
