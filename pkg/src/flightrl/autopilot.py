"""Three-loop acceleration autopilot and its gain-scheduled LQR baseline.

The control law is fixed: an acceleration error scaled by K_DC feeds a
K_A proportional path, a pitch-rate-corrected K_I integral path, and a
K_g output gain driving the fin command. Baseline gains are designed
per (alpha, Mach, height) node by LQR on the integral-augmented
short-period model and interpolated trilinearly at run time.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .airframe import (
    SystemState,
    aero_coefficients,
    lateral_acceleration,
    speed_of_sound,
    state_derivative,
)


class TrimError(RuntimeError):
    """Newton iteration for the trim point did not converge."""


class DesignError(RuntimeError):
    """Gain synthesis failed at a schedule node."""


@dataclass
class GainSet:
    """The four three-loop autopilot gains."""

    k_dc: float
    k_a: float
    k_i: float
    k_g: float

    def as_array(self):
        return np.array([self.k_dc, self.k_a, self.k_i, self.k_g])

    @classmethod
    def from_array(cls, values):
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


@dataclass
class ControllerState:
    """Single scalar state of the K_I integral path."""

    integrator: float = 0.0


@dataclass
class LinearModel:
    """Short-period linearization: states (alpha, q), input delta, output a_z."""

    a: np.ndarray          # 2x2
    b: np.ndarray          # (2,)
    c: np.ndarray          # (2,)
    d: float
    trim_point: tuple      # (alpha, mach, height, delta)


@dataclass
class GainSchedule:
    """Gains on a rectangular (alpha, mach, height) grid."""

    alphas: np.ndarray
    machs: np.ndarray
    heights: np.ndarray
    gains: np.ndarray      # shape (n_alpha, n_mach, n_height, 4)
    interpolation: str = "trilinear"


def three_loop_command(gains, a_zc, a_z, q, ctrl, dt):
    """One controller step; returns (delta_c, new ControllerState).

    Forward-Euler integral at the control period.
    """
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    error = gains.k_dc * a_zc - a_z
    integrator = ctrl.integrator + dt * gains.k_i * (gains.k_a * error - q)
    delta_c = gains.k_g * (integrator - q)
    return delta_c, ControllerState(integrator)


def moment_trim_delta(alpha, mach, table):
    """Fin deflection that zeroes the pitching moment at (alpha, mach)."""
    return -(
        table.a_m * alpha ** 3
        + table.b_m * alpha * abs(alpha)
        + table.c_m * (-7.0 + 8.0 * mach / 3.0) * alpha
    ) / table.d_m


def trim(mach, height, params, table, max_iter=50, tol=1e-10):
    """Level-flight equilibrium: returns (alpha_trim, delta_trim).

    Solves alpha_dot = 0 (at q = 0, gamma = 0) with delta slaved to the
    moment-trim closed form, so q_dot = 0 holds by construction.
    """

    def residual(alpha):
        delta = moment_trim_delta(alpha, mach, table)
        state = SystemState(alpha, 0.0, alpha, mach, height, delta, 0.0)
        return state_derivative(state, params, table)[0]

    alpha = 0.0
    step = 1e-7
    for _ in range(max_iter):
        r = residual(alpha)
        if abs(r) < tol:
            return alpha, moment_trim_delta(alpha, mach, table)
        slope = (residual(alpha + step) - residual(alpha - step)) / (2.0 * step)
        if slope == 0.0 or not math.isfinite(slope):
            break
        alpha -= r / slope
    raise TrimError(f"trim did not converge at M={mach}, h={height}")


def linearize(state, delta, params, table, rel_step=1e-6):
    """Central-difference Jacobians of (alpha_dot, q_dot) and the a_z output row."""

    def rates(alpha, q, d):
        s = SystemState(alpha, q, state.theta, state.mach, state.height, d, 0.0)
        d_alpha, d_q = state_derivative(s, params, table)[:2]
        return np.array([d_alpha, d_q])

    def accel(alpha, q, d):
        s = SystemState(alpha, q, state.theta, state.mach, state.height, d, 0.0)
        return lateral_acceleration(s, params, table)

    x0 = [state.alpha, state.q, delta]
    a = np.zeros((2, 2))
    b = np.zeros(2)
    c = np.zeros(2)
    d_term = 0.0
    for j in range(3):
        h = rel_step * max(1.0, abs(x0[j]))
        hi = list(x0)
        lo = list(x0)
        hi[j] += h
        lo[j] -= h
        col = (rates(*hi) - rates(*lo)) / (2.0 * h)
        out = (accel(*hi) - accel(*lo)) / (2.0 * h)
        if j < 2:
            a[:, j] = col
            c[j] = out
        else:
            b = col
            d_term = out
    return LinearModel(a, b, c, float(d_term),
                       (state.alpha, state.mach, state.height, delta))


def closed_loop_matrix(model, gains):
    """Linear loop with states (integrator, alpha, q); fin lag neglected."""
    a, b, c, d = model.a, model.b, model.c, model.d
    ki, ka, kg = gains.k_i, gains.k_a, gains.k_g
    m = np.zeros((3, 3))
    # integrator row: I_dot = ki*ka*(k_dc*a_zc - a_z) - ki*q, a_z = c.x + d*kg*(I - q)
    m[0, 0] = -ki * ka * d * kg
    m[0, 1] = -ki * ka * c[0]
    m[0, 2] = -ki * ka * c[1] + ki * ka * d * kg - ki
    # plant rows: x_dot = a.x + b*kg*(I - q)
    m[1:, 0] = b * kg
    m[1:, 1:] = a
    m[1:, 2] -= b * kg
    return m


def design_node_gains(alpha, mach, height, params, table,
                      q_weight=1.0, r_weight=1.0):
    """LQR synthesis at one schedule node; returns (GainSet, closed-loop poles).

    The design model augments the short-period states with the a_z error
    integral. The resulting state feedback is folded into the three-loop
    topology using alpha_dot ~= q, and K_DC is set for unit DC gain.
    """
    delta0 = moment_trim_delta(alpha, mach, table)
    state = SystemState(alpha, 0.0, alpha, mach, height, delta0, 0.0)
    model = linearize(state, delta0, params, table)

    a_aug = np.zeros((3, 3))
    a_aug[0, 1:] = -model.c
    a_aug[1:, 1:] = model.a
    b_aug = np.zeros((3, 1))
    b_aug[0, 0] = -model.d
    b_aug[1:, 0] = model.b
    q_cost = np.diag([q_weight, 0.0, 0.0])
    r_cost = np.array([[r_weight]])
    try:
        p = scipy.linalg.solve_continuous_are(a_aug, b_aug, q_cost, r_cost)
    except Exception as exc:
        raise DesignError(
            f"Riccati solve failed at node alpha={alpha}, M={mach}, h={height}: {exc}"
        ) from exc
    k1, k2, k3 = (b_aug.T @ p).ravel() / r_weight

    k_g = k3
    k_i = k2 / k3
    k_a = -k1 / k2
    v = mach * speed_of_sound(height)
    k_dc = 1.0 + 1.0 / (k_a * v)
    gains = GainSet(k_dc, k_a, k_i, k_g)

    poles = np.linalg.eigvals(closed_loop_matrix(model, gains))
    if np.max(poles.real) >= 0.0:
        raise DesignError(
            f"unstable closed loop at node alpha={alpha}, M={mach}, h={height}: "
            f"poles {poles}"
        )
    return gains, poles


def design_baseline_gains(alphas, machs, heights, params, table,
                          q_weight=1.0, r_weight=1.0, report=None):
    """Design a full GainSchedule; optionally report per-node poles."""
    alphas = np.asarray(alphas, dtype=float)
    machs = np.asarray(machs, dtype=float)
    heights = np.asarray(heights, dtype=float)
    gains = np.zeros((len(alphas), len(machs), len(heights), 4))
    for i, al in enumerate(alphas):
        for j, ma in enumerate(machs):
            for k, he in enumerate(heights):
                gs, poles = design_node_gains(al, ma, he, params, table,
                                              q_weight, r_weight)
                gains[i, j, k] = gs.as_array()
                if report is not None:
                    report(al, ma, he, gs, poles)
    return GainSchedule(alphas, machs, heights, gains)


def _axis_weights(axis, value):
    """Clamped linear interpolation: returns (lo index, hi index, hi weight)."""
    if value <= axis[0]:
        return 0, 0, 0.0
    if value >= axis[-1]:
        return len(axis) - 1, len(axis) - 1, 0.0
    hi = int(np.searchsorted(axis, value, side="right"))
    lo = hi - 1
    w = (value - axis[lo]) / (axis[hi] - axis[lo])
    return lo, hi, w


def schedule_gains(schedule, alpha, mach, height):
    """Trilinear interpolation over the grid, clamped at the envelope edges."""
    i0, i1, wi = _axis_weights(schedule.alphas, alpha)
    j0, j1, wj = _axis_weights(schedule.machs, mach)
    k0, k1, wk = _axis_weights(schedule.heights, height)
    g = schedule.gains
    c00 = g[i0, j0, k0] * (1 - wk) + g[i0, j0, k1] * wk
    c01 = g[i0, j1, k0] * (1 - wk) + g[i0, j1, k1] * wk
    c10 = g[i1, j0, k0] * (1 - wk) + g[i1, j0, k1] * wk
    c11 = g[i1, j1, k0] * (1 - wk) + g[i1, j1, k1] * wk
    c0 = c00 * (1 - wj) + c01 * wj
    c1 = c10 * (1 - wj) + c11 * wj
    return GainSet.from_array(c0 * (1 - wi) + c1 * wi)


SCHEDULE_MAGIC = "gainschedv1"


def save_schedule(path, schedule):
    """Versioned text format: axes then node gains, alpha-major row order."""
    with open(path, "w") as f:
        f.write(f"{SCHEDULE_MAGIC} {len(schedule.alphas)} "
                f"{len(schedule.machs)} {len(schedule.heights)}\n")
        for axis in (schedule.alphas, schedule.machs, schedule.heights):
            f.write(" ".join(format(v, ".17g") for v in axis) + "\n")
        for i in range(len(schedule.alphas)):
            for j in range(len(schedule.machs)):
                for k in range(len(schedule.heights)):
                    f.write(" ".join(format(v, ".17g")
                                     for v in schedule.gains[i, j, k]) + "\n")


def load_schedule(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    header = lines[0].split()
    if header[0] != SCHEDULE_MAGIC:
        raise ValueError(f"{path}: unknown schedule format {header[0]!r}")
    na, nm, nh = (int(v) for v in header[1:4])
    alphas = np.array([float(v) for v in lines[1].split()])
    machs = np.array([float(v) for v in lines[2].split()])
    heights = np.array([float(v) for v in lines[3].split()])
    if len(alphas) != na or len(machs) != nm or len(heights) != nh:
        raise ValueError(f"{path}: axis lengths disagree with header")
    gains = np.zeros((na, nm, nh, 4))
    rows = lines[4:]
    if len(rows) != na * nm * nh:
        raise ValueError(f"{path}: expected {na * nm * nh} gain rows, got {len(rows)}")
    idx = 0
    for i in range(na):
        for j in range(nm):
            for k in range(nh):
                gains[i, j, k] = [float(v) for v in rows[idx].split()]
                idx += 1
    return GainSchedule(alphas, machs, heights, gains)
