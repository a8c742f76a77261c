"""Nonlinear longitudinal airframe model.

Short-period dynamics of a tail-controlled, roll-stabilised airframe with
cubic aerodynamic polynomials, a second-order fin actuator, an ISA
atmosphere, and a fixed-step RK4 integrator.

States: angle-of-attack alpha [rad], pitch rate q [rad/s], pitch angle
theta [rad], Mach number, height [m], plus the actuator pair
(delta, delta_dot). Flight-path angle gamma = theta - alpha.
"""

import math
from dataclasses import dataclass

# ISA constants (troposphere lapse to 11 km, isothermal above)
SEA_LEVEL_TEMPERATURE = 288.15      # K
SEA_LEVEL_DENSITY = 1.225           # kg/m^3
LAPSE_RATE = 0.0065                 # K/m
TROPOPAUSE_HEIGHT = 11000.0         # m
GAS_CONSTANT = 287.05287            # J/(kg K)
HEAT_CAPACITY_RATIO = 1.4
STANDARD_GRAVITY = 9.80665          # m/s^2
MAX_MODEL_HEIGHT = 20000.0          # m

_TROPOPAUSE_TEMPERATURE = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * TROPOPAUSE_HEIGHT
_DENSITY_EXPONENT = STANDARD_GRAVITY / (LAPSE_RATE * GAS_CONSTANT) - 1.0
_TROPOPAUSE_DENSITY = SEA_LEVEL_DENSITY * (
    _TROPOPAUSE_TEMPERATURE / SEA_LEVEL_TEMPERATURE
) ** _DENSITY_EXPONENT


class AtmosphereError(ValueError):
    """Height outside the supported atmosphere model range."""


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state."""


@dataclass
class PhysicalParams:
    """Mass/geometry constants of the airframe."""

    moment_of_inertia: float = 247.439  # kg m^2
    reference_area: float = 0.0409      # m^2
    reference_distance: float = 0.2286  # m
    mass: float = 204.02                # kg
    gravity: float = 9.8                # m/s^2

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (value > 0.0):
                raise ValueError(f"PhysicalParams.{name} must be positive, got {value}")


@dataclass
class AeroCoefficientsTable:
    """Polynomial coefficients of the C_A, C_N, C_M fits."""

    a_a: float = 0.3
    a_n: float = 19.373
    b_n: float = -31.023
    c_n: float = -9.717
    d_n: float = -1.948
    a_m: float = 40.44
    b_m: float = -64.015
    c_m: float = 2.922
    d_m: float = -11.803

    def __post_init__(self):
        if self.d_n == 0.0 or self.d_m == 0.0:
            raise ValueError("control effectiveness coefficients d_n, d_m must be nonzero")


@dataclass
class ActuatorParams:
    """Second-order fin actuator."""

    damping_ratio: float = 0.7
    natural_frequency: float = 150.0  # rad/s

    def __post_init__(self):
        if not (0.0 < self.damping_ratio <= 1.0):
            raise ValueError("damping_ratio must be in (0, 1]")
        if not (self.natural_frequency > 0.0):
            raise ValueError("natural_frequency must be positive")


@dataclass
class SystemState:
    """Full simulator state, including the actuator pair."""

    alpha: float
    q: float
    theta: float
    mach: float
    height: float
    delta: float = 0.0
    delta_dot: float = 0.0

    @property
    def gamma(self):
        return self.theta - self.alpha

    def is_finite(self):
        return all(
            math.isfinite(v)
            for v in (self.alpha, self.q, self.theta, self.mach,
                      self.height, self.delta, self.delta_dot)
        )


@dataclass
class DivergenceLimits:
    """Abort bounds for the statically unstable airframe."""

    alpha_max: float = math.radians(60.0)
    q_max: float = 20.0
    height_min: float = 0.0

    def exceeded(self, state):
        return (
            not state.is_finite()
            or abs(state.alpha) > self.alpha_max
            or abs(state.q) > self.q_max
            or state.height <= self.height_min
        )


def _temperature(height):
    if height <= TROPOPAUSE_HEIGHT:
        return SEA_LEVEL_TEMPERATURE - LAPSE_RATE * height
    return _TROPOPAUSE_TEMPERATURE


def air_density(height):
    """ISA air density [kg/m^3]; valid for 0 <= height <= 20 km."""
    if not (0.0 <= height <= MAX_MODEL_HEIGHT):
        raise AtmosphereError(f"height {height} m outside [0, {MAX_MODEL_HEIGHT}] m")
    if height <= TROPOPAUSE_HEIGHT:
        ratio = _temperature(height) / SEA_LEVEL_TEMPERATURE
        return SEA_LEVEL_DENSITY * ratio ** _DENSITY_EXPONENT
    # isothermal layer: exponential decay
    scale = STANDARD_GRAVITY / (GAS_CONSTANT * _TROPOPAUSE_TEMPERATURE)
    return _TROPOPAUSE_DENSITY * math.exp(-scale * (height - TROPOPAUSE_HEIGHT))


def speed_of_sound(height):
    """ISA speed of sound [m/s]; constant above the tropopause."""
    if not (0.0 <= height <= MAX_MODEL_HEIGHT):
        raise AtmosphereError(f"height {height} m outside [0, {MAX_MODEL_HEIGHT}] m")
    return math.sqrt(HEAT_CAPACITY_RATIO * GAS_CONSTANT * _temperature(height))


def aero_coefficients(alpha, mach, delta, table):
    """Evaluate the (C_A, C_N, C_M) polynomials."""
    c_a = table.a_a
    c_n = (
        table.a_n * alpha ** 3
        + table.b_n * alpha * abs(alpha)
        + table.c_n * (2.0 - mach / 3.0) * alpha
        + table.d_n * delta
    )
    c_m = (
        table.a_m * alpha ** 3
        + table.b_m * alpha * abs(alpha)
        + table.c_m * (-7.0 + 8.0 * mach / 3.0) * alpha
        + table.d_m * delta
    )
    return c_a, c_n, c_m


def state_derivative(state, params, table):
    """Time derivatives of (alpha, q, theta, mach, height)."""
    v_s = speed_of_sound(state.height)
    v = state.mach * v_s
    rho = air_density(state.height)
    q_bar = 0.5 * rho * v * v
    c_a, c_n, c_m = aero_coefficients(state.alpha, state.mach, state.delta, table)

    sin_a = math.sin(state.alpha)
    cos_a = math.cos(state.alpha)
    gamma = state.theta - state.alpha
    qs = q_bar * params.reference_area

    d_alpha = (
        qs / (params.mass * v) * (c_n * cos_a - c_a * sin_a)
        + params.gravity / v * math.cos(gamma)
        + state.q
    )
    d_q = qs * params.reference_distance / params.moment_of_inertia * c_m
    d_theta = state.q
    d_mach = (
        qs / (params.mass * v_s) * (c_n * sin_a + c_a * cos_a)
        - params.gravity / v_s * math.sin(gamma)
    )
    d_height = v * math.sin(gamma)
    return d_alpha, d_q, d_theta, d_mach, d_height


def lateral_acceleration(state, params, table):
    """a_z = V * gamma_dot = V * (q - alpha_dot) [m/s^2]."""
    d_alpha = state_derivative(state, params, table)[0]
    v = state.mach * speed_of_sound(state.height)
    return v * (state.q - d_alpha)


def actuator_derivative(delta, delta_dot, delta_c, act):
    """Second-order actuator: returns (delta_dot, delta_ddot)."""
    w = act.natural_frequency
    delta_ddot = -w * w * delta - 2.0 * act.damping_ratio * w * delta_dot + w * w * delta_c
    return delta_dot, delta_ddot


def _full_derivative(y, delta_c, params, table, act):
    state = SystemState(*y)
    d_alpha, d_q, d_theta, d_mach, d_height = state_derivative(state, params, table)
    d_delta, d_delta_dot = actuator_derivative(y[5], y[6], delta_c, act)
    return (d_alpha, d_q, d_theta, d_mach, d_height, d_delta, d_delta_dot)


def integrate_step(state, delta_c, dt, params, table, act, substeps=8, fin_limit=None):
    """Advance the coupled 7-state system by dt.

    Classical RK4 with zero-order hold on delta_c, split into equal
    substeps (the actuator poles at -105 +/- 107j rad/s make a single
    10 ms step accuracy-marginal; eight substeps hold the fin response
    within 1e-6 of the closed-form solution). Raises DivergenceError on
    a non-finite result.
    """
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    if fin_limit is not None:
        delta_c = max(-fin_limit, min(fin_limit, delta_c))
    h = dt / substeps
    y = (state.alpha, state.q, state.theta, state.mach, state.height,
         state.delta, state.delta_dot)
    for _ in range(substeps):
        k1 = _full_derivative(y, delta_c, params, table, act)
        y2 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k1))
        k2 = _full_derivative(y2, delta_c, params, table, act)
        y3 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k2))
        k3 = _full_derivative(y3, delta_c, params, table, act)
        y4 = tuple(yi + h * ki for yi, ki in zip(y, k3))
        k4 = _full_derivative(y4, delta_c, params, table, act)
        y = tuple(
            yi + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        )
    result = SystemState(*y)
    if not result.is_finite():
        raise DivergenceError("non-finite state after integration step")
    return result
