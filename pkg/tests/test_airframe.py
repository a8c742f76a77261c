"""Oracles for the atmosphere, aerodynamics, actuator, and integrator."""

import math

import numpy as np
import pytest

from flightrl import airframe
from flightrl.airframe import (
    ActuatorParams,
    AeroCoefficientsTable,
    AtmosphereError,
    DivergenceError,
    DivergenceLimits,
    PhysicalParams,
    SystemState,
    aero_coefficients,
    air_density,
    integrate_step,
    lateral_acceleration,
    speed_of_sound,
    state_derivative,
)

PARAMS = PhysicalParams()
TABLE = AeroCoefficientsTable()
ACT = ActuatorParams()


def density_via_pressure(height):
    """Independent ISA oracle: integrate the hydrostatic equation for
    pressure, then apply the ideal-gas law (the implementation uses the
    direct temperature-ratio power law instead)."""
    g = airframe.STANDARD_GRAVITY
    r = airframe.GAS_CONSTANT
    lapse = airframe.LAPSE_RATE
    t0 = airframe.SEA_LEVEL_TEMPERATURE
    p0 = airframe.SEA_LEVEL_DENSITY * r * t0
    if height <= airframe.TROPOPAUSE_HEIGHT:
        t = t0 - lapse * height
        p = p0 * (t / t0) ** (g / (lapse * r))
        return p / (r * t)
    t11 = t0 - lapse * airframe.TROPOPAUSE_HEIGHT
    p11 = p0 * (t11 / t0) ** (g / (lapse * r))
    p = p11 * math.exp(-g * (height - airframe.TROPOPAUSE_HEIGHT) / (r * t11))
    return p / (r * t11)


class TestAtmosphere:
    def test_density_matches_hydrostatic_oracle(self):
        for h in np.linspace(0.0, 20000.0, 201):
            assert air_density(h) == pytest.approx(density_via_pressure(h),
                                                   rel=1e-12)

    def test_sea_level_values(self):
        assert air_density(0.0) == pytest.approx(1.225, rel=1e-12)
        assert speed_of_sound(0.0) == pytest.approx(
            math.sqrt(1.4 * airframe.GAS_CONSTANT * 288.15), rel=1e-12)

    def test_density_continuous_and_monotone(self):
        hs = np.linspace(0.0, 20000.0, 2001)
        rho = [air_density(h) for h in hs]
        assert all(a > b for a, b in zip(rho, rho[1:]))
        below = air_density(11000.0 - 1e-9)
        above = air_density(11000.0 + 1e-9)
        assert below == pytest.approx(above, rel=1e-9)

    def test_speed_of_sound_constant_above_tropopause(self):
        assert speed_of_sound(11000.0) == speed_of_sound(20000.0)

    @pytest.mark.parametrize("h", [-1.0, 20001.0])
    def test_out_of_range_height_rejected(self, h):
        with pytest.raises(AtmosphereError):
            air_density(h)
        with pytest.raises(AtmosphereError):
            speed_of_sound(h)


class TestAeroCoefficients:
    def test_hand_computed_point(self):
        alpha, mach, delta = 0.1, 3.0, -0.02
        c_a, c_n, c_m = aero_coefficients(alpha, mach, delta, TABLE)
        assert c_a == 0.3
        expect_n = (19.373 * alpha ** 3 - 31.023 * alpha * abs(alpha)
                    - 9.717 * (2.0 - mach / 3.0) * alpha - 1.948 * delta)
        expect_m = (40.44 * alpha ** 3 - 64.015 * alpha * abs(alpha)
                    + 2.922 * (-7.0 + 8.0 * mach / 3.0) * alpha
                    - 11.803 * delta)
        assert c_n == pytest.approx(expect_n, abs=1e-15)
        assert c_m == pytest.approx(expect_m, abs=1e-15)

    def test_odd_symmetry_in_alpha_at_zero_fin(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            alpha = rng.uniform(-0.35, 0.35)
            mach = rng.uniform(2.0, 4.0)
            _, c_n_pos, c_m_pos = aero_coefficients(alpha, mach, 0.0, TABLE)
            _, c_n_neg, c_m_neg = aero_coefficients(-alpha, mach, 0.0, TABLE)
            assert c_n_pos == pytest.approx(-c_n_neg, abs=1e-15)
            assert c_m_pos == pytest.approx(-c_m_neg, abs=1e-15)

    def test_linear_in_fin_deflection(self):
        a, m = 0.05, 2.5
        _, n0, m0 = aero_coefficients(a, m, 0.0, TABLE)
        _, n1, m1 = aero_coefficients(a, m, 0.1, TABLE)
        _, n2, m2 = aero_coefficients(a, m, 0.2, TABLE)
        assert n2 - n1 == pytest.approx(n1 - n0, abs=1e-12)
        assert m2 - m1 == pytest.approx(m1 - m0, abs=1e-12)

    def test_zero_control_effectiveness_rejected(self):
        with pytest.raises(ValueError):
            AeroCoefficientsTable(d_n=0.0)


class TestStateDerivative:
    def test_lateral_acceleration_identity(self):
        state = SystemState(0.05, 0.1, 0.02, 3.0, 9000.0, -0.01, 0.0)
        d_alpha = state_derivative(state, PARAMS, TABLE)[0]
        v = state.mach * speed_of_sound(state.height)
        assert lateral_acceleration(state, PARAMS, TABLE) == pytest.approx(
            v * (state.q - d_alpha), rel=1e-12)

    def test_theta_rate_is_pitch_rate(self):
        state = SystemState(0.05, 0.7, 0.02, 3.0, 9000.0, 0.0, 0.0)
        assert state_derivative(state, PARAMS, TABLE)[2] == 0.7

    def test_level_flight_gravity_term(self):
        # at alpha=0, delta=0, q=0, gamma=0 the only alpha_dot term left
        # is gravity over speed
        state = SystemState(0.0, 0.0, 0.0, 3.0, 9000.0, 0.0, 0.0)
        v = 3.0 * speed_of_sound(9000.0)
        assert state_derivative(state, PARAMS, TABLE)[0] == pytest.approx(
            PARAMS.gravity / v, rel=1e-12)

    def test_height_rate_from_flight_path(self):
        state = SystemState(0.0, 0.0, 0.1, 2.0, 8000.0, 0.0, 0.0)
        v = 2.0 * speed_of_sound(8000.0)
        assert state_derivative(state, PARAMS, TABLE)[4] == pytest.approx(
            v * math.sin(0.1), rel=1e-12)


def actuator_closed_form(t, delta_c, act):
    """Analytic step response of the underdamped second-order actuator."""
    xi, w = act.damping_ratio, act.natural_frequency
    wd = w * math.sqrt(1.0 - xi * xi)
    return delta_c * (1.0 - math.exp(-xi * w * t)
                      * (math.cos(wd * t) + xi * w / wd * math.sin(wd * t)))


class TestActuator:
    def test_derivative_pair(self):
        d, dd = airframe.actuator_derivative(0.1, -0.2, 0.3, ACT)
        assert d == -0.2
        assert dd == pytest.approx(-150.0 ** 2 * 0.1 - 2 * 0.7 * 150.0 * (-0.2)
                                   + 150.0 ** 2 * 0.3, rel=1e-12)

    def test_step_response_matches_closed_form(self):
        state = SystemState(0.0, 0.0, 0.0, 3.0, 9000.0, 0.0, 0.0)
        delta_c = 0.1
        dt = 0.01
        worst = 0.0
        for k in range(100):
            state = integrate_step(state, delta_c, dt, PARAMS, TABLE, ACT)
            exact = actuator_closed_form((k + 1) * dt, delta_c, ACT)
            worst = max(worst, abs(state.delta - exact))
        assert worst < 1e-6

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            ActuatorParams(damping_ratio=0.0)
        with pytest.raises(ValueError):
            ActuatorParams(natural_frequency=-1.0)


class TestIntegrateStep:
    def test_substep_refinement_converges(self):
        state = SystemState(0.05, 0.2, 0.02, 3.0, 9000.0, 0.01, 0.0)
        coarse = integrate_step(state, 0.05, 0.01, PARAMS, TABLE, ACT, substeps=4)
        fine = integrate_step(state, 0.05, 0.01, PARAMS, TABLE, ACT, substeps=64)
        finest = integrate_step(state, 0.05, 0.01, PARAMS, TABLE, ACT, substeps=256)
        err_coarse = abs(coarse.alpha - finest.alpha)
        err_fine = abs(fine.alpha - finest.alpha)
        assert err_fine < err_coarse
        assert err_coarse < 1e-7

    def test_fin_limit_clamps_command(self):
        state = SystemState(0.0, 0.0, 0.0, 3.0, 9000.0, 0.0, 0.0)
        limit = math.radians(30.0)
        clamped = integrate_step(state, 10.0, 0.01, PARAMS, TABLE, ACT,
                                 fin_limit=limit)
        direct = integrate_step(state, limit, 0.01, PARAMS, TABLE, ACT)
        assert clamped.delta == direct.delta
        assert clamped.q == direct.q

    def test_nonpositive_dt_rejected(self):
        state = SystemState(0.0, 0.0, 0.0, 3.0, 9000.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            integrate_step(state, 0.0, 0.0, PARAMS, TABLE, ACT)

    def test_gamma_property(self):
        state = SystemState(0.05, 0.0, 0.12, 3.0, 9000.0, 0.0, 0.0)
        assert state.gamma == pytest.approx(0.07, abs=1e-15)


class TestDivergenceLimits:
    def test_default_bounds(self):
        lim = DivergenceLimits()
        ok = SystemState(0.1, 1.0, 0.1, 3.0, 9000.0, 0.0, 0.0)
        assert not lim.exceeded(ok)
        assert lim.exceeded(SystemState(math.radians(61), 0, 0, 3, 9000, 0, 0))
        assert lim.exceeded(SystemState(0.1, 21.0, 0, 3, 9000, 0, 0))
        assert lim.exceeded(SystemState(0.1, 0.0, 0, 3, 0.0, 0, 0))

    def test_non_finite_state_exceeds(self):
        lim = DivergenceLimits()
        assert lim.exceeded(SystemState(math.nan, 0, 0, 3, 9000, 0, 0))

    def test_invalid_physical_params_rejected(self):
        with pytest.raises(ValueError):
            PhysicalParams(mass=0.0)
