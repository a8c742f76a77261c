"""Oracles for the control law, trim, linearization, and the LQR schedule."""

import math
import os

import numpy as np
import pytest

from flightrl import autopilot
from flightrl.airframe import (
    AeroCoefficientsTable,
    PhysicalParams,
    SystemState,
    aero_coefficients,
    speed_of_sound,
    state_derivative,
)
from flightrl.autopilot import (
    ControllerState,
    DesignError,
    GainSet,
    GainSchedule,
    TrimError,
    closed_loop_matrix,
    design_baseline_gains,
    design_node_gains,
    linearize,
    load_schedule,
    moment_trim_delta,
    save_schedule,
    schedule_gains,
    three_loop_command,
    trim,
)

PARAMS = PhysicalParams()
TABLE = AeroCoefficientsTable()


class TestThreeLoopCommand:
    def test_hand_computed_step(self):
        gains = GainSet(k_dc=1.1, k_a=0.02, k_i=50.0, k_g=1.5)
        ctrl = ControllerState(integrator=0.2)
        a_zc, a_z, q, dt = 100.0, 40.0, 0.3, 0.01
        error = 1.1 * 100.0 - 40.0
        integ = 0.2 + 0.01 * 50.0 * (0.02 * error - 0.3)
        expect = 1.5 * (integ - 0.3)
        delta_c, new_ctrl = three_loop_command(gains, a_zc, a_z, q, ctrl, dt)
        assert delta_c == pytest.approx(expect, rel=1e-15)
        assert new_ctrl.integrator == pytest.approx(integ, rel=1e-15)

    def test_zero_gains_zero_command(self):
        gains = GainSet(0.0, 0.0, 0.0, 0.0)
        delta_c, ctrl = three_loop_command(gains, 100.0, 0.0, 0.0,
                                           ControllerState(), 0.01)
        assert delta_c == 0.0
        assert ctrl.integrator == 0.0

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            three_loop_command(GainSet(1, 1, 1, 1), 0, 0, 0,
                               ControllerState(), 0.0)


class TestTrim:
    def test_moment_trim_zeroes_pitching_moment(self):
        for alpha in (-0.3, -0.05, 0.0, 0.05, 0.3):
            for mach in (2.0, 3.0, 4.0):
                delta = moment_trim_delta(alpha, mach, TABLE)
                _, _, c_m = aero_coefficients(alpha, mach, delta, TABLE)
                assert abs(c_m) < 1e-12

    def test_moment_trim_hand_example(self):
        expect = -(40.44 * 0.1 ** 3 - 64.015 * 0.01
                   + 2.922 * 1.0 * 0.1) / (-11.803)
        assert moment_trim_delta(0.1, 3.0, TABLE) == pytest.approx(expect,
                                                                   rel=1e-12)
        assert moment_trim_delta(0.0, 3.0, TABLE) == 0.0

    @pytest.mark.parametrize("mach,height", [(2.0, 6000.0), (3.0, 10000.0),
                                             (4.0, 14000.0)])
    def test_trim_zeroes_both_rates(self, mach, height):
        alpha, delta = trim(mach, height, PARAMS, TABLE)
        state = SystemState(alpha, 0.0, alpha, mach, height, delta, 0.0)
        d_alpha, d_q = state_derivative(state, PARAMS, TABLE)[:2]
        assert abs(d_alpha) < 1e-9
        assert abs(d_q) < 1e-9


class TestLinearize:
    def test_predicts_nonlinear_rate_perturbations(self):
        alpha0, mach, height = 0.03, 3.0, 9000.0
        delta0 = moment_trim_delta(alpha0, mach, TABLE)
        state = SystemState(alpha0, 0.0, alpha0, mach, height, delta0, 0.0)
        model = linearize(state, delta0, PARAMS, TABLE)

        def rates(da, dq, dd):
            s = SystemState(alpha0 + da, dq, alpha0, mach, height,
                            delta0 + dd, 0.0)
            d_alpha, d_q = state_derivative(s, PARAMS, TABLE)[:2]
            return np.array([d_alpha, d_q])

        base = rates(0.0, 0.0, 0.0)
        eps = 1e-5
        for dx in (np.array([eps, 0.0, 0.0]), np.array([0.0, eps, 0.0]),
                   np.array([0.0, 0.0, eps])):
            predicted = model.a @ dx[:2] + model.b * dx[2]
            actual = rates(*dx) - base
            assert np.allclose(predicted, actual, atol=1e-7)

    def test_statically_unstable_at_zero_alpha(self):
        # the bare airframe has a real unstable short-period pole
        state = SystemState(0.0, 0.0, 0.0, 3.0, 9000.0, 0.0, 0.0)
        model = linearize(state, 0.0, PARAMS, TABLE)
        assert np.max(np.linalg.eigvals(model.a).real) > 0.0


class TestNodeDesign:
    def test_poles_match_closed_loop_matrix_and_are_stable(self):
        gains, poles = design_node_gains(0.05, 3.0, 9000.0, PARAMS, TABLE,
                                         q_weight=0.02)
        delta0 = moment_trim_delta(0.05, 3.0, TABLE)
        state = SystemState(0.05, 0.0, 0.05, 3.0, 9000.0, delta0, 0.0)
        model = linearize(state, delta0, PARAMS, TABLE)
        expect = np.linalg.eigvals(closed_loop_matrix(model, gains))
        assert np.allclose(sorted(poles.real), sorted(expect.real), atol=1e-9)
        assert np.max(poles.real) < 0.0

    def test_unit_dc_gain_relation(self):
        gains, _ = design_node_gains(0.0, 2.5, 8000.0, PARAMS, TABLE,
                                     q_weight=0.02)
        v = 2.5 * speed_of_sound(8000.0)
        assert gains.k_dc == pytest.approx(1.0 + 1.0 / (gains.k_a * v),
                                           rel=1e-12)

    def test_gain_set_array_roundtrip(self):
        gains = GainSet(1.0, 0.02, 50.0, -1.5)
        assert GainSet.from_array(gains.as_array()) == gains


@pytest.fixture(scope="module")
def schedule():
    return design_baseline_gains(
        np.linspace(-0.1, 0.1, 3), np.array([2.0, 3.0, 4.0]),
        np.array([6000.0, 10000.0, 14000.0]), PARAMS, TABLE,
        q_weight=0.02)


class TestSchedule:
    def test_node_lookup_exact(self, schedule):
        got = schedule_gains(schedule, schedule.alphas[1], schedule.machs[2],
                             schedule.heights[0])
        assert np.array_equal(got.as_array(), schedule.gains[1, 2, 0])

    def test_interior_point_matches_manual_trilinear(self, schedule):
        alpha, mach, height = 0.02, 2.4, 11000.0
        wa = (alpha - schedule.alphas[1]) / (schedule.alphas[2] - schedule.alphas[1])
        wm = (mach - 2.0) / 1.0
        wh = (height - 10000.0) / 4000.0
        g = schedule.gains
        manual = np.zeros(4)
        for ia, fa in ((1, 1 - wa), (2, wa)):
            for im, fm in ((0, 1 - wm), (1, wm)):
                for ih, fh in ((1, 1 - wh), (2, wh)):
                    manual += fa * fm * fh * g[ia, im, ih]
        got = schedule_gains(schedule, alpha, mach, height)
        assert np.allclose(got.as_array(), manual, rtol=1e-12)

    def test_clamped_outside_envelope(self, schedule):
        low = schedule_gains(schedule, -1.0, 1.0, 0.0)
        assert np.array_equal(low.as_array(), schedule.gains[0, 0, 0])
        high = schedule_gains(schedule, 1.0, 9.0, 99999.0)
        assert np.array_equal(high.as_array(), schedule.gains[-1, -1, -1])

    def test_save_load_roundtrip_exact(self, schedule, tmp_path):
        path = os.path.join(tmp_path, "schedule.txt")
        save_schedule(path, schedule)
        loaded = load_schedule(path)
        assert np.array_equal(loaded.gains, schedule.gains)
        assert np.array_equal(loaded.alphas, schedule.alphas)

    def test_load_rejects_bad_magic(self, tmp_path):
        path = os.path.join(tmp_path, "bad.txt")
        with open(path, "w") as f:
            f.write("wrongmagic 1 1 1\n0\n0\n0\n1 2 3 4\n")
        with pytest.raises(ValueError):
            load_schedule(path)

    def test_load_rejects_row_count_mismatch(self, tmp_path):
        path = os.path.join(tmp_path, "bad.txt")
        with open(path, "w") as f:
            f.write("gainschedv1 1 1 2\n0\n2\n6000 7000\n1 2 3 4\n")
        with pytest.raises(ValueError):
            load_schedule(path)
