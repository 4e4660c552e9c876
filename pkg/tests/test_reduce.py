import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ermakov.errors import RhoZeroCrossing
from ermakov.expr import parse_expression
from ermakov.integrate import Control, integrate
from ermakov.model import CartesianState, SystemSpec
from ermakov.reduce import inverse_reduce, reduce_and_compare, reduce_state, reduce_trajectory, solve_rho

ONE = parse_expression("1", "t")
CTRL = Control.adaptive(1e-10, 0.05)
S0 = CartesianState(0.0, 1.0, 2.0, 0.3, -0.1)


class TestSolveRho:
    def test_cos(self):
        rho = solve_rho(ONE, 1.0, 0.0, (0.0, 1.0), CTRL)
        assert np.max(np.abs(rho.rho - np.cos(rho.t))) < 1e-9
        assert np.max(np.abs(rho.T - np.tan(rho.t))) < 1e-8
        assert rho.T[-1] == pytest.approx(math.tan(1.0), abs=1e-8)

    def test_identity(self):
        rho = solve_rho(None, 1.0, 0.0, (0.0, 2.0), CTRL)
        assert np.all(rho.rho == 1.0) and np.all(rho.rhodot == 0.0)
        assert np.max(np.abs(rho.T - rho.t)) < 1e-14

    def test_zero_crossing_bracket(self):
        with pytest.raises(RhoZeroCrossing) as info:
            solve_rho(ONE, 1.0, 0.0, (0.0, 3.0), CTRL)
        a, b = info.value.bracket
        assert a < math.pi / 2 < b
        assert b - a < 0.1

    def test_T_increasing(self):
        rho = solve_rho(parse_expression("1 + 0.1*cos(t)", "t"), 0.7, 0.2, (0.0, 1.0), CTRL)
        assert np.all(np.diff(rho.T) > 0)

    def test_zero_rho0(self):
        with pytest.raises(ValueError):
            solve_rho(ONE, 0.0, 1.0, (0.0, 1.0))


class TestStateMaps:
    def test_identity(self):
        s = CartesianState(0.3, 1.3, -0.2, 0.5, 0.1)
        r = reduce_state(s, 1.0, 0.0, 0.3)
        assert r == s

    @pytest.mark.parametrize("t", np.linspace(0, 1.4, 8))
    def test_lewis_solution_maps_to_pinney(self, t):
        s = CartesianState(t, math.cos(t), 1.0, -math.sin(t), 0.0)
        T = math.tan(t)
        r = reduce_state(s, math.cos(t), -math.sin(t), T)
        Y = math.sqrt(1 + T * T)
        assert (r.x, r.y, r.vx, r.vy) == pytest.approx((1.0, Y, 0.0, T / Y), abs=1e-12)
        back = inverse_reduce(r, math.cos(t), -math.sin(t), t)
        assert back.as_array() == pytest.approx(s.as_array(), abs=1e-12)

    def test_fixed_round_trip(self):
        s = CartesianState(0.2, 1.1, -0.6, 0.4, 0.9)
        back = inverse_reduce(reduce_state(s, 0.8, -0.3, 0.5), 0.8, -0.3, 0.2)
        assert back.as_array() == pytest.approx(s.as_array(), abs=1e-12)

    def test_rho_zero(self):
        with pytest.raises(ValueError):
            reduce_state(S0, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            inverse_reduce(S0, 0.0, 1.0, 0.0)


@settings(max_examples=200)
@given(*(st.floats(-5, 5) for _ in range(4)), st.floats(0.05, 5), st.sampled_from([-1.0, 1.0]), st.floats(-5, 5))
def test_round_trip_property(x, y, vx, vy, rho_mag, sign, rhodot):
    rho = sign * rho_mag
    s = CartesianState(0.0, x, y, vx, vy)
    back = inverse_reduce(reduce_state(s, rho, rhodot, 1.0), rho, rhodot, 0.0)
    assert back.as_array() == pytest.approx(s.as_array(), rel=1e-12, abs=1e-12)


class TestTrajectory:
    def test_omega_zero_is_identity(self, generic_spec):
        traj = integrate(generic_spec, S0, 2.0, CTRL)
        rho = solve_rho(None, 1.0, 0.0, (0.0, 2.0), CTRL, traj.times[1:])
        red = reduce_trajectory(traj, rho)
        assert np.max(np.abs(red.array() - traj.array())) < 1e-13

    def test_misaligned_grid(self, generic_spec):
        traj = integrate(generic_spec, S0, 2.0, CTRL)
        rho = solve_rho(None, 1.0, 0.0, (0.0, 2.0), Control.adaptive(1e-10, 0.1))
        with pytest.raises(ValueError, match="aligned"):
            reduce_trajectory(traj, rho)

    def test_lewis_omega_one(self):
        spec = SystemSpec.normalized("0", "1", omega="1")
        res = reduce_and_compare(spec, CartesianState(0.0, 1.0, 1.0, 0.0, 0.0), 1.0, 1.0, 0.0, CTRL)
        red = res.reduced.array()
        assert np.max(np.abs(red[:, 1] - 1.0)) < 1e-8
        assert np.max(np.abs(red[:, 2] - np.sqrt(1 + red[:, 0] ** 2))) < 1e-8
        assert res.two_path_max < 1e-7

    @pytest.mark.parametrize("omega,rho0,rhodot0", [("1", 1.0, 0.0), ("2", 1.0, 0.0), ("1 + 0.1*cos(t)", 1.0, 0.0),
                                                    ("1 + 0.1*cos(t)", 0.8, 0.3)])
    def test_two_paths_agree(self, generic_spec, omega, rho0, rhodot0):
        spec = generic_spec.with_omega(omega)
        t_end = 0.7 if omega == "2" else 1.0
        res = reduce_and_compare(spec, S0, t_end, rho0, rhodot0, CTRL)
        assert res.two_path_max < 10 * 1e-10
        assert res.i0_frame_max < 1e-9
        assert np.all(np.diff(res.rho.T) > 0)

    def test_crossing_reported_before_integration(self, generic_spec):
        with pytest.raises(RhoZeroCrossing) as info:
            reduce_and_compare(generic_spec.with_omega("1"), S0, 3.0, 1.0, 0.0, CTRL)
        a, b = info.value.bracket
        assert a < math.pi / 2 < b
