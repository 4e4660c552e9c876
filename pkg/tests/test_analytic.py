import math

import numpy as np
import pytest

from ermakov.analytic import (
    SolutionConstants,
    fbar,
    radial_solution,
    theta_quadrature,
    theta_time_rhs,
    verify_solution,
)
from ermakov.errors import DomainError, NotConservativeError, TurningPointError
from ermakov.expr import parse_expression
from ermakov.integrate import Control, integrate
from ermakov.invariants import hamiltonian
from ermakov.model import CartesianState, SystemSpec

LEWIS_K = SolutionConstants(0.5, 1.0, 0.0)
LEWIS_N = parse_expression("u^(-2)/2", "u")


def artanh_rhs(k, T, sign=1):
    """The hyperbolic variant the closed form must NOT be replaced by."""
    return sign * math.atanh((2 * k.H * T - k.I2) / math.sqrt(2 * k.I0)) / math.sqrt(k.I0)


class TestFbar:
    def test_lewis(self):
        assert fbar(LEWIS_N, math.pi / 4) == pytest.approx(1.0, rel=1e-15)

    def test_rotational_is_constant(self):
        N = parse_expression("2.5/(1+u^2)", "u")
        for th in np.linspace(-1.5, 1.5, 11):
            assert fbar(N, th) == pytest.approx(2.5, rel=1e-14)

    def test_pole(self):
        with pytest.raises(DomainError):
            fbar(LEWIS_N, math.pi / 2)


class TestRadial:
    def test_examples(self):
        assert radial_solution(LEWIS_K, 0.0) == 2.0
        assert radial_solution(LEWIS_K, 1.0) == 3.0

    def test_vertex(self):
        k = SolutionConstants(0.7, 1.3, 0.4)
        T0 = k.I2 / (2 * k.H)
        assert radial_solution(k, T0) == pytest.approx(k.I0 / k.H)
        assert radial_solution(k, T0 + 0.1) > radial_solution(k, T0)

    def test_needs_positive_H(self):
        with pytest.raises(ValueError):
            radial_solution(SolutionConstants(0.0, 1.0, 0.0), 1.0)


class TestTimeRhs:
    def test_examples(self):
        assert theta_time_rhs(SolutionConstants(0.5, 1.0, 1.0), 1.0) == 0.0
        assert theta_time_rhs(LEWIS_K, math.sqrt(2)) == pytest.approx(math.pi / 4, rel=1e-15)

    def test_artanh_blows_up_where_arctan_is_finite(self):
        with pytest.raises(ValueError):
            artanh_rhs(LEWIS_K, math.sqrt(2))

    def test_needs_positive_I0(self):
        with pytest.raises(ValueError):
            theta_time_rhs(SolutionConstants(0.5, 0.0, 0.0), 1.0)


class TestThetaQuadrature:
    def test_lewis_branch(self):
        val = theta_quadrature(LEWIS_N, math.atan(math.sqrt(2)), math.atan(math.sqrt(3)), 1.0)
        assert val == pytest.approx(math.pi / 4 - math.atan(1 / math.sqrt(2)), abs=1e-12)
        assert val == pytest.approx(0.16991845472706, abs=1e-12)

    def test_turning_point_at_endpoint_is_integrable(self):
        # Fbar = I0 exactly at theta = pi/4 for the Lewis case; the substitution handles it.
        val = theta_quadrature(LEWIS_N, math.pi / 4, math.atan(math.sqrt(2)), 1.0)
        assert val == pytest.approx(math.atan(1 / math.sqrt(2)), abs=1e-10)

    def test_empty(self):
        assert theta_quadrature(LEWIS_N, 0.9, 0.9, 1.0) == 0.0

    def test_interior_turning_point(self):
        with pytest.raises(TurningPointError) as info:
            theta_quadrature(LEWIS_N, 0.5, 1.2, 1.0)
        a, b = info.value.bracket
        assert 0.5 <= a <= b <= 1.2


class TestVerify:
    def test_lewis(self, lewis_traj):
        rep = verify_solution(lewis_traj, 1e-6)
        assert rep.passes
        assert rep.radial_max_residual < 1e-6 and rep.theta_max_residual < 1e-6
        assert rep.constants.H == 0.5 and rep.constants.I0 == 1.0
        r2 = np.array([s.x**2 + s.y**2 for s in lewis_traj])
        assert np.max(np.abs(r2 - (lewis_traj.times**2 + 2))) < 1e-6

    def test_artanh_regression(self, lewis_traj):
        rep = verify_solution(lewis_traj, 1e-6, time_rhs=artanh_rhs)
        assert not rep.theta_pass
        assert rep.theta_max_residual > 0.1

    def test_rotational(self):
        spec = SystemSpec.conservative("3/(1+u^2)")
        traj = integrate(spec, CartesianState(0.0, 1.0, 2.0, 0.3, -0.1), 5.0, Control.adaptive(1e-10, 0.05))
        rep = verify_solution(traj, 1e-6)
        assert rep.passes, (rep.radial_max_residual, rep.theta_max_residual)

    def test_turning_point_splits_stretches(self, generic_traj):
        rep = verify_solution(generic_traj, 1e-6)
        assert rep.passes, (rep.radial_max_residual, rep.theta_max_residual)
        assert len(rep.turning_points) >= 1
        assert len(rep.stretches) == len(rep.turning_points) + 1
        assert {s.sign for s in rep.stretches} == {-1, 1}

    def test_second_derivative_of_r2_is_4H(self, generic_traj):
        t = generic_traj.times
        r2 = np.array([s.x**2 + s.y**2 for s in generic_traj])
        h = t[1] - t[0]
        d2 = (r2[2:] - 2 * r2[1:-1] + r2[:-2]) / h**2
        H = hamiltonian(generic_traj.spec, generic_traj.samples[0])
        assert np.max(np.abs(d2 - 4 * H)) < 1e-4

    def test_rejects_time_dependent(self):
        spec = SystemSpec.normalized("0", "1", omega="1")
        traj = integrate(spec, CartesianState(0.0, 1.0, 1.0, 0.0, 0.0), 1.0, Control.adaptive(1e-9))
        with pytest.raises(NotConservativeError):
            verify_solution(traj)
