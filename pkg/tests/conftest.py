import numpy as np
import pytest

from ermakov.integrate import Control, integrate
from ermakov.model import CartesianState, SystemSpec

LEWIS_N = "u^(-2)/2"
GENERIC_N = "u^(-2)/2 + 1/(1+u^2)"

# (source, low, high): ten expressions with a sampling interval free of poles.
CORPUS = [
    ("u^(-2)/2", 0.3, 3.0),
    ("1/(1+u^2)", -3.0, 3.0),
    ("u^(-2)/2 + 1/(1+u^2)", 0.3, 3.0),
    ("1/(2*u-1)^2", 0.7, 3.0),
    ("u^2 - 3*u + 2", -2.0, 2.0),
    ("sin(u)*exp(-u^2/4)", -3.0, 3.0),
    ("log(1+u^2) + sqrt(u)", 0.1, 3.0),
    ("tanh(u)^3 - atan(u)", -2.0, 2.0),
    ("u^1.5*cos(2*u)", 0.1, 3.0),
    ("atanh(u/2) + tan(u/3)", -1.5, 1.5),
]


def pinney_y(T):
    return np.sqrt(1.0 + np.asarray(T) ** 2)


@pytest.fixture(scope="session")
def lewis_spec():
    return SystemSpec.conservative(LEWIS_N)


@pytest.fixture(scope="session")
def generic_spec():
    return SystemSpec.conservative(GENERIC_N)


@pytest.fixture(scope="session")
def lewis_traj(lewis_spec):
    s0 = CartesianState(0.0, 1.0, 1.0, 0.0, 0.0)
    return integrate(lewis_spec, s0, 5.0, Control.adaptive(1e-10, 0.01))


@pytest.fixture(scope="session")
def lewis_traj10(lewis_spec):
    s0 = CartesianState(0.0, 1.0, 1.0, 0.0, 0.0)
    return integrate(lewis_spec, s0, 10.0, Control.adaptive(1e-10, 0.05))


@pytest.fixture(scope="session")
def generic_traj(generic_spec):
    s0 = CartesianState(0.0, 1.0, 2.0, 0.3, -0.1)
    return integrate(generic_spec, s0, 10.0, Control.adaptive(1e-10, 0.05))

