"""Simulation and first-integral checks for the 2d generalized Ermakov system."""

from .expr import Expression, differentiate, evaluate, parse_expression, quad_integral, to_string
from .integrate import Control, Trajectory, integrate, step_rk4
from .model import CartesianState, PolarState, SystemSpec, cart_to_polar, polar_to_cart

__all__ = [
    "CartesianState",
    "Control",
    "Expression",
    "PolarState",
    "SystemSpec",
    "Trajectory",
    "cart_to_polar",
    "differentiate",
    "evaluate",
    "integrate",
    "parse_expression",
    "polar_to_cart",
    "quad_integral",
    "step_rk4",
    "to_string",
]

__version__ = "0.1.0"
