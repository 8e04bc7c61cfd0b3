"""Pseudospectral laboratory for randomized energy-critical waves."""

from .grid import (
    FieldPair,
    Grid,
    SpectralField,
    fft_forward,
    fft_inverse,
    lebesgue_norm,
    pair_sobolev_norm,
    rescale,
    sobolev_norm,
)
from .propagator import linear_energy, linear_evolve
from .randomization import (
    CoefficientDistribution,
    CutoffFamily,
    make_draw,
    randomize_pair,
)
from .solver import SolverConfig, energy, solve_v_equation, strang_evolve

__all__ = [
    "FieldPair",
    "Grid",
    "SpectralField",
    "fft_forward",
    "fft_inverse",
    "lebesgue_norm",
    "pair_sobolev_norm",
    "rescale",
    "sobolev_norm",
    "linear_energy",
    "linear_evolve",
    "CoefficientDistribution",
    "CutoffFamily",
    "make_draw",
    "randomize_pair",
    "SolverConfig",
    "energy",
    "solve_v_equation",
    "strang_evolve",
]

__version__ = "0.1.0"
