"""Numerical laboratory for the resolution limit of TV-regularized line spectral estimation."""

from resolimit.trigpoly import TrigPoly, derivative, evaluate, multiply, sup_norm, wrap
from resolimit.converse import ConverseParams, SupportSet, build_support
from resolimit.tvdual import MomentVector, RecoveryResult, SparseMeasure, moments, solve_grid, solve_tv

__all__ = [
    "TrigPoly",
    "evaluate",
    "derivative",
    "multiply",
    "sup_norm",
    "wrap",
    "ConverseParams",
    "SupportSet",
    "build_support",
    "SparseMeasure",
    "MomentVector",
    "RecoveryResult",
    "moments",
    "solve_grid",
    "solve_tv",
]

__version__ = "0.1.0"
