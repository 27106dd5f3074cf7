"""Separation experiments: three-layer ResNet learners vs kernel baselines."""

from .core import RngStream, gaussian_matrix, solve_psd, DecompositionError

__all__ = ["RngStream", "gaussian_matrix", "solve_psd", "DecompositionError"]

__version__ = "0.1.0"
