"""Numerical-sparsity uncertainty principles on Z_n and their consequences
for demixing, partial-Fourier sensing and sparse-signal detection."""
from .errors import ArgumentError, BudgetError, ConvergenceError, DomainError, HypothesisError
from .gaussian import discrete_gaussian
from .kernels import BACKEND
from .operators import UnitaryOperator, dft_operator, haar_unitary
from .signal import norms, numerical_sparsity, sparsity_report, support, zero_norm

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "BudgetError", "ConvergenceError", "DomainError", "HypothesisError",
    "BACKEND", "UnitaryOperator", "dft_operator", "haar_unitary", "discrete_gaussian",
    "norms", "numerical_sparsity", "sparsity_report", "support", "zero_norm",
]
