"""State-specific excited-state orbital optimization for small Hubbard chains.

The package builds the four-electron Hubbard trimer in an occupation-number
basis, solves it exactly, and compares state-averaged CASSCF against a
ground-state CASSCF followed by an orthogonally constrained orbital
optimization (OCOO) of the first excited state.
"""

from .errors import ConvergenceError, ParameterError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "ParameterError", "__version__"]
