"""
Exception types raised by the toolkit.

Library code raises these; the sweep runner, the CLI and the HTTP API catch
them and turn them into `{"success": False, "error": ...}` records.
"""
from typing import Optional, Sequence


class ConstrainedVQAError(Exception):
    """Base class for every error raised by this package"""


class SizeError(ConstrainedVQAError, ValueError):
    """Qubit/variable count out of range or array lengths that do not match"""


class QubitIndexError(ConstrainedVQAError, IndexError):
    """Qubit index out of range, or two-qubit gate on a repeated qubit"""


class ParameterError(ConstrainedVQAError, ValueError):
    """Invalid generator, ansatz or run parameter"""


class InfeasibleInstanceError(ConstrainedVQAError):
    """The problem has no feasible basis state"""


class EmptyFeasibleSupportError(ConstrainedVQAError):
    """The state (or sample) puts no weight on feasible basis states"""


class DegenerateInstanceError(ConstrainedVQAError):
    """f_max == f_min over the feasible set, so the approximation ratio is undefined"""


class EvaluationError(ConstrainedVQAError):
    """The objective returned a non-finite value"""

    def __init__(self, message: str, params: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.params = None if params is None else [float(p) for p in params]
