"""Exception hierarchy shared by the solver, dataset and network layers."""


class QheError(Exception):
    """Base class. ``name`` is the short kebab-case tag reported by the CLI."""

    name = "error"


class InvalidParamsError(QheError, ValueError):
    name = "invalid-params"


class DomainError(QheError, ValueError):
    name = "domain-error"


# spectral layer
class DegenerateDominantError(QheError, ArithmeticError):
    name = "degenerate-dominant"


class ComplexDominantError(QheError, ArithmeticError):
    name = "complex-dominant"


class GaugeDiscontinuityError(QheError, ArithmeticError):
    name = "gauge-discontinuity"


# counting statistics
class NoConvergenceError(QheError, ArithmeticError):
    name = "no-convergence"


class StencilInconsistencyError(QheError, ArithmeticError):
    name = "stencil-inconsistency"


class ZeroFluxError(QheError, ArithmeticError):
    """Mean photon flux vanishes, so the Fano factor is undefined.

    The partially filled cumulant set is kept on ``cumulants``.
    """

    name = "zero-flux"

    def __init__(self, message, cumulants=None):
        super().__init__(message)
        self.cumulants = cumulants


class NotStaticError(QheError, ValueError):
    name = "not-static"


# datasets
class EmptyDatasetError(QheError, ValueError):
    name = "empty-dataset"


class EmptySplitError(QheError, ValueError):
    name = "empty-split"


# network
class ShapeMismatchError(QheError, ValueError):
    name = "shape-mismatch"


class SingularSystemError(QheError, ArithmeticError):
    name = "singular-system"


class DampingAbortError(QheError, RuntimeError):
    name = "damping-abort"


class ZeroVarianceError(QheError, ValueError):
    name = "zero-variance"
