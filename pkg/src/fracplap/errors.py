"""Exception types shared across the package."""


class FracplapError(Exception):
    """Base class for all structured errors raised by this package."""


class GridMismatchError(FracplapError):
    """Two grid-sampled objects do not live on the same domain."""


class KernelAdmissibilityError(FracplapError):
    """A discretized competition kernel fails an admissibility requirement."""


class EvaluationRangeError(FracplapError):
    """A special-function argument lies outside the representable range."""


class SolverConvergenceError(FracplapError):
    """An inner linear solve failed to reach its residual target."""


class HypothesisError(FracplapError):
    """Input data violate a hypothesis the requested quantity needs."""


class ConfigError(FracplapError):
    """A run manifest is malformed.  ``path`` is a JSON pointer."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
