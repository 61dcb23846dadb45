"""Exception types shared across the package."""


class RoughAssimError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RoughAssimError, ValueError):
    """A numeric argument is outside its admissible range."""


class GridMismatchError(RoughAssimError, ValueError):
    """Two paths do not live on the same time grid."""


class InvalidSpecError(RoughAssimError, ValueError):
    """A model or cost specification violates its invariants."""


class UnsupportedCostError(RoughAssimError, ValueError):
    """The cost specification lacks data required by the operation."""


class BlowUpError(RoughAssimError, RuntimeError):
    """The state became non-finite during integration.

    Carries the index of the first grid node with a non-finite value.
    """

    def __init__(self, node_index, message=None):
        self.node_index = node_index
        super().__init__(message or f"non-finite state at grid node {node_index}")


class NoConvergenceError(RoughAssimError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the best residual norm seen before giving up.
    """

    def __init__(self, best_residual, message=None):
        self.best_residual = best_residual
        super().__init__(
            message or f"solver did not converge (best residual {best_residual:.3e})"
        )
