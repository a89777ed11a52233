"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: ValidationError -> 2,
NumericsError (and subclasses) -> 3.
"""


class ValidationError(ValueError):
    """Bad user input: domain spec, config value, or incompatible arguments."""


class MeshError(RuntimeError):
    """Triangulation failed or produced an invalid mesh."""


class NumericsError(RuntimeError):
    """Internal numerical failure (solver breakdown, lost invariant)."""


class ConvergenceError(NumericsError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, msg: str, residual: float | None = None):
        super().__init__(msg)
        self.residual = residual
