"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class SymmetryError(ValueError):
    """A Fourier symbol or coefficient array lacks the conjugate symmetry
    required for a real physical field."""


class DivergenceError(RuntimeError):
    """An iteration or time integration produced NaN or overflow."""

    def __init__(self, message, *, iteration=None, time=None):
        super().__init__(message)
        self.iteration = iteration
        self.time = time
