"""Exception types raised by lyapmix."""


class DimensionError(ValueError):
    """Operand shapes do not match."""


class ZeroPivotError(ArithmeticError):
    """ILU(0) hit an exactly zero pivot."""

    def __init__(self, row):
        super().__init__(f"zero pivot in row {row}")
        self.row = row


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, msg, residual=None, column=None, iteration=None):
        super().__init__(msg)
        self.residual = residual
        self.column = column
        self.iteration = iteration


class SingularEquationError(ArithmeticError):
    """The Lyapunov equation is not uniquely solvable."""


class OracleSizeError(ValueError):
    """The problem is too large for the dense reference solver."""


class UnusableSpectrumError(ValueError):
    """No real negative Ritz values were found to build shifts from."""


class SchemaError(ValueError):
    """A CSV file does not have the expected columns."""
