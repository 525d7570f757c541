"""Exception types raised across the package."""


class BLGLError(Exception):
    """Base class for all package errors."""


class InvalidGrid(BLGLError, ValueError):
    pass


class SingularOperator(BLGLError, ArithmeticError):
    pass


class HorizonExceeded(BLGLError, ValueError):
    pass


class NumericalInstability(BLGLError, ArithmeticError):
    pass


class CFLViolation(BLGLError, ValueError):
    pass


class PicardDivergence(BLGLError, ArithmeticError):
    pass


class NoLayer(BLGLError, ValueError):
    pass


class DegenerateFit(BLGLError, ValueError):
    pass


class QuadratureFailure(BLGLError, ArithmeticError):
    pass


class GridMismatch(BLGLError, ValueError):
    pass


class ParseError(BLGLError, ValueError):
    def __init__(self, message, line, col=1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class ValidationError(BLGLError, ValueError):
    def __init__(self, field, constraint):
        super().__init__(f"{field}: must satisfy {constraint}")
        self.field = field
        self.constraint = constraint


class FormatError(BLGLError, ValueError):
    pass


class VersionError(BLGLError, ValueError):
    pass


class TruncationError(BLGLError, ValueError):
    pass
