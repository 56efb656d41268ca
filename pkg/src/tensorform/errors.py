"""Exception hierarchy shared by every stage of the compiler."""


class TensorFormError(Exception):
    """Base class for user-facing errors."""


class UnsupportedCell(TensorFormError):
    pass


class DegreeUnsupported(TensorFormError):
    pass


class DegenerateNodeSet(TensorFormError):
    pass


class DependentConstraints(TensorFormError):
    pass


class UnsupportedDerivativeOrder(TensorFormError):
    pass


class FormError(TensorFormError):
    """Malformed form expression (shape mismatch, index misuse, ...)."""


class NotLowerable(FormError):
    pass


class FormSyntaxError(FormError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class DegenerateCell(TensorFormError):
    pass


class SymmetryAssertionFailed(TensorFormError):
    pass


class ScheduleVerificationFailed(TensorFormError):
    pass


class MeshError(TensorFormError):
    pass


class AssemblyError(TensorFormError):
    pass


class CGNotConverged(TensorFormError):
    def __init__(self, message, residual_history=()):
        self.residual_history = list(residual_history)
        super().__init__(message)


class ArtifactError(TensorFormError):
    pass
