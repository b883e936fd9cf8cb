"""Exception hierarchy shared by every subpackage."""


class CodesignError(Exception):
    """Base class for all errors raised by this package."""


# expression engine
class UnboundVariable(CodesignError):
    pass


class NonFiniteResult(CodesignError, FloatingPointError):
    pass


# dynamics
class SingularMassMatrix(CodesignError):
    pass


# transcription
class InfeasibleTorque(CodesignError, ValueError):
    pass


class BadKeyframe(CodesignError, ValueError):
    pass


# file schemas
class SchemaError(CodesignError, ValueError):
    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CycleError(SchemaError):
    pass


class MissingBounds(SchemaError):
    pass


class MonotonicityError(SchemaError):
    pass


class UnitError(SchemaError):
    pass
