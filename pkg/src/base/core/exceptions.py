"""
Exception hierarchy. Every error carries the process exit code the CLI
reports for it: 1 for a failed verification, 2 for invalid input or a
computation that could not be carried out.
"""


class HormanderError(Exception):
    exit_code: int = 2


class InvalidInputError(HormanderError):
    exit_code = 2


class ExprParseError(InvalidInputError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class SystemDefinitionError(InvalidInputError):
    pass


class DimensionMismatchError(InvalidInputError):
    pass


class UnknownBuiltinError(InvalidInputError):
    pass


class GridMismatchError(InvalidInputError):
    pass


class ComputationError(HormanderError):
    exit_code = 2


class FlowEscapeError(ComputationError):
    pass


class SizeLimitError(ComputationError):
    pass


class KrylovConvergenceError(ComputationError):
    pass


class QuadratureResidualError(ComputationError):
    pass


class BallBoundaryError(ComputationError):
    pass


class EmptySampleError(ComputationError):
    pass


class UnstableLadderError(ComputationError):
    pass


class VerificationFailure(HormanderError):
    exit_code = 1
