"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for bad input or
failed validation, 3 for runtime/numeric failures.
"""


class FvkitError(Exception):
    exit_code = 3


class InputError(FvkitError, ValueError):
    exit_code = 2


class NumericError(FvkitError, ArithmeticError):
    exit_code = 3


# fault-tree parsing and validation
class FaultTreeSyntaxError(InputError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class DuplicateName(InputError):
    pass


class UnresolvedReference(InputError):
    def __init__(self, name, line=None):
        self.name = name
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unresolved reference {name!r}{where}")


class CycleDetected(InputError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("gate cycle: " + " -> ".join(self.cycle))


class MissingTop(InputError):
    pass


# quantification
class CombinatorialLimit(NumericError):
    pass


class ExactTooLarge(InputError):
    pass


class TooManyEvents(InputError):
    pass


class MissingProbability(InputError):
    pass


# ISM
class NonSquare(InputError):
    pass


class BadCell(InputError):
    pass


class NoProgress(NumericError):
    pass


# neural / datasets
class TooFewSamples(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class UnknownNode(InputError):
    pass


class MissingEvent(InputError):
    pass


class LengthMismatch(InputError):
    pass


class NonFiniteLoss(NumericError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"loss became non-finite at epoch {epoch}")


class SampleError(NumericError):
    def __init__(self, sample_id, cause):
        self.sample_id = sample_id
        self.cause = cause
        super().__init__(f"sample {sample_id}: {cause}")
        self.exit_code = getattr(cause, "exit_code", 3)
