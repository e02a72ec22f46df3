"""Exception hierarchy shared by every module in the package."""


class BubbleError(Exception):
    """Base class for all errors raised by bubbleparse."""


class UnknownBubbleError(BubbleError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class PreconditionError(BubbleError, ValueError):
    """An operation was called on input that violates its contract."""

    def __init__(self, message: str, condition: str | None = None):
        super().__init__(message)
        self.condition = condition


class ComparisonError(BubbleError, ValueError):
    pass


class ResourceGuardError(BubbleError, ValueError):
    pass


class StructureError(BubbleError, ValueError):
    """The structure cannot be represented or converted as requested."""


class UnsupportedStructureError(StructureError):
    pass


class InputError(BubbleError, ValueError):
    pass


class RejectedTransition(BubbleError, ValueError):
    """A transition was applied whose pre-condition does not hold."""

    def __init__(self, transition, clause: str, step: int | None = None):
        where = f"step {step}: " if step is not None else ""
        super().__init__(f"{where}{transition} rejected, pre-condition failed: {clause}")
        self.transition = transition
        self.clause = clause
        self.step = step


class StateError(BubbleError, RuntimeError):
    pass


class WalkTimeout(BubbleError, RuntimeError):
    pass


class IncompleteSequenceError(BubbleError, ValueError):
    pass


class FormatError(BubbleError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        loc = ""
        if path is not None:
            loc += f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.line = line
        self.path = path


class UnsupportedFeatureError(FormatError):
    pass


class AlignmentError(BubbleError, ValueError):
    pass


class AnnotationError(BubbleError, ValueError):
    pass


class TrainingDataError(BubbleError, ValueError):
    pass


class DimensionError(BubbleError, ValueError):
    pass


class ContractError(BubbleError, ValueError):
    pass
