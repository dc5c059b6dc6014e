"""Exception hierarchy shared across the package."""


class DvfsError(Exception):
    """Base class for all package errors."""


class InvalidAction(DvfsError, ValueError):
    pass


class NonFiniteState(DvfsError, ValueError):
    pass


class NonFiniteTemperature(NonFiniteState):
    pass


class InvalidDims(DvfsError, ValueError):
    pass


class DimensionMismatch(DvfsError, ValueError):
    pass


class EmptyDataset(DvfsError, ValueError):
    pass


class UntrainedModel(DvfsError, RuntimeError):
    pass


class MissingChannels(DvfsError, KeyError):
    pass


class EmptyBatch(DvfsError, ValueError):
    pass


class EmptyTemps(DvfsError, ValueError):
    pass


class NonPositiveTarget(DvfsError, ValueError):
    pass


class IndexOutOfRange(DvfsError, IndexError):
    pass


class HorizonExceeded(DvfsError, RuntimeError):
    pass


class SweepAborted(DvfsError, RuntimeError):
    pass


class UnknownWorkload(DvfsError, KeyError):
    pass


class EmptySource(DvfsError, ValueError):
    pass


class CacheMiss(DvfsError, KeyError):
    pass


class ParseFailure(DvfsError, ValueError):
    pass


class AllRetriesFailed(DvfsError, RuntimeError):
    pass


class UnknownCategory(DvfsError, ValueError):
    pass


class IncompleteTriple(DvfsError, ValueError):
    pass


class DegenerateRange(DvfsError, ValueError):
    pass


class ZeroActual(DvfsError, ZeroDivisionError):
    pass


class LengthMismatch(DvfsError, ValueError):
    pass


class InsufficientTargetData(DvfsError, ValueError):
    pass


class ConfigInvalid(DvfsError, ValueError):
    pass
