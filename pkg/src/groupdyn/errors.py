"""Exception hierarchy shared across the package."""


class GroupDynError(Exception):
    """Base class for every error raised by groupdyn."""


class ConfigError(GroupDynError, ValueError):
    """Invalid parameters or configuration documents."""


class NumericalError(GroupDynError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


class EmptyPopulationError(NumericalError):
    pass


class DegenerateAttractionError(NumericalError):
    pass


class DomainError(NumericalError):
    pass


class EmptySupportError(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class BoundaryProximityError(NumericalError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class EigenDecompositionError(NumericalError):
    pass


class IllConditionedError(NumericalError):
    pass


class DegenerateExpansionError(NumericalError):
    pass
