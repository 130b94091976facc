"""Exception hierarchy shared by every module."""


class BorellLabError(Exception):
    """Base class for all errors raised by borell_lab."""


class ContractError(BorellLabError, ValueError):
    """An operation was called outside its admissible parameter range."""


class DimensionError(BorellLabError, ValueError):
    """Mismatched lengths, dimensions or direction grids."""


class ValidationError(BorellLabError, ValueError):
    """Input data fails a structural invariant (symmetry, positivity, ...)."""


class DegeneracyError(BorellLabError, ValueError):
    """A geometric construction collapsed (empty or lower-dimensional)."""


class DomainError(BorellLabError, ValueError):
    """A grid does not cover the region an operation needs."""


class ZeroFunctionError(BorellLabError, ValueError):
    """The function has empty support."""


class UnsupportedCombinerError(BorellLabError, ValueError):
    """The combiner lacks a property the operation relies on."""


class InputError(BorellLabError, ValueError):
    """A file, scenario or command-line value could not be parsed."""
