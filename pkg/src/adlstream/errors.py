"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid schedule, index or other user-supplied setting."""


class DomainError(ValueError):
    """Argument outside the domain of a numerical function."""


class DataError(ValueError):
    """Malformed or non-finite observation."""


class SequencingError(RuntimeError):
    """An update arrived at a stream position where it is not allowed."""


class DegenerateInformationError(ArithmeticError):
    """The debiasing denominator is zero, so no estimate can be formed yet."""
