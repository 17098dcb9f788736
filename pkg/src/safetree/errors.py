"""Exception types shared across the package."""


class SafetreeError(Exception):
    """Base class for all errors raised by safetree."""


class StrategyFormatError(SafetreeError, ValueError):
    """A strategy file could not be parsed or violates the table invariants."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DuplicateConfigurationError(StrategyFormatError):
    pass


class EmptyActionSetError(StrategyFormatError):
    pass


class SchemaMismatchError(SafetreeError, ValueError):
    pass


class CorruptInputError(SafetreeError, ValueError):
    """Identical feature vectors carry different action sets."""


class NoPureActionError(SafetreeError):
    """A leaf of a decision tree ended up without any pure action."""

    def __init__(self, path, stats):
        self.path = path
        self.stats = stats
        where = " and ".join(path) if path else "<root>"
        super().__init__(f"leaf without pure action at [{where}], counts={stats}")


class GridTooLargeError(SafetreeError, ValueError):
    pass


class UnsatisfiableError(SafetreeError):
    """Safety synthesis produced no safe state in the initial region."""


class CapacityError(SafetreeError):
    """The BDD node table grew past its configured capacity."""
