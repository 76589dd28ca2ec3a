"""Exception types raised by the fakesafe package."""


class FakeSafeError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(FakeSafeError):
    """Array dimensions do not satisfy an operation's contract."""


class ConfigError(FakeSafeError):
    """Invalid configuration: bad layer chain, option value, or domain chain."""


class DataError(FakeSafeError):
    """Input data violates a requirement (missing labels, OOV word, ...)."""


class FormatError(FakeSafeError):
    """A file does not conform to its declared binary or text format."""


class StateError(FakeSafeError):
    """Operation called in the wrong mode or before required state exists."""
