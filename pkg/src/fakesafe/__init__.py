"""FakeSafe: hide private data inside realistic decoy messages.

A pair of trained networks maps data points into a decoy domain (F) and
back (R), trained adversarially against a discriminator (D) with a
cycle-consistency penalty so the round trip preserves content.
"""

from fakesafe.errors import (
    ConfigError,
    DataError,
    FakeSafeError,
    FormatError,
    ShapeError,
    StateError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FakeSafeError",
    "FormatError",
    "ShapeError",
    "StateError",
    "__version__",
]
