"""Kernel backend selection.

The compiled extension is preferred when it built; the numpy fallback is
always available. ``FAKESAFE_BACKEND=numpy|cython`` forces the choice
(set before the first fakesafe import).
"""

import os

from fakesafe.errors import ConfigError

_forced = os.environ.get("FAKESAFE_BACKEND")

if _forced == "numpy":
    from fakesafe.backends import numpy_kernels as kernels

    BACKEND = "numpy"
elif _forced == "cython":
    from fakesafe.backends import _ckernels as kernels

    BACKEND = "cython"
elif _forced:
    raise ConfigError(f"unknown FAKESAFE_BACKEND {_forced!r} (use numpy or cython)")
else:
    try:
        from fakesafe.backends import _ckernels as kernels

        BACKEND = "cython"
    except ImportError:
        from fakesafe.backends import numpy_kernels as kernels

        BACKEND = "numpy"


def get_kernels(name):
    """Return a specific kernel module by name, for benchmarks and tests."""
    if name == "numpy":
        from fakesafe.backends import numpy_kernels

        return numpy_kernels
    if name == "cython":
        from fakesafe.backends import _ckernels

        return _ckernels
    raise ConfigError(f"unknown backend {name!r} (use numpy or cython)")
