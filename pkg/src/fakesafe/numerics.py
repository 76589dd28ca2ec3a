"""Deterministic dense array operations and seeded sampling.

Matrices are 2-D numpy arrays, row-major: float32 for training, float64
for gradient checking. Randomness always flows through an explicit
generator from :func:`make_rng`, so a seed fully determines every draw.
"""

import numpy as np

from fakesafe.errors import ConfigError, DataError, ShapeError

ACTIVATIONS = ("leaky_relu", "tanh", "sigmoid")


def make_rng(seed):
    """Seeded generator (PCG64); same seed means same stream everywhere."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _require_matrix(x, name):
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    return x


def matmul(a, b):
    """Matrix product with shape validation and a finiteness guarantee."""
    a = _require_matrix(a, "a")
    b = _require_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.isfinite(out).all():
        raise DataError("matrix product produced non-finite values")
    return out


def apply_activation(x, kind, alpha=0.2, derivative=False):
    """Elementwise activation (or its derivative) with shape preserved.

    The leaky-relu kink at 0 uses the negative-side slope ``alpha``.
    """
    x = np.asarray(x)
    if kind == "leaky_relu":
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"leaky_relu slope must be in (0, 1), got {alpha}")
        slope = np.where(x > 0, 1.0, alpha).astype(x.dtype)
        return slope if derivative else x * slope
    if kind == "tanh":
        y = np.tanh(x)
        return 1.0 - y * y if derivative else y
    if kind == "sigmoid":
        pos = x >= 0
        ex = np.exp(np.where(pos, -x, x))
        y = np.where(pos, 1.0 / (1.0 + ex), ex / (1.0 + ex))
        return y * (1.0 - y) if derivative else y
    raise ConfigError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


def column_moments(x):
    """Per-column mean and biased (population) variance."""
    x = _require_matrix(x, "x")
    if x.shape[0] < 1:
        raise ShapeError(f"need at least one row, got shape {x.shape}")
    return x.mean(axis=0), x.var(axis=0)


def sample_gaussian(rng, rows, cols, mean=0.0, stddev=1.0, dtype=np.float32):
    """I.i.d. normal draws as a deterministic function of the generator."""
    if stddev < 0:
        raise ConfigError(f"stddev must be >= 0, got {stddev}")
    if rows < 0 or cols < 0:
        raise ShapeError(f"invalid shape ({rows}, {cols})")
    draws = mean + stddev * rng.standard_normal((rows, cols))
    return draws.astype(dtype)


def shuffle_rows(x, labels=None, rng=None):
    """Permute rows (labels co-permuted); the permutation is rng-determined."""
    x = _require_matrix(x, "x")
    if rng is None:
        raise ConfigError("shuffle_rows requires an rng")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape[0] != x.shape[0]:
            raise ShapeError(
                f"labels length {labels.shape[0]} != row count {x.shape[0]}"
            )
    perm = rng.permutation(x.shape[0])
    shuffled = x[perm]
    return shuffled, (labels[perm] if labels is not None else None)
