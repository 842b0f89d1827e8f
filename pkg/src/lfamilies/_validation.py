"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import InputError


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``.

    Accepts None, an int, a SeedSequence or an existing Generator. A legacy
    RandomState is rejected because its streams are not splittable.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise InputError(f"cannot build a Generator from {seed!r}")


def spawn_generators(seed, n):
    """Independent child generators derived deterministically from ``seed``.

    Child ``i`` depends only on ``(seed, i)``, never on how work is split
    across processes.
    """
    if isinstance(seed, np.random.Generator):
        seq = seed.bit_generator.seed_seq
    elif isinstance(seed, np.random.SeedSequence):
        seq = seed
    else:
        seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(n)]


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise InputError(f"{name} must be positive and finite, got {value}")
    return value


def check_angles(angles, count, upper):
    """Validate a 1-D array of ``count`` angles lying in ``[0, upper]``."""
    arr = np.asarray(angles, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != count:
        raise InputError(f"expected {count} angles, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("angles must be finite")
    if np.any(arr < 0) or np.any(arr > upper):
        raise InputError(f"angles must lie in [0, {upper:.6g}]")
    return arr


def check_grid(edges):
    """Validate histogram bin edges: 1-D, at least two, strictly increasing."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise InputError("grid needs at least two edges")
    if not np.all(np.diff(edges) > 0):
        raise InputError("grid edges must be strictly increasing")
    return edges


def make_grid(grid=None):
    """Bin edges from ``None`` (default [0, 5] in 50 bins), a (lo, hi, nbins)
    triple, or an explicit edge array."""
    if grid is None:
        return np.linspace(0.0, 5.0, 51)
    if isinstance(grid, tuple) and len(grid) == 3:
        lo, hi, nbins = grid
        return check_grid(np.linspace(float(lo), float(hi), check_int(nbins, "nbins", 1) + 1))
    return check_grid(grid)
