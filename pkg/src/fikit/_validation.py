"""Input validation helpers shared by all modules."""
import numbers

import numpy as np

from .exceptions import InvalidArgumentError

MEASURE_ATOL = 1e-12


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InvalidArgumentError(f"{name} must be a finite real, got {value!r}")
    if strict and value <= 0:
        raise InvalidArgumentError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise InvalidArgumentError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_field(values, space=None, name="field"):
    """Return ``values`` as a finite 1-D float array matching ``space``."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional")
    if space is not None and arr.shape[0] != space.n_points:
        raise InvalidArgumentError(
            f"{name} has {arr.shape[0]} values, space has {space.n_points} points")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def check_measure(weights, space=None, name="measure"):
    """Validate probability weights: nonnegative and summing to one."""
    arr = check_field(weights, space, name)
    if np.any(arr < 0):
        raise InvalidArgumentError(f"{name} has negative weights")
    total = arr.sum()
    if abs(total - 1.0) > MEASURE_ATOL:
        raise InvalidArgumentError(f"{name} sums to {total!r}, expected 1")
    return arr


def normalize(weights):
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    # one renormalization pass pulls the sum to within a couple of ulps
    return w / w.sum()


def check_conjugate(q):
    """Return the conjugate exponent of ``q`` in (1, 2]."""
    if not isinstance(q, numbers.Real) or not 1.0 < q <= 2.0:
        raise InvalidArgumentError(
            f"q must lie in (1, 2], got {q!r}; no q-log-Sobolev inequality "
            "can hold for q > 2")
    return q / (q - 1.0)
