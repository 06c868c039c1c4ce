"""Input validation helpers and the exception hierarchy."""

import numbers

import numpy as np


class DegenerateEstimatorError(ValueError):
    """An active sensor carries zero signal gain, so no unbiased estimator exists."""


class NoSolutionError(ValueError):
    """A set of measured noise levels admits no physical interpretation."""


class OutOfDomainError(ValueError):
    """An argument lies outside the domain of an inverse function."""


def check_finite(value, name):
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def check_fraction(value, name):
    value = check_finite(value, name)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_mode(mode, num_modes):
    if not isinstance(mode, numbers.Integral) or isinstance(mode, bool):
        raise ValueError(f"mode index must be an integer, got {mode!r}")
    if not 0 <= mode < num_modes:
        raise ValueError(f"mode {mode} out of range for {num_modes} modes")
    return int(mode)


def check_vector(values, name, length=None):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_signs(values, name, length=None):
    arr = check_vector(values, name, length)
    if not np.all(np.isin(arr, (-1.0, 1.0))):
        raise ValueError(f"{name} entries must be +1 or -1")
    return arr


def check_efficiencies(eta, num_modes):
    arr = np.broadcast_to(np.asarray(eta, dtype=float), (num_modes,)).copy()
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValueError("efficiencies must lie in [0, 1]")
    return arr


def frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr
