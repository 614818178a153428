"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import math
from numbers import Real

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an input violates a documented precondition."""


class PreconditionError(ValueError):
    """Raised when an operation refuses to run on otherwise valid input."""


class SingularValueError(PreconditionError):
    """Raised when ``rho`` lies within tolerance of a singular value."""


class UnderResolvedError(PreconditionError):
    """Raised when a bubble is too concentrated for the grid it is sampled on."""


def check_real(value, name: str, *, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        bracket = "(" if lo_open else "["
        raise InvalidInputError(f"{name}={value} outside {bracket}{lo}, ...")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        bracket = ")" if hi_open else "]"
        raise InvalidInputError(f"{name}={value} outside ..., {hi}{bracket}")
    return value


def check_point(x, name: str = "point") -> np.ndarray:
    """Return ``x`` as a float pair reduced into the unit square ``[0, 1)^2``."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (2,):
        raise InvalidInputError(f"{name} must have two coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite coordinates")
    return arr - np.floor(arr)


def check_points(x, name: str = "points") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"{name} must be an (n, 2) array, got shape {arr.shape}")
    return arr


def check_power_of_two(n, name: str = "N", minimum: int = 64) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise InvalidInputError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if n < minimum or n & (n - 1):
        raise InvalidInputError(f"{name} must be a power of two >= {minimum}, got {n}")
    return n


class NumericalError(RuntimeError):
    """Raised when an inner numerical solver fails to converge."""
