"""Scalar conversion helpers shared by the float and exact arithmetic modes."""
from __future__ import annotations

import math
import numbers
from fractions import Fraction

import numpy as np

EPS_FEAS = 1e-9


class InputError(ValueError):
    """Raised on malformed numeric input (bad shapes, non-finite or irrational values)."""


def to_fraction(x) -> Fraction:
    """Convert ``x`` to an exact rational.

    Floats are read through their shortest decimal representation, so ``0.1``
    becomes ``1/10`` rather than the binary expansion of the double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise InputError(f"boolean is not a numeric value: {x!r}")
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise InputError(f"non-finite value {x!r} in exact mode")
        return Fraction(repr(float(x)))
    if isinstance(x, numbers.Rational):
        return Fraction(x.numerator, x.denominator)
    raise InputError(f"value {x!r} of type {type(x).__name__} is not rational")


def to_float(x) -> float:
    v = float(x)
    if not math.isfinite(v):
        raise InputError(f"non-finite value {x!r}")
    return v


def as_vector(values, exact: bool) -> np.ndarray:
    """1-d array of Fractions (object dtype) in exact mode, float64 otherwise."""
    seq = np.asarray(values, dtype=object).ravel()
    if exact:
        return np.array([to_fraction(v) for v in seq], dtype=object)
    return np.array([to_float(v) for v in seq], dtype=float)


def as_matrix(values, exact: bool) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    if arr.ndim != 2:
        raise InputError(f"expected a matrix, got shape {arr.shape}")
    flat = as_vector(arr.ravel(), exact)
    return flat.reshape(arr.shape)


def is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


def zero(exact: bool):
    return Fraction(0) if exact else 0.0


def one(exact: bool):
    return Fraction(1) if exact else 1.0


def tol(exact: bool, scale=1.0, eps: float = EPS_FEAS):
    """Comparison slack: zero in exact mode, ``eps * (1 + |scale|)`` in float mode."""
    if exact:
        return 0
    return eps * (1.0 + abs(float(scale)))


def jsonable(x):
    """Render numbers (including Fractions and arrays) for JSON output."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x
