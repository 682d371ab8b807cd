"""Input coercion shared by the estimators and the command line."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .chebyshev import HypercubePoly, parse_hypercube
from .fourier import PolyFormatError, TrigPoly, parse_poly


def check_poly(obj) -> TrigPoly:
    """Accept a :class:`TrigPoly`, its JSON document or a JSON string."""
    if isinstance(obj, TrigPoly):
        return obj
    if isinstance(obj, (str, bytes, Mapping)):
        return parse_poly(obj)
    raise PolyFormatError(f"cannot interpret {type(obj).__name__} as a trigonometric polynomial")


def check_hypercube_poly(obj) -> HypercubePoly:
    if isinstance(obj, HypercubePoly):
        return obj
    if isinstance(obj, (str, bytes, Mapping)):
        return parse_hypercube(obj)
    raise PolyFormatError(f"cannot interpret {type(obj).__name__} as a hypercube polynomial")


def check_points(x, dim: int) -> np.ndarray:
    """2-D float array of shape ``(n_points, dim)``; a 1-D input is read as ``n_points`` when ``dim == 1``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None] if dim == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected points of shape (n, {dim}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def check_level(value, name: str = "s") -> int:
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
