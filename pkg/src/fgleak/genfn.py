"""Portfolio generating functions on the open simplex.

Each registered kind supplies a value ``G(x)`` and a gradient-like vector
``DG(x)``. A :class:`GenFnSpec` optionally rescales both by a positive
constant so that ``G`` equals one at the starting weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import CalibrationError, ConfigError, DomainError, SimplexError

SIMPLEX_TOL = 1e-9


def _entropy_value(x: np.ndarray) -> float:
    return float(-np.dot(x, np.log(x)))


def _entropy_grad(x: np.ndarray) -> np.ndarray:
    return -np.log(x) - 1.0


def _quadratic_value(x: np.ndarray) -> float:
    return float(1.0 - 0.5 * np.dot(x, x))


def _quadratic_grad(x: np.ndarray) -> np.ndarray:
    return -x


class _Kind(NamedTuple):
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    code: int  # kernel dispatch code, -1 for numpy-only kinds


_REGISTRY: dict[str, _Kind] = {
    "entropy": _Kind(_entropy_value, _entropy_grad, 0),
    "quadratic": _Kind(_quadratic_value, _quadratic_grad, 1),
}


def register(kind: str, value, grad) -> None:
    """Add a generating function.

    ``value(x) -> float`` and ``grad(x) -> ndarray`` must be defined on the
    open simplex. Whether the induced residual process has finite variation
    is the caller's responsibility. Custom kinds always run on the numpy
    path.
    """
    if kind in _REGISTRY:
        raise ConfigError(f"generating function {kind!r} already registered")
    _REGISTRY[kind] = _Kind(value, grad, -1)


def available() -> list[str]:
    return sorted(_REGISTRY)


@dataclass(frozen=True)
class GenFnSpec:
    kind: str = "entropy"
    normalization_constant: float = 1.0

    def __post_init__(self):
        if self.kind not in _REGISTRY:
            raise ConfigError(
                f"unknown generating function {self.kind!r}; choose from {available()}"
            )
        c = self.normalization_constant
        if not (np.isfinite(c) and c > 0):
            raise ConfigError(f"normalization constant must be positive, got {c}")

    @property
    def kernel_code(self) -> int:
        return _REGISTRY[self.kind].code


class GenFnEval(NamedTuple):
    value: float
    grad: np.ndarray


def _check_simplex(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise SimplexError(f"expected a non-empty vector, got shape {x.shape}")
    if not np.all(x > 0.0):
        raise DomainError("weights must be strictly positive")
    if abs(x.sum() - 1.0) > SIMPLEX_TOL:
        raise SimplexError(f"weights sum to {x.sum()!r}, not 1")
    return x


def raw_value(kind: str, x) -> float:
    """Unnormalized ``G(x)``."""
    return _REGISTRY[kind].value(_check_simplex(x))


def evaluate(spec: GenFnSpec, x) -> GenFnEval:
    x = _check_simplex(x)
    fn = _REGISTRY[spec.kind]
    c = spec.normalization_constant
    return GenFnEval(fn.value(x) / c, fn.grad(x) / c)


def calibrate_normalization(spec: GenFnSpec, x0) -> GenFnSpec:
    """Return ``spec`` rescaled so that ``G(x0) == 1``."""
    g0 = raw_value(spec.kind, x0)
    if not (np.isfinite(g0) and g0 > 0):
        raise CalibrationError(f"cannot normalize: G(x0) = {g0}")
    return replace(spec, normalization_constant=g0)
