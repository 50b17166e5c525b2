"""Truncations T_k and the renormalization L_k

T(x) = x on [0, 1], 1 + s - s²/4 with s = x - 1 on [1, 3], 2 beyond;
T_k(x) = k·T(x/k). L_k(ρ) = ρ∫_1^ρ T_k(ξ)/ξ² dξ in closed form.
"""
from typing import Union

import numpy as np

from torusflux.core.errors import DomainError
from torusflux.laws.base import check_density

Value = Union[float, np.ndarray]


def _check_level(k: float) -> float:
    if not k >= 1:
        raise DomainError(f"truncation level must be at least 1, got {k}")
    return float(k)


def _out(value: np.ndarray, like: Value) -> Value:
    return float(value) if np.ndim(like) == 0 else value


def truncation_T(k: float, x: Value) -> Value:
    """Concave C¹ truncation at level k

    Raises:
        DomainError: k < 1 or x negative
    """
    k = _check_level(k)
    arr = check_density(x)
    y = arr / k
    s = y - 1.0
    middle = 1.0 + s - 0.25 * s * s
    value = np.where(y <= 1.0, y, np.where(y >= 3.0, 2.0, middle))
    return _out(k * value, x)


def truncation_T_derivative(k: float, x: Value) -> Value:
    k = _check_level(k)
    arr = check_density(x)
    y = arr / k
    value = np.where(y <= 1.0, 1.0, np.where(y >= 3.0, 0.0, 1.0 - 0.5 * (y - 1.0)))
    return _out(value, x)


def renorm_L(k: float, rho: Value) -> Value:
    """L_k(ρ) = ρ∫_1^ρ T_k(ξ)/ξ² dξ, with L_k(0) = 0

    Equals ρ log ρ for ρ <= k and satisfies ρL_k' - L_k = T_k.
    """
    k = _check_level(k)
    arr = check_density(rho)
    safe = np.where(arr > 0, arr, 1.0)
    log_r = np.log(safe)
    low = log_r
    middle = 1.5 * log_r - 0.5 * np.log(k) - safe / (4.0 * k) + k / (4.0 * safe)
    high = np.log(k) + 1.5 * np.log(3.0) - 2.0 * k / safe
    inner = np.where(safe <= k, low, np.where(safe >= 3.0 * k, high, middle))
    value = np.where(arr > 0, arr * inner, 0.0)
    return _out(value, rho)
