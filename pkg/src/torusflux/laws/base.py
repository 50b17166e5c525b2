"""Base pressure law class and common types

A law supplies the base pressure π and its potential Π. The base class
adds the regularizing term μρ^Γ and derives everything else from the
identity ρΠ' - Π = π.
"""
import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Union

import numpy as np

from torusflux.core.errors import DomainError

Density = Union[float, np.ndarray]

# derivatives of the potential divide by ρ
TINY_DENSITY = 1e-12


@dataclass(frozen=True)
class Envelope:
    """Growth envelope a2·ρ^γ - C <= π(ρ) <= C + a1·ρ^γ

    Attributes:
        a1: Upper growth coefficient
        a2: Lower growth coefficient
        C: Additive constant, also bounding |π'| and |π''| for ρ > 1
    """

    a1: float
    a2: float
    C: float

    def to_dict(self) -> Dict[str, float]:
        return {"a1": self.a1, "a2": self.a2, "C": self.C}


def check_density(rho: Density) -> np.ndarray:
    """Validate a density argument

    Raises:
        DomainError: Any entry is negative or not finite
    """
    arr = np.asarray(rho, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("density must be finite")
    if np.any(arr < 0):
        raise DomainError(f"density must be nonnegative, got minimum {arr.min():.6g}")
    return arr


def power_potential(rho: np.ndarray, coefficient: float, exponent: float) -> np.ndarray:
    """Potential ρ∫_1^ρ aξ^{g-2}dξ of the power term aρ^g"""
    return coefficient * (rho ** exponent - rho) / (exponent - 1.0)


def _as_output(value: np.ndarray, like: Density) -> Density:
    return float(value) if np.ndim(like) == 0 else value


class PressureLaw(ABC):
    """Abstract constitutive law π_μ(ρ) = π(ρ) + μρ^Γ

    Subclasses implement the base pressure, its first two derivatives
    and its potential.
    """

    kind: str = "abstract"

    def __init__(self, gamma: float, Gamma: float = 4.0, mu: float = 0.0):
        if not gamma > 1:
            raise DomainError(f"gamma must exceed 1, got {gamma}")
        if mu < 0:
            raise DomainError(f"mu must be nonnegative, got {mu}")
        if mu > 0 and not Gamma > 1:
            raise DomainError(f"Gamma must exceed 1, got {Gamma}")
        self.gamma = float(gamma)
        self.Gamma = float(Gamma)
        self.mu = float(mu)

    @abstractmethod
    def base_pressure(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        """π or its derivative of the given order (0, 1 or 2)"""
        pass

    @abstractmethod
    def base_potential(self, rho: np.ndarray) -> np.ndarray:
        """Π(ρ) = ρ∫_1^ρ π(ξ)/ξ² dξ"""
        pass

    @property
    @abstractmethod
    def envelope(self) -> Envelope:
        pass

    def params(self) -> Dict[str, Any]:
        """Law-specific parameters for serialization"""
        return {}

    def pressure(self, rho: Density, order: int = 0) -> Density:
        """π_μ(ρ) or its derivative of the given order

        Raises:
            DomainError: Negative density
        """
        arr = check_density(rho)
        value = self.base_pressure(arr, order)
        if self.mu > 0:
            g = self.Gamma
            if order == 0:
                value = value + self.mu * arr ** g
            elif order == 1:
                value = value + self.mu * g * safe_power(arr, g - 1.0)
            else:
                value = value + self.mu * g * (g - 1.0) * safe_power(arr, g - 2.0)
        return _as_output(value, rho)

    def potential(self, rho: Density) -> Density:
        """Π_μ(ρ), normalized so that Π_μ(1) = 0"""
        arr = check_density(rho)
        value = self.base_potential(arr)
        if self.mu > 0:
            value = value + power_potential(arr, self.mu, self.Gamma)
        return _as_output(value, rho)

    def potential_derivative(self, rho: Density, order: int = 1) -> Density:
        """Derivatives of Π_μ up to third order

        Π' = (Π + π)/ρ, Π'' = π'/ρ, Π''' = π''/ρ - π'/ρ²
        """
        arr = np.maximum(check_density(rho), TINY_DENSITY)
        if order == 1:
            value = (np.asarray(self.potential(arr)) + np.asarray(self.pressure(arr))) / arr
        elif order == 2:
            value = np.asarray(self.pressure(arr, 1)) / arr
        elif order == 3:
            value = np.asarray(self.pressure(arr, 2)) / arr - np.asarray(self.pressure(arr, 1)) / arr ** 2
        else:
            raise DomainError(f"potential derivatives are available up to order 3, got {order}")
        return _as_output(value, rho)

    def to_dict(self) -> Dict[str, Any]:
        data = {"kind": self.kind, "gamma": self.gamma, "Gamma": self.Gamma, "mu": self.mu}
        data.update(self.params())
        return data

    def with_mu(self, mu: float) -> "PressureLaw":
        """Same base law with the coefficient of ρ^Γ replaced"""
        if mu < 0:
            raise DomainError(f"mu must be nonnegative, got {mu}")
        if mu > 0 and not self.Gamma > 1:
            raise DomainError(f"Gamma must exceed 1, got {self.Gamma}")
        law = copy.copy(self)
        law.mu = float(mu)
        return law

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_dict().items() if k != "kind")
        return f"{type(self).__name__}({args})"


def safe_power(rho: np.ndarray, exponent: float) -> np.ndarray:
    """ρ^e with 0^e = 0 for negative e"""
    if exponent >= 0:
        return rho ** exponent
    out = np.zeros_like(rho)
    positive = rho > 0
    out[positive] = rho[positive] ** exponent
    return out
