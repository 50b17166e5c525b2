"""Isentropic pressure law π(ρ) = aρ^γ"""
from typing import Any, Dict

import numpy as np

from torusflux.core.errors import DomainError
from torusflux.laws.base import Envelope, PressureLaw, power_potential, safe_power


class IsentropicLaw(PressureLaw):
    """Power law aρ^γ with closed-form potential

    Attributes:
        coefficient: Prefactor a > 0
    """

    kind = "isentropic"

    def __init__(self, gamma: float = 2.0, Gamma: float = 4.0, mu: float = 0.0, coefficient: float = 1.0):
        super().__init__(gamma, Gamma, mu)
        if not coefficient > 0:
            raise DomainError(f"coefficient must be positive, got {coefficient}")
        self.coefficient = float(coefficient)

    def base_pressure(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        a, g = self.coefficient, self.gamma
        if order == 0:
            return a * rho ** g
        if order == 1:
            return a * g * safe_power(rho, g - 1.0)
        if order == 2:
            return a * g * (g - 1.0) * safe_power(rho, g - 2.0)
        raise DomainError(f"pressure derivatives are available up to order 2, got {order}")

    def base_potential(self, rho: np.ndarray) -> np.ndarray:
        return power_potential(rho, self.coefficient, self.gamma)

    @property
    def envelope(self) -> Envelope:
        a, g = self.coefficient, self.gamma
        return Envelope(a1=a, a2=a, C=max(1.0, a * g, a * g * abs(g - 1.0)))

    def params(self) -> Dict[str, Any]:
        return {"coefficient": self.coefficient}
