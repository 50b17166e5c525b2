"""Power law with a compactly supported, non-monotone perturbation

π(ρ) = aρ^γ + q(ρ) with q(ρ) = A·256·x⁴(1-x)⁴, x = ρ/M_q, on [0, M_q]
and q = 0 beyond. q is C³, vanishes at 0 and peaks at A for ρ = M_q/2.
"""
from functools import cached_property
from typing import Any, Dict

import numpy as np
from numpy.polynomial import Polynomial

from torusflux.core.errors import DomainError
from torusflux.laws.base import Envelope, PressureLaw, power_potential, safe_power

_SAMPLES = 2001


class NonMonotonePerturbedLaw(PressureLaw):
    """Isentropic law plus a bump q supported in [0, M_q]

    With the defaults (a=1, γ=2, A=2, M_q=2) the law decreases near ρ = 1.4.
    """

    kind = "perturbed"

    def __init__(
        self,
        gamma: float = 2.0,
        Gamma: float = 4.0,
        mu: float = 0.0,
        coefficient: float = 1.0,
        amplitude: float = 2.0,
        support: float = 2.0,
    ):
        super().__init__(gamma, Gamma, mu)
        if not coefficient > 0:
            raise DomainError(f"coefficient must be positive, got {coefficient}")
        if amplitude < 0:
            raise DomainError(f"perturbation amplitude must be nonnegative, got {amplitude}")
        if not support > 0:
            raise DomainError(f"perturbation support must be positive, got {support}")
        self.coefficient = float(coefficient)
        self.amplitude = float(amplitude)
        self.support = float(support)

        x = Polynomial([0.0, 1.0 / self.support])
        self._q = self.amplitude * 256.0 * x ** 4 * (1.0 - x) ** 4
        self._dq = self._q.deriv(1)
        self._d2q = self._q.deriv(2)
        # q has a zero of order 4 at the origin, so q(ξ)/ξ² is a polynomial
        self._q_over_xi2 = Polynomial(self._q.coef[2:])
        self._q_antiderivative = self._q_over_xi2.integ()

    def perturbation(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        """q or its derivative, zero outside [0, M_q]"""
        poly = (self._q, self._dq, self._d2q)[order]
        rho = np.asarray(rho, dtype=np.float64)
        return np.where(rho <= self.support, poly(np.minimum(rho, self.support)), 0.0)

    def base_pressure(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        if order not in (0, 1, 2):
            raise DomainError(f"pressure derivatives are available up to order 2, got {order}")
        a, g = self.coefficient, self.gamma
        power = (a * rho ** g, a * g * safe_power(rho, g - 1.0), a * g * (g - 1.0) * safe_power(rho, g - 2.0))
        return power[order] + self.perturbation(rho, order)

    def base_potential(self, rho: np.ndarray) -> np.ndarray:
        anti = self._q_antiderivative
        clipped = np.minimum(rho, self.support)
        inner = anti(clipped) - anti(min(1.0, self.support))
        return power_potential(rho, self.coefficient, self.gamma) + rho * inner

    @cached_property
    def _perturbation_bounds(self):
        xs = np.linspace(0.0, self.support, _SAMPLES)
        return tuple(float(np.abs(p(xs)).max()) for p in (self._q, self._dq, self._d2q))

    @property
    def envelope(self) -> Envelope:
        a, g = self.coefficient, self.gamma
        q0, q1, q2 = self._perturbation_bounds
        # on [1, M_q] the powers ρ^{γ-1}, ρ^{γ-2} are bounded below by these
        low1 = min(1.0, self.support ** (g - 1.0))
        low2 = min(1.0, self.support ** (g - 2.0))
        C = max(1.0, q0, a * g + q1 / low1, a * g * abs(g - 1.0) + q2 / low2)
        return Envelope(a1=a, a2=a, C=C)

    def params(self) -> Dict[str, Any]:
        return {"coefficient": self.coefficient, "amplitude": self.amplitude, "support": self.support}
