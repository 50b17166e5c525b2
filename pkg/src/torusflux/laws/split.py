"""Convex/compact splitting of the regularized pressure potential

Π_μ = P_μ + Q with
    Φ   = μρ^Γ/(Γ-1)
    A   = Π_μ - Φ
    P_μ = χA + Φ
    Q   = (1-χ)A
where χ rises from 0 at ρ = M to 1 at ρ = 2M, so Q vanishes beyond 2M.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from torusflux.core.errors import DomainError, SplitConstructionError
from torusflux.laws.base import Density, PressureLaw, safe_power

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = np.logspace(-3, 3, 200)
SCAN_FACTOR = 1.5
SAFETY_FACTOR = 1.1
DEFAULT_SCAN_LIMIT = 1e3
NONNEGATIVE_TOLERANCE = 1e-10


def smoothstep(t: np.ndarray, order: int = 0) -> np.ndarray:
    """Degree-7 smoothstep on [0, 1] and its derivatives up to order 3

    S(t) = t⁴(35 - 84t + 70t² - 20t³) is C³ when extended by 0 and 1.
    """
    t = np.clip(t, 0.0, 1.0)
    if order == 0:
        return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)
    if order == 1:
        return 140.0 * t ** 3 * (1.0 - t) ** 3
    if order == 2:
        return 420.0 * t ** 2 * (1.0 - t) ** 2 * (1.0 - 2.0 * t)
    if order == 3:
        return 840.0 * t * (1.0 - t) * (1.0 - 5.0 * t + 5.0 * t ** 2)
    raise DomainError(f"smoothstep derivatives are available up to order 3, got {order}")


_BINOMIAL = ((1,), (1, 1), (1, 2, 1), (1, 3, 3, 1))


@dataclass
class PotentialSplit:
    """Result of build_split

    Attributes:
        law: Law whose potential is split
        M: Cutoff start; χ = 0 below M and χ = 1 above 2M
        R: Level above which Π_μ and its first three derivatives are positive
        lambda_q: Convexity constant making λ_q·P_μ ± p_μ convex
        C_q: max(|Q| + |Q'|) on the samples
        C1: Lower growth constant, C1·ρ^Γ <= P_μ
        C2: Upper growth constant, P_μ <= C2(ρ^Γ + ρ^γ + 1)
        scan_steps: Number of enlargements of M past R
    """

    law: PressureLaw
    M: float
    R: float
    lambda_q: float = 0.0
    C_q: float = 0.0
    C1: float = 0.0
    C2: float = 0.0
    scan_steps: int = 0
    samples: np.ndarray = field(default=None, repr=False)

    @property
    def support_bound(self) -> float:
        return 2.0 * self.M

    def chi(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        t = (np.asarray(rho, dtype=np.float64) - self.M) / self.M
        return smoothstep(t, order) / self.M ** order

    def _phi(self, rho: np.ndarray, order: int) -> np.ndarray:
        mu, g = self.law.mu, self.law.Gamma
        coef = mu / (g - 1.0)
        for j in range(order):
            coef *= g - j
        return coef * safe_power(rho, g - order)

    def _pi_mu(self, rho: np.ndarray, order: int) -> np.ndarray:
        if order == 0:
            return np.asarray(self.law.potential(rho))
        return np.asarray(self.law.potential_derivative(rho, order))

    def _remainder(self, rho: np.ndarray, order: int) -> np.ndarray:
        return self._pi_mu(rho, order) - self._phi(rho, order)

    def _chi_product(self, weight, rho: np.ndarray, order: int) -> np.ndarray:
        # Leibniz rule for (weight·A)^(order)
        total = np.zeros_like(rho)
        for j, c in enumerate(_BINOMIAL[order]):
            total = total + c * weight(rho, j) * self._remainder(rho, order - j)
        return total

    def P_mu(self, rho: Density, order: int = 0) -> np.ndarray:
        """Convex part P_μ or its derivative (order <= 3)"""
        rho = np.asarray(rho, dtype=np.float64)
        return self._chi_product(self.chi, rho, order) + self._phi(rho, order)

    def Q(self, rho: Density, order: int = 0) -> np.ndarray:
        """Compactly supported part Q = Π_μ - P_μ or its derivative"""
        rho = np.asarray(rho, dtype=np.float64)

        def one_minus_chi(r, j):
            return 1.0 - self.chi(r, 0) if j == 0 else -self.chi(r, j)

        return self._chi_product(one_minus_chi, rho, order)

    def p_mu(self, rho: Density) -> np.ndarray:
        """p_μ = ρP_μ' - P_μ"""
        rho = np.asarray(rho, dtype=np.float64)
        return rho * self.P_mu(rho, 1) - self.P_mu(rho, 0)

    def q(self, rho: Density) -> np.ndarray:
        """q = ρQ' - Q"""
        rho = np.asarray(rho, dtype=np.float64)
        return rho * self.Q(rho, 1) - self.Q(rho, 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "M": self.M,
            "R": self.R,
            "support_bound": self.support_bound,
            "lambda_q": self.lambda_q,
            "C_q": self.C_q,
            "C1": self.C1,
            "C2": self.C2,
            "scan_steps": self.scan_steps,
        }


def second_differences(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Second divided differences on a non-uniform grid (times 2)"""
    left = (g[1:-1] - g[:-2]) / (x[1:-1] - x[:-2])
    right = (g[2:] - g[1:-1]) / (x[2:] - x[1:-1])
    return 2.0 * (right - left) / (x[2:] - x[:-2])


def _positivity_level(law: PressureLaw, samples: np.ndarray) -> float:
    """Smallest sample above which Π_μ and three derivatives are positive"""
    ok = np.asarray(law.potential(samples)) > 0
    for order in (1, 2, 3):
        ok &= np.asarray(law.potential_derivative(samples, order)) > 0
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        return float(samples[0])
    last = bad[-1]
    if last + 1 >= samples.size:
        raise SplitConstructionError("Π_μ has a nonpositive derivative at the largest sampled density")
    return float(samples[last + 1])


def _convexity_ratio(split: PotentialSplit, x: np.ndarray) -> float:
    """max |D²p_μ| / D²P_μ over the sampled second differences"""
    d2P = second_differences(x, split.P_mu(x))
    d2p = second_differences(x, split.p_mu(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d2P > 0, np.abs(d2p) / d2P, np.where(np.abs(d2p) > 0, np.inf, 0.0))
    return float(ratio.max())


def build_split(
    law: PressureLaw,
    samples: Optional[np.ndarray] = None,
    scan_limit: float = DEFAULT_SCAN_LIMIT,
    safety: float = SAFETY_FACTOR,
) -> PotentialSplit:
    """Split Π_μ into a convex part and a compactly supported part

    Args:
        law: Law with μ > 0 and Γ > 3
        samples: Sorted densities for the checks (default 200 log-spaced
            points in [1e-3, 1e3])
        scan_limit: Largest admissible cutoff level M
        safety: Factor applied to the sampled convexity constant

    Returns:
        PotentialSplit with λ_q, C_q, C1 and C2 filled in

    Raises:
        DomainError: μ = 0 or Γ <= 3
        SplitConstructionError: No admissible M up to scan_limit
    """
    if not law.mu > 0:
        raise DomainError("the potential split needs mu > 0")
    if not law.Gamma > 3:
        raise DomainError(f"the potential split needs Gamma > 3, got {law.Gamma}")
    samples = DEFAULT_SAMPLES if samples is None else np.sort(np.asarray(samples, dtype=np.float64))

    R = _positivity_level(law, samples)
    M = R
    steps = 0
    while True:
        if M > scan_limit:
            raise SplitConstructionError(
                f"no admissible cutoff level up to {scan_limit:.4g} (started at R={R:.4g})"
            )
        split = PotentialSplit(law=law, M=M, R=R, scan_steps=steps)
        check = np.union1d(samples, np.linspace(M, 2.0 * M, 201))
        worst = min(float(np.min(split.P_mu(check, order))) for order in range(4))
        logger.debug("split scan M=%.6g worst P derivative %.3e", M, worst)
        if worst >= -NONNEGATIVE_TOLERANCE:
            break
        M *= SCAN_FACTOR
        steps += 1

    grid = np.union1d(samples, np.linspace(M, 2.0 * M, 41))
    split.lambda_q = safety * max(_convexity_ratio(split, samples), _convexity_ratio(split, grid))
    if not np.isfinite(split.lambda_q):
        raise SplitConstructionError("P_μ is not strictly convex where p_μ bends; λ_q is unbounded")

    split.C_q = float(np.max(np.abs(split.Q(grid)) + np.abs(split.Q(grid, 1))))
    P = split.P_mu(samples)
    g, G = law.gamma, law.Gamma
    split.C1 = float(np.min(P / samples ** G))
    split.C2 = float(np.max(P / (samples ** G + samples ** g + 1.0)))
    split.samples = grid
    logger.debug("split built: %s", split.to_dict())
    return split
