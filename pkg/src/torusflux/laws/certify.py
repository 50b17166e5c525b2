"""Invariant suite for pressure laws

Checks run on log-spaced sample densities:
    identity     ρΠ_μ' - Π_μ = π_μ with Richardson-extrapolated derivatives
    positivity   π(0) = 0 and π > 0 for ρ > 0
    envelope     a2ρ^γ - C <= π <= C + a1ρ^γ
    derivatives  |π'| <= Cρ^{γ-1} and |π''| <= Cρ^{γ-2} for ρ > 1
and, when μ > 0 and Γ > 3, the potential split checks.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from torusflux.core.errors import TorusfluxError
from torusflux.laws.base import PressureLaw
from torusflux.laws.split import DEFAULT_SAMPLES, build_split, second_differences

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-8
CONVEXITY_TOLERANCE = 1e-10
RELATIVE_STEP = 1e-3


@dataclass
class CheckResult:
    """Outcome of one invariant check

    Attributes:
        name: Check identifier
        passed: Whether the invariant held on every sample
        worst: Largest violation (or margin) observed
        detail: Human-readable note
    """

    name: str
    passed: bool
    worst: float = 0.0
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "worst": self.worst, "detail": self.detail}


@dataclass
class CertificationReport:
    law: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)
    split: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "law": self.law,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "split": self.split,
        }


def richardson_derivative(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central difference with one Richardson extrapolation step, h = 1e-3·x"""
    x = np.asarray(x, dtype=np.float64)
    h = RELATIVE_STEP * x

    def central(step):
        return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def check_identity(law: PressureLaw, samples: np.ndarray = DEFAULT_SAMPLES) -> CheckResult:
    derivative = richardson_derivative(law.potential, samples)
    pressure = np.asarray(law.pressure(samples))
    residual = np.abs(samples * derivative - np.asarray(law.potential(samples)) - pressure)
    scaled = residual / (1.0 + np.abs(pressure))
    worst = float(scaled.max())
    return CheckResult("identity", worst <= IDENTITY_TOLERANCE, worst, "|ρΠ' - Π - π| / (1 + |π|)")


def check_positivity(law: PressureLaw, samples: np.ndarray = DEFAULT_SAMPLES) -> CheckResult:
    at_zero = abs(float(law.pressure(0.0)))
    low = float(np.min(law.pressure(samples)))
    passed = at_zero == 0.0 and low > 0
    return CheckResult("positivity", passed, low, f"π(0) = {at_zero:.3g}, min π on samples = {low:.3g}")


def check_envelope(law: PressureLaw, samples: np.ndarray = DEFAULT_SAMPLES) -> CheckResult:
    env = law.envelope
    base = law.base_pressure(samples)
    lower = env.a2 * samples ** law.gamma - env.C - base
    upper = base - env.C - env.a1 * samples ** law.gamma
    worst = float(max(lower.max(), upper.max()))
    return CheckResult("envelope", worst <= 0.0, worst, f"a1={env.a1:.4g} a2={env.a2:.4g} C={env.C:.4g}")


def check_derivative_bounds(law: PressureLaw, samples: np.ndarray = DEFAULT_SAMPLES) -> CheckResult:
    env = law.envelope
    above = samples[samples > 1.0]
    g = law.gamma
    first = np.abs(law.base_pressure(above, 1)) - env.C * above ** (g - 1.0)
    second = np.abs(law.base_pressure(above, 2)) - env.C * above ** (g - 2.0)
    worst = float(max(first.max(), second.max())) if above.size else 0.0
    # relative slack for floating roundoff at large ρ
    scale = float(env.C * above.max() ** max(g - 1.0, 0.0)) if above.size else 1.0
    return CheckResult("derivatives", worst <= 1e-12 * scale, worst, "|π'| <= Cρ^{γ-1}, |π''| <= Cρ^{γ-2}")


def split_checks(
    law: PressureLaw, samples: np.ndarray = DEFAULT_SAMPLES
) -> Tuple[List[CheckResult], Optional[Dict[str, Any]]]:
    """Checks on P_μ, Q and λ_q for laws in the μ > 0, Γ > 3 regime"""
    try:
        split = build_split(law, samples)
    except TorusfluxError as e:
        return [CheckResult("split", False, float("inf"), str(e))], None

    results = []
    worst_derivative = min(float(np.min(split.P_mu(samples, k))) for k in range(4))
    results.append(
        CheckResult("split_monotone", worst_derivative >= -CONVEXITY_TOLERANCE, worst_derivative, "P_μ^(k) >= 0, k <= 3")
    )

    P = split.P_mu(samples)
    p = split.p_mu(samples)
    worst_convex = float(
        min(
            second_differences(samples, split.lambda_q * P + p).min(),
            second_differences(samples, split.lambda_q * P - p).min(),
        )
    )
    results.append(
        CheckResult(
            "split_convexity",
            worst_convex >= -CONVEXITY_TOLERANCE,
            worst_convex,
            f"λ_q = {split.lambda_q:.6g}",
        )
    )

    pi_mu = np.asarray(law.pressure(samples))
    rf = np.abs(p + split.q(samples) - pi_mu) / (1.0 + np.abs(pi_mu))
    results.append(CheckResult("split_identity", float(rf.max()) <= IDENTITY_TOLERANCE, float(rf.max()), "p_μ + q = π_μ"))

    beyond = samples[samples > split.support_bound]
    leak = float(np.abs(split.Q(beyond)).max()) if beyond.size else 0.0
    results.append(CheckResult("split_support", leak == 0.0, leak, f"Q = 0 beyond {split.support_bound:.6g}"))

    g, G = law.gamma, law.Gamma
    growth_low = float(np.min(P - split.C1 * samples ** G))
    growth_high = float(np.max(P - split.C2 * (samples ** G + samples ** g + 1.0)))
    passed = split.C1 > 0 and growth_low >= -1e-12 * np.abs(P).max() and growth_high <= 1e-12 * np.abs(P).max()
    results.append(
        CheckResult("split_growth", passed, max(-growth_low, growth_high), f"C1={split.C1:.4g} C2={split.C2:.4g}")
    )
    return results, split.to_dict()


def certify_law(law: PressureLaw, samples: Optional[np.ndarray] = None) -> CertificationReport:
    """Run the full invariant suite for one law

    Returns:
        CertificationReport; check `passed` and `failures()`
    """
    samples = DEFAULT_SAMPLES if samples is None else np.asarray(samples, dtype=np.float64)
    report = CertificationReport(law=law.to_dict())
    for check in (check_identity, check_positivity, check_envelope, check_derivative_bounds):
        report.checks.append(check(law, samples))
    if law.mu > 0 and law.Gamma > 3:
        results, summary = split_checks(law, samples)
        report.checks.extend(results)
        report.split = summary
    for failed in report.failures():
        logger.warning("%r failed %s: %s (worst %.3e)", law, failed.name, failed.detail, failed.worst)
    return report
