"""Constitutive pressure laws for torusflux

Provides the built-in laws, their potentials, the convex/compact split
of the regularized potential and the truncation functions.
"""
from pathlib import Path
from typing import Any, Dict, List

from ..core.errors import DomainError
from .base import Density, Envelope, PressureLaw
from .isentropic import IsentropicLaw
from .perturbed import NonMonotonePerturbedLaw
from .tabulated import TabulatedLaw
from .split import PotentialSplit, build_split, smoothstep
from .truncation import renorm_L, truncation_T
from .certify import CertificationReport, certify_law

__all__ = [
    "PressureLaw",
    "Envelope",
    "IsentropicLaw",
    "NonMonotonePerturbedLaw",
    "TabulatedLaw",
    "PotentialSplit",
    "build_split",
    "smoothstep",
    "truncation_T",
    "renorm_L",
    "CertificationReport",
    "certify_law",
    "get_law",
    "law_from_dict",
    "builtin_laws",
    "eval_pressure",
    "eval_potential",
]

LAW_KINDS = {
    IsentropicLaw.kind: IsentropicLaw,
    NonMonotonePerturbedLaw.kind: NonMonotonePerturbedLaw,
    TabulatedLaw.kind: TabulatedLaw,
}


def get_law(kind: str, **params: Any) -> PressureLaw:
    """Get a law instance by kind

    Args:
        kind: "isentropic", "perturbed" or "tabulated"
        **params: Constructor parameters; tabulated laws take `table`
            (a file path) or `rho_table`/`pi_table`

    Returns:
        Configured law instance

    Raises:
        DomainError: Unknown kind or invalid parameters
    """
    if kind not in LAW_KINDS:
        raise DomainError(f"unknown pressure law kind '{kind}' (known: {', '.join(sorted(LAW_KINDS))})")
    if kind == TabulatedLaw.kind and "table" in params:
        table = params.pop("table")
        return TabulatedLaw.from_file(Path(table).expanduser(), **params)
    try:
        return LAW_KINDS[kind](**params)
    except TypeError as e:
        raise DomainError(f"invalid parameters for {kind} law: {e}")


def law_from_dict(data: Dict[str, Any]) -> PressureLaw:
    """Build a law from its config section; None entries are ignored"""
    params = {k: v for k, v in data.items() if k != "kind" and v is not None}
    return get_law(data.get("kind", IsentropicLaw.kind), **params)


def builtin_laws() -> List[PressureLaw]:
    """The certification family: isentropic γ ∈ {1.4, 2}, Γ ∈ {3.5, 4},
    μ ∈ {0.1, 1}, plus the default non-monotone perturbed law"""
    laws: List[PressureLaw] = []
    for gamma in (1.4, 2.0):
        for Gamma in (3.5, 4.0):
            for mu in (0.1, 1.0):
                laws.append(IsentropicLaw(gamma=gamma, Gamma=Gamma, mu=mu))
    laws.append(NonMonotonePerturbedLaw(gamma=2.0, Gamma=4.0, mu=1.0))
    return laws


def eval_pressure(law: PressureLaw, rho: Density) -> Density:
    """π_μ(ρ) = π(ρ) + μρ^Γ

    Raises:
        DomainError: rho is negative
    """
    return law.pressure(rho)


def eval_potential(law: PressureLaw, rho: Density) -> Density:
    """Π_μ(ρ) = ρ∫_1^ρ π_μ(ξ)/ξ² dξ

    Raises:
        DomainError: rho is negative
        QuadratureError: Tabulated potential integral did not converge
    """
    return law.potential(rho)
