"""Exception hierarchy for torusflux

Library code raises these; only the CLI turns them into exit codes.
"""
from typing import List, Optional, Tuple


class TorusfluxError(Exception):
    """Base class for all torusflux errors"""

    pass


class DomainError(TorusfluxError, ValueError):
    """Argument outside the mathematical domain of an operation"""

    pass


class ResolutionError(TorusfluxError):
    """A length scale is not resolved by the grid"""

    pass


class QuadratureError(TorusfluxError):
    """Adaptive quadrature failed to converge"""

    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(f"{message}: {diagnostic}" if diagnostic else message)
        self.diagnostic = diagnostic


class SplitConstructionError(TorusfluxError):
    """No admissible cutoff level for the potential split"""

    pass


class CFLViolation(TorusfluxError):
    """Transport step rejected by the advective CFL condition"""

    def __init__(self, dt: float, suggested_dt: float):
        super().__init__(
            f"time step {dt:.3e} violates the advective CFL bound; "
            f"suggested dt <= {suggested_dt:.3e}"
        )
        self.dt = dt
        self.suggested_dt = suggested_dt


class PicardNonConvergence(TorusfluxError):
    """Fixed-point iteration hit its cap"""

    def __init__(self, iterations: int, last_residual: float):
        super().__init__(
            f"Picard iteration did not converge in {iterations} iterations "
            f"(last residual {last_residual:.3e})"
        )
        self.iterations = iterations
        self.last_residual = last_residual


class ExponentError(TorusfluxError):
    """Exponent relations of the uniform estimates violated"""

    pass


class ConfigError(TorusfluxError):
    """Invalid configuration document

    Attributes:
        entries: (location, message) pairs; location is "line N: a.b" when
            the source line is known
    """

    def __init__(self, entries: List[Tuple[str, str]]):
        self.entries = list(entries)
        lines = [f"{loc}: {msg}" if loc else msg for loc, msg in self.entries]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class OutputExistsError(TorusfluxError):
    """Output directory already holds results"""

    def __init__(self, path: str, hint: Optional[str] = "use --force to overwrite"):
        super().__init__(f"output directory already exists: {path}" + (f" ({hint})" if hint else ""))
        self.path = path
