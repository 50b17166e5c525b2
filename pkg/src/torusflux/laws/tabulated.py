"""Custom pressure law tabulated as (ρ, π(ρ)) pairs

The table is interpolated by a cubic spline. Beyond the last row the law
continues as π(ρ_max)(ρ/ρ_max)^γ. The potential has no closed form and is
integrated adaptively.
"""
import logging
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from torusflux.core.errors import DomainError, QuadratureError
from torusflux.laws.base import Envelope, PressureLaw

logger = logging.getLogger(__name__)


class TabulatedLaw(PressureLaw):
    """Spline-interpolated pressure table with a power-law tail

    Attributes:
        rho_table: Strictly increasing densities, starting at 0
        pi_table: Pressures at rho_table
        source: File the table was read from, if any
    """

    kind = "tabulated"

    def __init__(
        self,
        rho_table: Sequence[float],
        pi_table: Sequence[float],
        gamma: float = 2.0,
        Gamma: float = 4.0,
        mu: float = 0.0,
        source: Optional[str] = None,
    ):
        super().__init__(gamma, Gamma, mu)
        rho_t = np.asarray(rho_table, dtype=np.float64)
        pi_t = np.asarray(pi_table, dtype=np.float64)
        if rho_t.ndim != 1 or rho_t.shape != pi_t.shape or len(rho_t) < 2:
            raise DomainError("pressure table needs two equal-length columns with at least two rows")
        if np.any(np.diff(rho_t) <= 0):
            raise DomainError("pressure table densities must be strictly increasing")
        if rho_t[0] < 0 or np.any(pi_t < 0):
            raise DomainError("pressure table entries must be nonnegative")
        if rho_t[0] > 0:
            rho_t = np.concatenate([[0.0], rho_t])
            pi_t = np.concatenate([[0.0], pi_t])
        elif pi_t[0] != 0:
            raise DomainError("tabulated pressure must vanish at zero density")
        self.rho_table = rho_t
        self.pi_table = pi_t
        self.source = source
        self._spline = CubicSpline(rho_t, pi_t)
        self._rho_max = float(rho_t[-1])
        self._pi_max = float(pi_t[-1])

    @classmethod
    def from_file(cls, path: Union[str, Path], **kwargs) -> "TabulatedLaw":
        """Load a two-column whitespace or comma separated table"""
        path = Path(path)
        text = path.read_text().replace(",", " ")
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
        try:
            table = np.array(rows, dtype=np.float64)
        except ValueError as e:
            raise DomainError(f"{path}: unreadable pressure table: {e}")
        if table.ndim != 2 or table.shape[1] != 2:
            raise DomainError(f"{path}: expected two columns (rho, pi)")
        return cls(table[:, 0], table[:, 1], source=str(path), **kwargs)

    def base_pressure(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        if order not in (0, 1, 2):
            raise DomainError(f"pressure derivatives are available up to order 2, got {order}")
        rho = np.asarray(rho, dtype=np.float64)
        g, r0, p0 = self.gamma, self._rho_max, self._pi_max
        inside = np.minimum(rho, r0)
        tail_base = np.maximum(rho, r0) / r0
        if order == 0:
            tail = p0 * tail_base ** g
        elif order == 1:
            tail = p0 * g / r0 * tail_base ** (g - 1.0)
        else:
            tail = p0 * g * (g - 1.0) / r0 ** 2 * tail_base ** (g - 2.0)
        return np.where(rho <= r0, self._spline(inside, order), tail)

    def _integrand(self, xi: float) -> float:
        return float(self.base_pressure(np.asarray(xi), 0)) / (xi * xi)

    def _integral_from_one(self, rho: float) -> float:
        if rho == 1.0:
            return 0.0
        lo, hi = min(1.0, rho), max(1.0, rho)
        breaks = [r for r in self.rho_table if lo < r < hi]
        result = integrate.quad(
            self._integrand,
            1.0,
            rho,
            points=breaks or None,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
            full_output=1,
        )
        if len(result) > 3:
            raise QuadratureError(f"potential integral to rho={rho:.6g} did not converge", result[3])
        return result[0]

    def base_potential(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.float64)
        flat = rho.ravel()
        out = np.empty_like(flat)
        for i, r in enumerate(flat):
            out[i] = 0.0 if r == 0.0 else r * self._integral_from_one(float(r))
        return out.reshape(rho.shape)

    @cached_property
    def _envelope(self) -> Envelope:
        g = self.gamma
        a = self._pi_max / self._rho_max ** g
        xs = np.linspace(0.0, self._rho_max, 4001)
        values = self.base_pressure(xs)
        C = max(1.0, float(np.abs(values - a * xs ** g).max()))
        above = xs[xs > 1.0]
        if above.size:
            C = max(
                C,
                float(np.max(np.abs(self.base_pressure(above, 1)) / above ** (g - 1.0))),
                float(np.max(np.abs(self.base_pressure(above, 2)) / above ** (g - 2.0))),
            )
        C = max(C, a * g, a * g * abs(g - 1.0))
        return Envelope(a1=a, a2=a, C=C)

    @property
    def envelope(self) -> Envelope:
        return self._envelope

    def params(self) -> Dict[str, Any]:
        if self.source:
            return {"table": self.source}
        return {"rho_table": self.rho_table.tolist(), "pi_table": self.pi_table.tolist()}
