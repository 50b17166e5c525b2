"""Uniform torus grids and periodic fields

A PeriodicField stores its samples as an array of shape
(components, n, ..., n). Scalar fields have one component.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, ClassVar, Sequence, Tuple, Union

import numpy as np

from torusflux.core.errors import DomainError

NONNEGATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the d-dimensional torus [0, length)^d

    Attributes:
        dim: Spatial dimension (1, 2 or 3)
        n_per_axis: Points per axis, a power of two >= 8
        length: Period per axis
    """

    dim: int
    n_per_axis: int
    length: float = 2.0 * np.pi

    MIN_POINTS: ClassVar[int] = 8
    MAX_TOTAL_POINTS: ClassVar[int] = 2 ** 24

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"grid dimension must be 1, 2 or 3, got {self.dim}")
        n = self.n_per_axis
        if n < self.MIN_POINTS or n & (n - 1):
            raise DomainError(f"points per axis must be a power of two >= {self.MIN_POINTS}, got {n}")
        if n ** self.dim > self.MAX_TOTAL_POINTS:
            raise DomainError(f"grid with {n ** self.dim} points exceeds the memory budget")
        if not self.length > 0:
            raise DomainError(f"period must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.n_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def spatial_axes(self) -> Tuple[int, ...]:
        """Array axes of the spatial dimensions in a field's value array"""
        return tuple(range(1, self.dim + 1))

    def coordinates(self) -> np.ndarray:
        """1D coordinates x_j = j * spacing shared by every axis"""
        return np.arange(self.n_per_axis) * self.spacing

    def mesh(self) -> Tuple[np.ndarray, ...]:
        x = self.coordinates()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Angular wavenumbers per axis, shaped to broadcast over the grid"""
        return _wavenumbers(self)

    def k_squared(self) -> np.ndarray:
        return _k_squared(self)

    def offsets(self) -> np.ndarray:
        """Minimum-image displacement of every grid point from the origin

        Returns:
            Array of shape (dim,) + shape
        """
        return _offsets(self)

    def distances(self) -> np.ndarray:
        """Periodic distance of every grid point from the origin"""
        return np.sqrt(np.sum(self.offsets() ** 2, axis=0))

    def refined(self, factor: int = 2) -> "TorusGrid":
        return TorusGrid(self.dim, self.n_per_axis * factor, self.length)


@lru_cache(maxsize=32)
def _wavenumbers(grid: TorusGrid) -> Tuple[np.ndarray, ...]:
    k1 = 2.0 * np.pi * np.fft.fftfreq(grid.n_per_axis, d=grid.spacing)
    out = []
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.n_per_axis
        out.append(k1.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=32)
def _k_squared(grid: TorusGrid) -> np.ndarray:
    total = np.zeros(grid.shape)
    for k in _wavenumbers(grid):
        total = total + k ** 2
    return total


@lru_cache(maxsize=32)
def _offsets(grid: TorusGrid) -> np.ndarray:
    n = grid.n_per_axis
    j = np.arange(n)
    one_d = np.where(j <= n // 2, j, j - n) * grid.spacing
    return np.stack(np.meshgrid(*([one_d] * grid.dim), indexing="ij"))


ArrayLike = Union[np.ndarray, Sequence[float], float]


@dataclass(frozen=True)
class PeriodicField:
    """Real samples of a scalar or vector field on a torus grid

    Attributes:
        grid: The sampling grid
        values: Array of shape (components,) + grid.shape
        nonnegative: Scalar fields flagged nonnegative enforce
            min >= -1e-12 on construction
    """

    grid: TorusGrid
    values: np.ndarray = field(repr=False)
    nonnegative: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape == self.grid.shape:
            values = values[np.newaxis]
        if values.shape[1:] != self.grid.shape:
            raise DomainError(
                f"field samples of shape {values.shape} do not match grid {self.grid.shape}"
            )
        if values.shape[0] not in (1, self.grid.dim):
            raise DomainError(f"a field has 1 or {self.grid.dim} components, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise DomainError("field contains non-finite samples")
        if self.nonnegative:
            if values.shape[0] != 1:
                raise DomainError("only scalar fields can be flagged nonnegative")
            low = values.min()
            if low < -NONNEGATIVE_TOLERANCE:
                raise DomainError(f"nonnegative field has minimum {low:.3e}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def scalar(cls, grid: TorusGrid, values: ArrayLike, nonnegative: bool = False) -> "PeriodicField":
        return cls(grid, np.asarray(values, dtype=np.float64).reshape((1,) + grid.shape), nonnegative)

    @classmethod
    def vector(cls, grid: TorusGrid, components: Sequence[np.ndarray]) -> "PeriodicField":
        return cls(grid, np.stack([np.broadcast_to(c, grid.shape) for c in components]))

    @classmethod
    def constant(
        cls, grid: TorusGrid, value: Union[float, Sequence[float]], components: int = 1
    ) -> "PeriodicField":
        if np.ndim(value) == 0:
            value = [float(value)] * components
        values = np.empty((len(value),) + grid.shape)
        for i, c in enumerate(value):
            values[i] = c
        return cls(grid, values, nonnegative=len(value) == 1 and min(value) >= 0)

    @classmethod
    def from_function(
        cls, grid: TorusGrid, fn: Callable[..., np.ndarray], nonnegative: bool = False
    ) -> "PeriodicField":
        """Sample fn(x0, x1, ...) on the grid; fn may return a tuple for vectors"""
        result = fn(*grid.mesh())
        if isinstance(result, (tuple, list)):
            return cls.vector(grid, result)
        return cls.scalar(grid, np.broadcast_to(result, grid.shape), nonnegative)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.components == 1

    @property
    def data(self) -> np.ndarray:
        """Samples of a scalar field as an array of grid shape"""
        if not self.is_scalar:
            raise DomainError("data is only defined for scalar fields")
        return self.values[0]

    def with_values(self, values: np.ndarray, nonnegative: bool = None) -> "PeriodicField":
        flag = self.nonnegative if nonnegative is None else nonnegative
        return PeriodicField(self.grid, values, flag)

    def component(self, i: int) -> "PeriodicField":
        return PeriodicField(self.grid, self.values[i : i + 1])

    def integral(self) -> Union[float, np.ndarray]:
        """Trapezoidal quadrature over the torus (exact mean times volume)"""
        totals = self.values.reshape(self.components, -1).sum(axis=1) * self.grid.cell_volume
        return float(totals[0]) if self.is_scalar else totals

    def mean(self) -> Union[float, np.ndarray]:
        means = self.values.reshape(self.components, -1).mean(axis=1)
        return float(means[0]) if self.is_scalar else means

    def magnitude(self) -> "PeriodicField":
        """Pointwise Euclidean norm across components"""
        return PeriodicField(self.grid, np.sqrt(np.sum(self.values ** 2, axis=0))[np.newaxis], True)

    def lp_norm(self, p: float = 2.0) -> float:
        mag = np.sqrt(np.sum(self.values ** 2, axis=0))
        if np.isinf(p):
            return float(mag.max())
        return float((np.sum(mag ** p) * self.grid.cell_volume) ** (1.0 / p))

    def l1_norm(self) -> float:
        return self.lp_norm(1.0)

    def l2_norm(self) -> float:
        return self.lp_norm(2.0)

    def __add__(self, other: "PeriodicField") -> "PeriodicField":
        return PeriodicField(self.grid, self.values + _values_of(other))

    def __sub__(self, other: "PeriodicField") -> "PeriodicField":
        return PeriodicField(self.grid, self.values - _values_of(other))

    def __mul__(self, scale: float) -> "PeriodicField":
        return PeriodicField(self.grid, self.values * scale)

    __rmul__ = __mul__


def _values_of(other) -> np.ndarray:
    return other.values if isinstance(other, PeriodicField) else np.asarray(other)
