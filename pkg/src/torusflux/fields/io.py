"""Field dump files and CSV slices

Binary layout (little endian):
    b"TFLX"
    u32 version, u32 dim, u32 n per axis (dim times), u32 components
    float64 samples, row-major over grid indices with the component last
"""
import csv
from pathlib import Path
from typing import Union

import numpy as np

from torusflux.core.errors import DomainError
from torusflux.fields.grid import PeriodicField, TorusGrid

MAGIC = b"TFLX"
FORMAT_VERSION = 1


def dump_field(path: Union[str, Path], f: PeriodicField) -> Path:
    """Write a field in the TFLX format

    The grid period is not stored; load_field takes it as an argument.
    """
    path = Path(path)
    grid = f.grid
    header = np.array(
        [FORMAT_VERSION, grid.dim] + [grid.n_per_axis] * grid.dim + [f.components], dtype="<u4"
    )
    samples = np.ascontiguousarray(np.moveaxis(f.values, 0, -1), dtype="<f8")
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(header.tobytes())
        fh.write(samples.tobytes())
    return path


def load_field(
    path: Union[str, Path], length: float = 2.0 * np.pi, nonnegative: bool = False
) -> PeriodicField:
    """Read a TFLX file

    Raises:
        DomainError: Bad magic, unknown version or truncated payload
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DomainError(f"{path} is not a TFLX field file")
    version, dim = np.frombuffer(raw, dtype="<u4", count=2, offset=4)
    if version != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported TFLX version {version}")
    dims = np.frombuffer(raw, dtype="<u4", count=int(dim) + 1, offset=12)
    shape = tuple(int(n) for n in dims[:-1])
    components = int(dims[-1])
    offset = 12 + 4 * (int(dim) + 1)
    count = int(np.prod(shape)) * components
    if len(raw) - offset != 8 * count:
        raise DomainError(f"{path}: expected {count} samples, payload has {(len(raw) - offset) // 8}")
    samples = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape + (components,))
    grid = TorusGrid(int(dim), shape[0], length)
    return PeriodicField(grid, np.moveaxis(samples, -1, 0).copy(), nonnegative)


def write_csv_slice(path: Union[str, Path], f: PeriodicField, axis: int = 0) -> Path:
    """Write the line through the origin along one axis as CSV

    Columns are x followed by one column per component.
    """
    grid = f.grid
    if not 0 <= axis < grid.dim:
        raise DomainError(f"axis {axis} out of range for a {grid.dim}D grid")
    index = [0] * grid.dim
    index[axis] = slice(None)
    rows = f.values[(slice(None),) + tuple(index)]
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"] + [f"c{i}" for i in range(f.components)])
        for j, x in enumerate(grid.coordinates()):
            writer.writerow([repr(float(x))] + [repr(float(v)) for v in rows[:, j]])
    return path
