"""Initial data recipes

Densities are clamped to [rho_min, rho_max] and then mollified at scale
four grid cells, so the initial density is smooth and bounded away from
zero. Velocities point along the first axis.
"""
import copy
import logging
from typing import Any, Dict

import numpy as np

from torusflux.core.config import resolve_config
from torusflux.core.errors import DomainError
from torusflux.fields.filters import MollifierSpec, mollify
from torusflux.fields.grid import PeriodicField, TorusGrid
from torusflux.laws import law_from_dict
from torusflux.scheme.params import SchemeParams, SchemeState

logger = logging.getLogger(__name__)

INITIAL_MOLLIFIER_CELLS = 4
RANDOM_BAND = 8


def grid_from_config(config: Dict[str, Any]) -> TorusGrid:
    grid = config["grid"]
    return TorusGrid(int(grid["dim"]), int(grid["n_per_axis"]), float(grid["length"]))


def _band_limited(grid: TorusGrid, rng: np.random.Generator) -> np.ndarray:
    """Random zero-mean profile with modes |k| <= 8, scaled to max |f| = 1"""
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    band = np.sqrt(grid.k_squared()) * grid.length / (2.0 * np.pi)
    coeffs[band > RANDOM_BAND] = 0.0
    coeffs.flat[0] = 0.0
    profile = np.fft.ifftn(coeffs).real
    peak = np.abs(profile).max()
    return profile / peak if peak > 0 else profile


def _wave(grid: TorusGrid, mode: float) -> np.ndarray:
    x0 = grid.mesh()[0]
    return np.sin(2.0 * np.pi * mode * x0 / grid.length)


def initial_density(grid: TorusGrid, recipe: Dict[str, Any], rng: np.random.Generator) -> np.ndarray:
    """Target density of a recipe, before clamping"""
    kind = recipe["recipe"]
    mean = float(recipe["mean"])
    amplitude = float(recipe["amplitude"])
    if kind == "constant":
        return np.full(grid.shape, mean)
    if kind == "sine":
        return mean + amplitude * _wave(grid, recipe["mode"])
    if kind == "gaussian":
        half = 0.5 * grid.length
        squared = np.zeros(grid.shape)
        for x in grid.mesh():
            squared = squared + (x - half) ** 2
        width = float(recipe["width"])
        return mean + amplitude * np.exp(-squared / (2.0 * width ** 2))
    if kind == "random":
        return mean + amplitude * _band_limited(grid, rng)
    raise DomainError(f"unknown density recipe '{kind}'")


def initial_velocity(grid: TorusGrid, recipe: Dict[str, Any], rng: np.random.Generator) -> PeriodicField:
    kind = recipe["recipe"]
    amplitude = float(recipe["amplitude"])
    first = np.zeros(grid.shape)
    if kind == "zero":
        pass
    elif kind == "constant":
        first = np.full(grid.shape, amplitude)
    elif kind == "sine":
        first = amplitude * _wave(grid, recipe["mode"])
    elif kind == "random":
        first = amplitude * _band_limited(grid, rng)
    else:
        raise DomainError(f"unknown velocity recipe '{kind}'")
    components = [first] + [np.zeros(grid.shape) for _ in range(grid.dim - 1)]
    return PeriodicField.vector(grid, components)


def build_initial_state(config: Dict[str, Any]) -> SchemeState:
    """Assemble the state at t = 0 from a run configuration

    Args:
        config: Run configuration; derived defaults are filled if missing

    Returns:
        SchemeState at t = 0, step 0

    Raises:
        DomainError: Invalid grid, law or scheme parameters
        ResolutionError: Mollification scale below two cells
    """
    config = resolve_config(copy.deepcopy(config), warn=False)
    grid = grid_from_config(config)
    rng = np.random.default_rng(int(config.get("seed", 0)))
    initial = config["initial"]

    rho_recipe = initial["rho"]
    if not 0 < rho_recipe["rho_min"] <= rho_recipe["rho_max"]:
        raise DomainError("initial density bounds need 0 < rho_min <= rho_max")
    target = initial_density(grid, rho_recipe, rng)
    rho = PeriodicField.scalar(
        grid, np.clip(target, rho_recipe["rho_min"], rho_recipe["rho_max"]), nonnegative=True
    )
    u = initial_velocity(grid, initial["u"], rng)
    if initial.get("mollify", True):
        spec = MollifierSpec(INITIAL_MOLLIFIER_CELLS * grid.spacing)
        rho = mollify(rho, spec)

    law = law_from_dict(config["law"])
    params = SchemeParams.from_config(config["scheme"])
    logger.debug("initial state: mass %.6g, min density %.6g", rho.integral(), rho.data.min())
    return SchemeState(t=0.0, rho=rho, u=u, params=params, law=law)
