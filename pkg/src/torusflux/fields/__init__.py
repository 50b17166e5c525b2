"""Periodic grids, fields and the spatial operators built on them"""
from .grid import PeriodicField, TorusGrid
from .spectral import div, grad, hessian, inv_laplacian, laplacian, partial
from .filters import D_r, MollifierSpec, maximal_function, measure_lagrange_constant, mollify, singular_average
from .io import dump_field, load_field, write_csv_slice

__all__ = [
    "TorusGrid",
    "PeriodicField",
    "MollifierSpec",
    "grad",
    "div",
    "laplacian",
    "inv_laplacian",
    "hessian",
    "partial",
    "mollify",
    "maximal_function",
    "singular_average",
    "D_r",
    "measure_lagrange_constant",
    "dump_field",
    "load_field",
    "write_csv_slice",
]
