"""Core modules for torusflux"""
from .errors import (
    CFLViolation,
    ConfigError,
    DomainError,
    ExponentError,
    OutputExistsError,
    PicardNonConvergence,
    QuadratureError,
    ResolutionError,
    SplitConstructionError,
    TorusfluxError,
)

__all__ = [
    "TorusfluxError",
    "DomainError",
    "ResolutionError",
    "QuadratureError",
    "SplitConstructionError",
    "CFLViolation",
    "PicardNonConvergence",
    "ExponentError",
    "ConfigError",
    "OutputExistsError",
]
