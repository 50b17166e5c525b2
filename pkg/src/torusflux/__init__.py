"""Torusflux: periodic-domain laboratory for a regularized compressible fluid scheme

Mollified continuity equation with density damping, pressure-forced heat
equation for the velocity, Picard coupling, and the structural monitors
used to study the limits ε, δ, μ → 0.
"""

__version__ = "0.1.0"
