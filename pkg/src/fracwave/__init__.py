"""fracwave: spectral solver for multi-term time-fractional diffusion-wave
equations with multi-point time-nonlocal conditions.

The solver expands the spatial part in eigenfunctions of a catalog operator,
reduces the problem to one fractional ODE per mode, solves each mode through
multivariate Mittag-Leffler series, and verifies every produced solution with
independent fractional-calculus quadrature oracles.
"""

from .backend import active as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
