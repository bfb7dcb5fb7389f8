"""Traveling waves of the Degasperis-Procesi equation in nonlocal form.

Solves the steady profile equation phi*(2c - phi)/3 = L(phi^2) + a with
L = (1 - d_xx)^{-1}, continues solutions toward the peaked limit, and
provides numerical checks for decay rates, profile bounds, reflection
symmetry, and the traveling behaviour of symmetric initial data.
"""

from .grids import Grid, SampledField, LINE, PERIODIC
from .operators import (
    apply_L,
    apply_L_line,
    apply_L_spectral,
    convolve_quadrature,
    kernel_eval,
    symbol_eval,
)
from .steady import (
    SolveConfig,
    WaveProfile,
    bounds_check,
    asymptotic_constant,
    continue_in_height,
    peakon,
    residual,
    solve_newton,
    solve_petviashvili,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "SampledField",
    "LINE",
    "PERIODIC",
    "apply_L",
    "apply_L_line",
    "apply_L_spectral",
    "convolve_quadrature",
    "kernel_eval",
    "symbol_eval",
    "SolveConfig",
    "WaveProfile",
    "bounds_check",
    "asymptotic_constant",
    "continue_in_height",
    "peakon",
    "residual",
    "solve_newton",
    "solve_petviashvili",
    "__version__",
]
