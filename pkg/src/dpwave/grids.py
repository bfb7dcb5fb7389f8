"""Uniform one-dimensional grids and sampled fields.

A grid covers [-P, P) with n equispaced nodes x_i = -P + i*h, h = 2P/n.
Periodic grids identify -P with +P; truncated-line grids treat everything
outside [-P, P) as zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
LINE = "truncated-line"

_KINDS = (PERIODIC, LINE)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-P, P) with n nodes; kind selects the topology."""

    kind: str
    n: int
    half_length: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"grid kind must be one of {_KINDS}, got {self.kind!r}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"need n >= 8 and n even, got n={self.n}")
        if not (self.half_length > 0):
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n

    def nodes(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered wavenumbers xi_k = pi*k/P (periodic grids)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @property
    def center_index(self) -> int:
        """Index of the node at x = 0."""
        return self.n // 2


@dataclass(frozen=True, eq=False)
class SampledField:
    """Real field sampled on a grid.

    ``truncation_warning`` is set by line-grid operators when the field does
    not decay below the boundary threshold, so the zero-tail assumption is
    suspect.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    truncation_warning: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {vals.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, **kw) -> "SampledField":
        return SampledField(self.grid, values, **kw)


def constant_field(grid: Grid, value: float) -> SampledField:
    return SampledField(grid, np.full(grid.n, float(value)))
