"""Tabulated non-oscillatory integrands and their spline interpolants.

The smooth part f(x) of the integrand is supplied as a table: a common
strictly increasing grid and one value column per integrand.  Interpolation
is a natural cubic spline, optionally in log-abscissa and/or log-ordinate
space.  Tables carry a grid-identity token so that caches built against one
grid survive in-place value updates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

_grid_token_counter = itertools.count()


@dataclass(frozen=True)
class IntegrandTable:
    """Grid, value columns and interpolation-space flags for f(x)."""

    x_grid: np.ndarray       # strictly increasing, positive, length >= 4
    values: np.ndarray       # shape (len(x_grid), n_integrands)
    log_x: bool = False
    log_y: bool = False
    grid_token: int = field(default_factory=lambda: next(_grid_token_counter))

    def __post_init__(self):
        x = np.ascontiguousarray(self.x_grid, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if x.ndim != 1 or len(x) < 4:
            raise ValueError("x_grid must be a 1-d array with at least 4 points")
        if v.ndim != 2:
            raise ValueError(
                "values must be 2-d (n_points, n_integrands); the second "
                "dimension is required even for a single integrand"
            )
        if v.shape[0] != len(x):
            raise ValueError(
                f"values has {v.shape[0]} rows but the grid has {len(x)} points"
            )
        if np.any(np.diff(x) <= 0):
            raise ValueError("x_grid must be strictly increasing")
        if x[0] <= 0:
            raise ValueError("x_grid must be positive")
        if self.log_y:
            bad = np.argwhere(v <= 0)
            if bad.size:
                i, j = bad[0]
                raise ValueError(
                    f"log_y requires positive values; values[{i}, {j}] = {v[i, j]}"
                )
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "values", v)

    @property
    def n_integrands(self) -> int:
        return self.values.shape[1]

    def with_values(self, new_values) -> "IntegrandTable":
        """Same grid and flags, new value columns.  Preserves the grid token."""
        new_values = np.asarray(new_values, dtype=float)
        if new_values.shape != self.values.shape:
            raise ValueError(
                f"shape mismatch: expected {self.values.shape}, got {new_values.shape}"
            )
        return IntegrandTable(
            self.x_grid, new_values, self.log_x, self.log_y, grid_token=self.grid_token
        )


class Interpolant:
    """Natural cubic spline through a table, per integrand column.

    Fitted in transformed space (ln x and/or ln f per the table's flags);
    evaluation undoes the transforms.  Immutable after construction.
    """

    def __init__(self, table: IntegrandTable):
        self.table = table
        t = np.log(table.x_grid) if table.log_x else table.x_grid
        y = np.log(table.values) if table.log_y else table.values
        self._spline = CubicSpline(t, y, axis=0, bc_type="natural", extrapolate=False)
        self.x_min = table.x_grid[0]
        self.x_max = table.x_grid[-1]

    @property
    def n_integrands(self) -> int:
        return self.table.n_integrands

    def __call__(self, x):
        """Interpolated values, shape (..., n_integrands).  No extrapolation."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_min) or np.any(x > self.x_max):
            raise ValueError(
                f"x outside tabulated range [{self.x_min}, {self.x_max}]"
            )
        t = np.log(x) if self.table.log_x else x
        y = self._spline(t)
        return np.exp(y) if self.table.log_y else y


def build(table: IntegrandTable) -> Interpolant:
    return Interpolant(table)
