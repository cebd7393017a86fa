"""Projections and symmetrizations with respect to coordinate hyperplanes.

``axis = i`` stands for the hyperplane ``H = {x_i = 0}`` with normal
``e_i``.  Lines perpendicular to ``H`` run along ``axis``; sections parallel
to ``H`` are the slices at fixed ``x_i``.

Symmetric placement is relative to the cell boundary at ``x_i = 0``, so the
grid lattice on ``axis`` must contain 0.  A run of ``c`` cells is centred
exactly when ``c`` is even; odd runs carry their extra cell on the negative
side.  Refining by 2 along ``axis`` first makes every run even, which gives
the exact continuum symmetral of the piecewise-constant function.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .gridfn import Grid, GridFn, GridSet, slice_integrals

__all__ = [
    "project",
    "project_set",
    "steiner_set",
    "steiner_fn",
    "schwarz_fn",
    "truncate_infinite",
    "symmetric_order",
    "unit_ball_cells",
]


def _check_axis(grid: Grid, axis: int) -> None:
    if not 0 <= axis < grid.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {grid.ndim}")


def project(f: GridFn, axis: int) -> GridFn:
    """Supremum of ``f`` along every line perpendicular to the hyperplane.

    For ``n = 1`` the result is 0-dimensional and holds ``sup f``.
    """
    _check_axis(f.grid, axis)
    return GridFn(f.grid.drop_axis(axis), f.samples.max(axis=axis))


def project_set(a: GridSet, axis: int) -> GridSet:
    _check_axis(a.grid, axis)
    return GridSet(a.grid.drop_axis(axis), a.mask.any(axis=axis))


def symmetric_order(count: int) -> np.ndarray:
    """Cell offsets (relative to 0) filled in decreasing-value order.

    ``-1, 0, -2, 1, -3, 2, ...``: the first ``c`` entries form the centred
    run of length ``c`` with the tie broken towards the negative side.
    """
    r = np.arange(count)
    return np.where(r % 2 == 0, -(r // 2) - 1, r // 2)


def _symmetric_grid(grid: Grid, axis: int) -> Grid:
    grid.lattice_offset(axis)  # 0 must be a cell boundary
    lo, hi = grid.lo[axis], grid.hi[axis]
    r = max(-lo, hi)
    if -r == lo and r == hi:
        return grid
    return grid.with_axis(axis, -r, r)


def _rearrange(values: np.ndarray, grid: Grid, axis: int, fill):
    """Sort each line along ``axis`` decreasingly and place it centred."""
    out_grid = _symmetric_grid(grid, axis)
    lines = np.moveaxis(values, axis, -1)
    length = lines.shape[-1]
    srt = -np.sort(-lines, axis=-1) if lines.dtype != bool else np.sort(lines, axis=-1)[..., ::-1]
    zero_index = -out_grid.lattice_offset(axis)
    target = symmetric_order(length) + zero_index
    out = np.full(lines.shape[:-1] + (out_grid.shape[axis],), fill, dtype=values.dtype)
    out[..., target] = srt
    return out_grid, np.moveaxis(out, -1, axis)


def steiner_set(a: GridSet, axis: int) -> GridSet:
    """Replace each line of ``a`` by the centred run with the same cell count."""
    _check_axis(a.grid, axis)
    grid, mask = _rearrange(a.mask, a.grid, axis, False)
    return GridSet(grid, mask)


def steiner_fn(f: GridFn, axis: int) -> GridFn:
    """Symmetric decreasing rearrangement of ``f`` along every line.

    Each superlevel set of each line becomes a centred run with the same
    number of cells, so integrals and projections are preserved exactly.
    If the box is not symmetric about 0 along ``axis`` it is widened.
    """
    _check_axis(f.grid, axis)
    grid, vals = _rearrange(f.samples, f.grid, axis, 0.0)
    return GridFn(grid, vals)


def unit_ball_cells(grid: Grid, axis: int) -> tuple[Grid, np.ndarray]:
    """Grid widened to hold ``[-1/2, 1/2)`` on ``axis`` and the ball's mask."""
    half = Fraction(1, 2)
    if ((half - grid.lo[axis]) / grid.step[axis]).denominator != 1:
        raise ValueError("the unit interval [-1/2, 1/2) is not on the grid lattice")
    lo = min(grid.lo[axis], -half)
    hi = max(grid.hi[axis], half)
    wide = grid.with_axis(axis, lo, hi)
    j0 = wide.lattice_offset(axis, -half) * -1
    cells = int(1 / wide.step[axis])
    mask = np.zeros(wide.shape[axis], dtype=bool)
    mask[j0:j0 + cells] = True
    return wide, mask


def schwarz_fn(f: GridFn, axis: int) -> GridFn:
    """Spread each section integral uniformly over a centred unit ball in H.

    The value at ``h + alpha e_axis`` is ``d_alpha`` when ``h`` lies in the
    ball of volume 1 (for ``n = 2`` the interval ``[-1/2, 1/2)``) and 0
    otherwise.  In dimension 1 the sections are points and ``f`` is returned
    unchanged.
    """
    _check_axis(f.grid, axis)
    d = slice_integrals(f, axis)
    if np.isinf(d).any():
        raise ValueError("section integral is infinite")
    if f.grid.ndim == 1:
        return GridFn(f.grid, d)
    other = 1 - axis
    wide, ball = unit_ball_cells(f.grid, other)
    vals = np.multiply.outer(d, ball.astype(np.float64))
    return GridFn(wide, np.moveaxis(vals, 0, axis))


def truncate_infinite(f: GridFn) -> GridFn:
    """Copy of ``f`` with every ``+inf`` sample replaced by 0."""
    if f.is_finite():
        return f
    return GridFn(f.grid, np.where(np.isinf(f.samples), 0.0, f.samples))
