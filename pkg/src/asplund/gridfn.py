"""Grid-sampled non-negative functions and sets in dimension 0, 1 or 2.

A grid has ``N`` cells per axis; node ``j`` sits at ``lo + j * step`` and
its sample is the (constant) value of the function on the cell
``[lo + j*step, lo + (j+1)*step)``.  Under this reading every grid function
is a genuine piecewise-constant function on the box, integrals are exact
Riemann sums, and everything outside the box is zero.

Box corners are stored as :class:`~fractions.Fraction` so that node
coordinates, lattice alignment and refinement are exact.  Dimension 0
appears as the projection or slice of a 1-D function: one node, unit
"volume", and the integral is the single sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .means import _to_fraction

__all__ = [
    "Grid",
    "GridFn",
    "GridSet",
    "Potential",
    "box_set",
    "sample",
    "integrate",
    "slice_fn",
    "slice_integral",
    "slice_integrals",
    "superlevel_measure_1d",
    "layer_cake_integrate",
    "sup_value",
    "refine",
    "embed",
    "hull_grid",
    "align",
    "dump_gridfn",
    "load_gridfn",
    "format_gridfn",
    "parse_gridfn",
]


@dataclass(frozen=True)
class Grid:
    """Uniform axis-aligned grid on the box ``prod [lo_i, hi_i)``."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(_to_fraction(v) for v in self.lo)
        hi = tuple(_to_fraction(v) for v in self.hi)
        shape = tuple(int(v) for v in self.shape)
        if not (len(lo) == len(hi) == len(shape)):
            raise ValueError("lo, hi and shape must have the same length")
        if len(shape) > 2:
            raise ValueError("only dimensions 0, 1 and 2 are supported")
        for a, b, c in zip(lo, hi, shape):
            if not a < b:
                raise ValueError(f"empty box side [{a}, {b})")
            if c < 1:
                raise ValueError("every axis needs at least one cell")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def regular(cls, lo: Sequence, hi: Sequence, shape: Sequence[int]) -> "Grid":
        return cls(tuple(lo), tuple(hi), tuple(shape))

    @classmethod
    def cube(cls, radius, cells: int, n: int) -> "Grid":
        """The grid on ``[-radius, radius)^n`` with ``cells`` cells per axis."""
        r = _to_fraction(radius)
        return cls((-r,) * n, (r,) * n, (cells,) * n)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def step(self) -> tuple[Fraction, ...]:
        return tuple((b - a) / c for a, b, c in zip(self.lo, self.hi, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(math.prod(self.step, start=Fraction(1)))

    def coords(self, axis: int) -> np.ndarray:
        """Node coordinates along ``axis`` as floats."""
        h = self.step[axis]
        return np.array([float(self.lo[axis] + j * h) for j in range(self.shape[axis])])

    def node(self, axis: int, j: int) -> Fraction:
        return self.lo[axis] + j * self.step[axis]

    def index_of(self, axis: int, coord) -> int:
        """Index of the node at ``coord`` on ``axis``; raises if off-grid."""
        q = (_to_fraction(coord) - self.lo[axis]) / self.step[axis]
        if q.denominator != 1 or not 0 <= q < self.shape[axis]:
            raise ValueError(f"coordinate {coord} is not a node on axis {axis}")
        return int(q)

    def lattice_offset(self, axis: int, origin=0) -> int:
        """Signed number of cells from ``origin`` to ``lo`` on ``axis``."""
        q = (self.lo[axis] - _to_fraction(origin)) / self.step[axis]
        if q.denominator != 1:
            raise ValueError(f"{origin} is not a cell boundary on axis {axis}")
        return int(q)

    def drop_axis(self, axis: int) -> "Grid":
        keep = [i for i in range(self.ndim) if i != axis]
        return Grid(
            tuple(self.lo[i] for i in keep),
            tuple(self.hi[i] for i in keep),
            tuple(self.shape[i] for i in keep),
        )

    def with_axis(self, axis: int, lo, hi) -> "Grid":
        """Same lattice on ``axis`` but covering ``[lo, hi)``."""
        lo, hi = _to_fraction(lo), _to_fraction(hi)
        h = self.step[axis]
        cells = (hi - lo) / h
        if cells.denominator != 1 or ((lo - self.lo[axis]) / h).denominator != 1:
            raise ValueError("new extent is not on the grid lattice")
        new_lo, new_hi, new_shape = list(self.lo), list(self.hi), list(self.shape)
        new_lo[axis], new_hi[axis], new_shape[axis] = lo, hi, int(cells)
        return Grid(tuple(new_lo), tuple(new_hi), tuple(new_shape))

    def refined(self, m: int, axis: int | None = None) -> "Grid":
        axes = range(self.ndim) if axis is None else [axis]
        shape = list(self.shape)
        for i in axes:
            shape[i] *= m
        return Grid(self.lo, self.hi, tuple(shape))

    def header(self) -> str:
        def join(vals):
            return ",".join(str(v) for v in vals)

        return (
            f"gridfn v1 n={self.ndim} lo={join(self.lo)} "
            f"hi={join(self.hi)} N={join(self.shape)}"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class GridFn:
    """A function ``R^n -> [0, inf]`` sampled on a :class:`Grid`."""

    __slots__ = ("grid", "samples")

    def __init__(self, grid: Grid, samples):
        arr = np.array(samples, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"samples have shape {arr.shape}, grid needs {grid.shape}")
        if np.isnan(arr).any() or (arr < 0).any():
            raise ValueError("samples must lie in [0, inf]")
        self.grid = grid
        self.samples = _readonly(arr)

    @property
    def ndim(self) -> int:
        return self.grid.ndim

    def scaled(self, c: float) -> "GridFn":
        if not c >= 0 or math.isinf(c):
            raise ValueError("scale factor must be finite and non-negative")
        return GridFn(self.grid, self.samples * c)

    def support(self) -> "GridSet":
        return GridSet(self.grid, self.samples > 0)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.samples).all())

    def __eq__(self, other):
        if not isinstance(other, GridFn):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.samples, other.samples)

    def __repr__(self):
        return f"GridFn({self.grid.header()!r})"


class GridSet:
    """A union of grid cells, stored as a boolean mask."""

    __slots__ = ("grid", "mask")

    def __init__(self, grid: Grid, mask):
        arr = np.array(mask, dtype=bool)
        if arr.shape != grid.shape:
            raise ValueError(f"mask has shape {arr.shape}, grid needs {grid.shape}")
        self.grid = grid
        self.mask = _readonly(arr)

    def indicator(self) -> GridFn:
        return GridFn(self.grid, self.mask.astype(np.float64))

    def volume(self) -> float:
        return int(self.mask.sum()) * self.grid.cell_volume

    def __eq__(self, other):
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return f"GridSet({self.grid.header()!r}, cells={int(self.mask.sum())})"


class Potential:
    """Grid samples with values in ``R u {+inf}`` (e.g. ``-log f``)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"values have shape {arr.shape}, grid needs {grid.shape}")
        if np.isnan(arr).any() or (arr == -np.inf).any():
            raise ValueError("potential values must lie in (-inf, +inf]")
        self.grid = grid
        self.values = _readonly(arr)

    @classmethod
    def from_density(cls, f: GridFn) -> "Potential":
        with np.errstate(divide="ignore"):
            u = -np.log(f.samples)
        if (u == -np.inf).any():
            raise ValueError("density takes the value +inf")
        return cls(f.grid, u)

    def to_density(self) -> GridFn:
        return GridFn(self.grid, np.exp(-self.values))


def box_set(grid: Grid, bounds: Sequence[tuple]) -> GridSet:
    """Cells of ``grid`` contained in the closed box ``prod [a_i, b_i]``."""
    if len(bounds) != grid.ndim:
        raise ValueError("one (lo, hi) pair per axis required")
    masks = []
    for axis, (a, b) in enumerate(bounds):
        a, b = _to_fraction(a), _to_fraction(b)
        h = grid.step[axis]
        masks.append(
            np.array(
                [a <= grid.node(axis, j) and grid.node(axis, j) + h <= b
                 for j in range(grid.shape[axis])],
                dtype=bool,
            )
        )
    if grid.ndim == 0:
        return GridSet(grid, np.array(True))
    mask = masks[0]
    for m in masks[1:]:
        mask = np.logical_and.outer(mask, m)
    return GridSet(grid, mask)


def sample(grid: Grid, func: Callable[..., np.ndarray]) -> GridFn:
    """Evaluate ``func(*coords)`` on the grid nodes (``ij`` meshgrid)."""
    axes = [grid.coords(i) for i in range(grid.ndim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return GridFn(grid, np.broadcast_to(func(*mesh), grid.shape))


def integrate(f: GridFn) -> float:
    """Riemann sum ``sum(samples) * cell_volume``; ``inf`` if any sample is."""
    s = f.samples
    if np.isinf(s).any():
        return math.inf
    return float(np.sum(s)) * f.grid.cell_volume


def slice_fn(f: GridFn, axis: int, alpha) -> GridFn:
    """Restriction of ``f`` to the hyperplane ``x_axis = alpha`` (a node)."""
    _check_axis(f.grid, axis)
    j = f.grid.index_of(axis, alpha)
    return GridFn(f.grid.drop_axis(axis), np.take(f.samples, j, axis=axis))


def slice_integral(f: GridFn, axis: int, alpha) -> float:
    return integrate(slice_fn(f, axis, alpha))


def slice_integrals(f: GridFn, axis: int) -> np.ndarray:
    """All section integrals ``d_alpha`` along ``axis`` at once."""
    _check_axis(f.grid, axis)
    other = f.grid.drop_axis(axis).cell_volume
    s = np.moveaxis(f.samples, axis, 0).reshape(f.grid.shape[axis], -1)
    with np.errstate(invalid="ignore"):
        d = s.sum(axis=1) * other
    return np.where(np.isinf(s).any(axis=1), np.inf, d)


def superlevel_measure_1d(f: GridFn, axis: int, h_index, t: float) -> float:
    """1-D measure of ``{f >= t}`` on the line through H-node ``h_index``.

    ``t = 0`` counts every positive sample (the support of the line).
    """
    if t < 0:
        raise ValueError("level must be non-negative")
    line = _line(f, axis, h_index)
    hits = line > 0 if t == 0 else line >= t
    return int(hits.sum()) * float(f.grid.step[axis])


def layer_cake_integrate(f: GridFn, axis: int) -> float:
    """Integrate line by line as ``sum_k (v_k - v_{k-1}) |{f >= v_k}|``."""
    _check_axis(f.grid, axis)
    if not f.is_finite():
        raise ValueError("layer-cake integration needs a finite function")
    h = float(f.grid.step[axis])
    lines = np.moveaxis(f.samples, axis, -1).reshape(-1, f.grid.shape[axis])
    total = 0.0
    for line in lines:
        levels = np.unique(line[line > 0])
        if levels.size == 0:
            continue
        # sorted line gives |{f >= v}| by binary search
        srt = np.sort(line)
        counts = srt.size - np.searchsorted(srt, levels, side="left")
        jumps = np.diff(levels, prepend=0.0)
        total += float(np.sum(jumps * counts)) * h
    return total * f.grid.drop_axis(axis).cell_volume


def sup_value(f: GridFn) -> float:
    return float(f.samples.max()) if f.samples.size else 0.0


def refine(f, m: int, axis: int | None = None):
    """Split every cell into ``m`` pieces per axis, copying its value.

    Works for :class:`GridFn`, :class:`GridSet` and :class:`Potential`; the
    represented piecewise-constant function is unchanged.
    """
    if int(m) != m or m < 1:
        raise ValueError("refinement factor must be a positive integer")
    m = int(m)
    arr = _payload(f)
    axes = range(f.grid.ndim) if axis is None else [axis]
    for i in axes:
        arr = np.repeat(arr, m, axis=i)
    return type(f)(f.grid.refined(m, axis), arr)


def hull_grid(a: Grid, b: Grid) -> Grid:
    """Smallest grid on the common lattice containing both boxes."""
    if a.ndim != b.ndim or a.step != b.step:
        raise ValueError("grids have mismatched steps")
    lo = tuple(min(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(max(x, y) for x, y in zip(a.hi, b.hi))
    shape = []
    for i, h in enumerate(a.step):
        for v in (a.lo[i] - b.lo[i], a.hi[i] - lo[i]):
            if (v / h).denominator != 1:
                raise ValueError("grids are not on a common lattice")
        shape.append(int((hi[i] - lo[i]) / h))
    return Grid(lo, hi, tuple(shape))


def embed(f, grid: Grid):
    """Zero-pad ``f`` into the larger ``grid`` on the same lattice."""
    if grid == f.grid:
        return f
    if hull_grid(f.grid, grid) != grid:
        raise ValueError("target grid does not contain the source box")
    fill = False if isinstance(f, GridSet) else (np.inf if isinstance(f, Potential) else 0.0)
    out = np.full(grid.shape, fill, dtype=_payload(f).dtype)
    idx = tuple(
        slice(int((f.grid.lo[i] - grid.lo[i]) / grid.step[i]),
              int((f.grid.lo[i] - grid.lo[i]) / grid.step[i]) + f.grid.shape[i])
        for i in range(grid.ndim)
    )
    out[idx] = _payload(f)
    return type(f)(grid, out)


def align(*items):
    """Embed all arguments into their common hull grid."""
    g = items[0].grid
    for it in items[1:]:
        g = hull_grid(g, it.grid)
    return tuple(embed(it, g) for it in items)


def _payload(f) -> np.ndarray:
    if isinstance(f, GridFn):
        return f.samples
    if isinstance(f, GridSet):
        return f.mask
    if isinstance(f, Potential):
        return f.values
    raise TypeError(f"unsupported grid object {type(f).__name__}")


def _check_axis(grid: Grid, axis: int) -> None:
    if not 0 <= axis < grid.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {grid.ndim}")


def _line(f: GridFn, axis: int, h_index) -> np.ndarray:
    _check_axis(f.grid, axis)
    moved = np.moveaxis(f.samples, axis, -1)
    if isinstance(h_index, (int, np.integer)):
        h_index = (int(h_index),)
    return moved[tuple(h_index)]


# -- text format -----------------------------------------------------------


def _format_value(v: float) -> str:
    return "inf" if v == math.inf else repr(float(v))


def format_gridfn(f: GridFn) -> str:
    lines = [f.grid.header()]
    lines.extend(_format_value(v) for v in f.samples.ravel(order="C"))
    return "\n".join(lines) + "\n"


def parse_gridfn(text: str) -> GridFn:
    rows = text.splitlines()
    if not rows:
        raise ValueError("empty gridfn file")
    head = rows[0].split()
    if head[:2] != ["gridfn", "v1"]:
        raise ValueError("missing 'gridfn v1' header")
    fields = {}
    for tok in head[2:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ValueError(f"malformed header field {tok!r}")
        fields[key] = val
    try:
        n = int(fields["n"])

        def split(key):
            return [s for s in fields.get(key, "").split(",") if s]

        lo = [Fraction(s) for s in split("lo")]
        hi = [Fraction(s) for s in split("hi")]
        shape = [int(s) for s in split("N")]
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed gridfn header: {rows[0]!r}") from exc
    if not len(lo) == len(hi) == len(shape) == n:
        raise ValueError("header dimension does not match lo/hi/N")
    grid = Grid(tuple(lo), tuple(hi), tuple(shape))
    body = [r.strip() for r in rows[1:] if r.strip()]
    if len(body) != math.prod(shape):
        raise ValueError(f"expected {math.prod(shape)} samples, found {len(body)}")
    vals = np.array([float(v) for v in body], dtype=np.float64).reshape(grid.shape)
    return GridFn(grid, vals)


def dump_gridfn(f: GridFn, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_gridfn(f))


def load_gridfn(path) -> GridFn:
    with open(path, encoding="ascii") as fh:
        return parse_gridfn(fh.read())
