"""Seeded test families and hypothesis-satisfying pairs.

Every generator draws from ``np.random.default_rng(seed)`` only, so equal
:class:`FamilySpec` values give bit-identical output.  Functions are sampled
at grid nodes on the box ``[-radius, radius)^n`` with ``N`` cells per axis.

Pairs for the refinement checks are constructed rather than searched for:
integer shears and per-line permutations keep every line maximum, so
projections agree exactly; a scalar value scaling equalises projection
integrals or maximal section integrals.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from .gridfn import Grid, GridFn, GridSet, integrate, sample, slice_integrals
from .means import format_p, parse_p
from .transform import project

__all__ = [
    "FAMILY_KINDS",
    "FamilySpec",
    "generate",
    "gen_log_concave",
    "gen_p_concave",
    "gen_convex_body",
    "gen_random_mask",
    "quadratic_density",
    "make_equal_projection_pair",
    "make_equal_projection_integral_pair",
    "make_equal_max_section_pair",
    "make_common_projection_boxes",
    "make_equal_projection_volume_pair",
    "shear_lines",
]

FAMILY_KINDS = (
    "gaussian-like",
    "max-affine-exponential",
    "p-power-cap",
    "box",
    "polytope-2d",
    "random-mask",
)


@dataclass(frozen=True)
class FamilySpec:
    """Recipe for one seeded instance.

    Parameters
    ----------
    kind : str
        One of :data:`FAMILY_KINDS`.
    seed : int
        Non-negative 64-bit seed.
    n : int
        Dimension, 1 or 2.
    N : int
        Cells per axis.
    radius : str or number
        Half-width of the box ``[-radius, radius)^n``; stored as a fraction
        string so the grid is exact.
    p : float, optional
        Exponent for ``p-power-cap``.
    """

    kind: str
    seed: int
    n: int = 1
    N: int = 64
    radius: str = "4"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")
        if self.n not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError("N must be an even integer >= 2")
        r = Fraction(str(self.radius))
        if r <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", str(r))
        if self.p is not None:
            object.__setattr__(self, "p", parse_p(self.p))
        if self.kind == "polytope-2d" and self.n != 2:
            raise ValueError("polytope-2d needs n = 2")

    @property
    def grid(self) -> Grid:
        return Grid.cube(Fraction(self.radius), self.N, self.n)

    def with_(self, **changes) -> "FamilySpec":
        data = asdict(self)
        data.update(changes)
        return FamilySpec(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.p is None:
            del out["p"]
        else:
            out["p"] = format_p(self.p)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FamilySpec":
        if not isinstance(data, dict):
            raise ValueError("family spec must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown family keys: {sorted(unknown)}")
        if "kind" not in data or "seed" not in data:
            raise ValueError("family spec needs 'kind' and 'seed'")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FamilySpec":
        return cls.from_dict(json.loads(text))


def _rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 1:
        return np.eye(1)
    t = rng.uniform(0, math.pi)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def _spd(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    q = _rotation(rng, n)
    return q @ np.diag(rng.uniform(lo, hi, n)) @ q.T


def _quadratic_form(matrix: np.ndarray, centre, mesh) -> np.ndarray:
    d = [x - c for x, c in zip(mesh, centre)]
    return sum(matrix[i, j] * d[i] * d[j] for i in range(len(d)) for j in range(len(d)))


def quadratic_density(grid: Grid, matrix, centre=None, amplitude: float = 1.0) -> GridFn:
    """Samples of ``amplitude * exp(-(x-c)^T A (x-c))``."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    centre = np.zeros(grid.ndim) if centre is None else np.asarray(centre, dtype=np.float64)
    return sample(grid, lambda *x: amplitude * np.exp(-_quadratic_form(matrix, centre, x)))


def gen_log_concave(spec: FamilySpec) -> GridFn:
    """Samples of ``a * exp(-u)`` with ``u`` convex.

    ``gaussian-like``: ``u`` is a random positive-definite quadratic whose
    eigenvalues lie in ``[4, 16] / radius**2``.  ``max-affine-exponential``:
    ``u`` is the maximum of 3 to 8 affine functions whose slopes positively
    span the space, so ``exp(-u)`` decays in every direction.
    """
    if spec.kind not in ("gaussian-like", "max-affine-exponential"):
        raise ValueError(f"{spec.kind!r} is not a log-concave family")
    rng = np.random.default_rng(spec.seed)
    grid = spec.grid
    r = float(Fraction(spec.radius))
    n = spec.n
    amp = rng.uniform(0.5, 2.0)
    centre = rng.uniform(-r / 4, r / 4, n)
    if spec.kind == "gaussian-like":
        a = _spd(rng, n, 4 / r**2, 16 / r**2)
        return quadratic_density(grid, a, centre, amp)
    k = int(rng.integers(3, 9))
    if n == 1:
        signs = np.ones(k)
        signs[: k // 2] = -1
        slopes = (signs * rng.uniform(4 / r, 12 / r, k)).reshape(k, 1)
    else:
        # one direction per sector keeps the slopes positively spanning
        angles = 2 * math.pi * (np.arange(k) + rng.uniform(0.1, 0.9, k)) / k
        angles += rng.uniform(0, 2 * math.pi)
        lengths = rng.uniform(4 / r, 12 / r, k)
        slopes = np.stack([lengths * np.cos(angles), lengths * np.sin(angles)], axis=1)
    offsets = rng.uniform(0.0, 1.0, k)

    def f(*x):
        u = np.full(np.shape(x[0]), -np.inf)
        for s, b in zip(slopes, offsets):
            u = np.maximum(u, sum(si * (xi - ci) for si, xi, ci in zip(s, x, centre)) + b)
        return amp * np.exp(-u)

    return sample(grid, f)


def gen_p_concave(spec: FamilySpec) -> GridFn:
    """A random ``p``-concave function (kind ``p-power-cap``).

    ``p > 0``: ``a * max(0, 1 - Q)^(1/p)``; ``p < 0``: ``a * (1 + Q)^(1/p)``;
    ``p = inf``: ``a`` times the indicator of a random convex body.  ``Q`` is
    a random positive-definite quadratic centred inside the box.  At
    ``p = 0`` use :func:`gen_log_concave`.
    """
    if spec.kind != "p-power-cap":
        raise ValueError(f"{spec.kind!r} is not a p-concave family")
    if spec.p is None:
        raise ValueError("p-power-cap needs an exponent p")
    p = spec.p
    if p == 0:
        raise ValueError("p = 0 is the log-concave case; use gen_log_concave")
    if p == -math.inf:
        raise ValueError("p = -inf is not supported by p-power-cap")
    rng = np.random.default_rng(spec.seed)
    grid = spec.grid
    r = float(Fraction(spec.radius))
    amp = rng.uniform(0.5, 2.0)
    if p == math.inf:
        kind = "polytope-2d" if spec.n == 2 and rng.random() < 0.5 else "box"
        body = gen_convex_body(spec.with_(kind=kind, p=None, seed=int(rng.integers(2**63))))
        return GridFn(grid, amp * body.mask)
    centre = rng.uniform(-r / 4, r / 4, spec.n)
    if p > 0:
        # ellipsoid semi-axes in [0.3 r, 0.6 r] keep the cap inside the box
        a = _spd(rng, spec.n, 1 / (0.6 * r) ** 2, 1 / (0.3 * r) ** 2)
        return sample(grid, lambda *x: amp * np.maximum(
            0.0, 1.0 - _quadratic_form(a, centre, x)) ** (1.0 / p))
    a = _spd(rng, spec.n, 1 / r**2, 16 / r**2)
    return sample(grid, lambda *x: amp * (1.0 + _quadratic_form(a, centre, x)) ** (1.0 / p))


def _random_box_cells(rng: np.random.Generator, cells: int) -> tuple[int, int]:
    length = int(rng.integers(max(1, cells // 8), max(2, cells // 2) + 1))
    start = int(rng.integers(0, cells - length + 1))
    return start, start + length


def gen_convex_body(spec: FamilySpec) -> GridSet:
    """Mask of a random lattice-aligned box or convex polygon.

    Polygons have 5 to 10 vertices on a random ellipse and are rasterised by
    testing cell centres against every edge half-plane, so each grid line
    meets the mask in a single run.
    """
    if spec.kind not in ("box", "polytope-2d"):
        raise ValueError(f"{spec.kind!r} is not a convex-body family")
    rng = np.random.default_rng(spec.seed)
    grid = spec.grid
    if spec.kind == "box":
        mask = np.ones((), dtype=bool)
        for axis in range(spec.n):
            a, b = _random_box_cells(rng, grid.shape[axis])
            line = np.zeros(grid.shape[axis], dtype=bool)
            line[a:b] = True
            mask = np.multiply.outer(mask, line)
        return GridSet(grid, mask)
    return GridSet(grid, _polygon_mask(grid, random_polygon(rng, float(Fraction(spec.radius)))))


def random_polygon(rng: np.random.Generator, radius: float) -> np.ndarray:
    """Counter-clockwise vertices (k x 2) of a convex polygon in the box."""
    k = int(rng.integers(5, 11))
    angles = np.sort(rng.uniform(0, 2 * math.pi, k))
    # reject near-duplicate angles so no edge degenerates
    while np.min(np.diff(np.append(angles, angles[0] + 2 * math.pi))) < 0.05:
        angles = np.sort(rng.uniform(0, 2 * math.pi, k))
    semi = rng.uniform(0.3 * radius, 0.7 * radius, 2)
    centre = rng.uniform(-0.2 * radius, 0.2 * radius, 2)
    rot = _rotation(rng, 2)
    pts = np.stack([semi[0] * np.cos(angles), semi[1] * np.sin(angles)], axis=1)
    return pts @ rot.T + centre


def _polygon_mask(grid: Grid, vertices: np.ndarray) -> np.ndarray:
    cx = grid.coords(0) + float(grid.step[0]) / 2
    cy = grid.coords(1) + float(grid.step[1]) / 2
    x, y = np.meshgrid(cx, cy, indexing="ij")
    inside = np.ones(grid.shape, dtype=bool)
    for (x0, y0), (x1, y1) in zip(vertices, np.roll(vertices, -1, axis=0)):
        inside &= (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) >= 0
    return inside


def gen_random_mask(spec: FamilySpec) -> GridSet:
    """Bernoulli mask with a random density in ``[0.2, 0.6]``; not convex."""
    if spec.kind != "random-mask":
        raise ValueError(f"{spec.kind!r} is not a random-mask family")
    rng = np.random.default_rng(spec.seed)
    density = rng.uniform(0.2, 0.6)
    mask = rng.random(spec.grid.shape) < density
    if not mask.any():
        mask.flat[int(rng.integers(mask.size))] = True
    return GridSet(spec.grid, mask)


def generate(spec: FamilySpec) -> GridFn:
    """Dispatch on ``spec.kind``; set families come back as indicators."""
    if spec.kind in ("gaussian-like", "max-affine-exponential"):
        return gen_log_concave(spec)
    if spec.kind == "p-power-cap":
        return gen_p_concave(spec)
    if spec.kind == "random-mask":
        return gen_random_mask(spec).indicator()
    return gen_convex_body(spec).indicator()


# -- hypothesis pairs -------------------------------------------------------


def _lines(f: GridFn, axis: int) -> np.ndarray:
    """Lines along ``axis`` as rows of a 2-D array (one row when n = 1)."""
    moved = np.moveaxis(f.samples, axis, -1)
    return moved.reshape(-1, f.grid.shape[axis])


def _unlines(rows: np.ndarray, f: GridFn, axis: int) -> np.ndarray:
    moved_shape = np.moveaxis(f.samples, axis, -1).shape
    return np.moveaxis(rows.reshape(moved_shape), -1, axis)


def _argmax_ranges(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per line, the allowed shifts that keep some maximiser inside."""
    length = rows.shape[1]
    peak = rows.max(axis=1, keepdims=True)
    hit = rows == peak
    first = hit.argmax(axis=1)
    last = length - 1 - hit[:, ::-1].argmax(axis=1)
    return -last, length - 1 - first


def shear_lines(f: GridFn, axis: int, shifts) -> GridFn:
    """Shift line ``i`` along ``axis`` by ``shifts[i]`` cells, zero-filled."""
    rows = _lines(f, axis)
    shifts = np.broadcast_to(np.asarray(shifts, dtype=np.int64), (rows.shape[0],))
    lo, hi = _argmax_ranges(rows)
    if ((shifts < lo) | (shifts > hi)).any():
        raise ValueError("shift pushes a line maximum out of the box; use a smaller shear")
    length = rows.shape[1]
    out = np.zeros_like(rows)
    for i, s in enumerate(shifts):
        if s >= 0:
            out[i, s:] = rows[i, : length - s]
        else:
            out[i, : length + s] = rows[i, -s:]
    return GridFn(f.grid, _unlines(out, f, axis))


def make_equal_projection_pair(
    f: GridFn,
    axis: int,
    seed: int,
    preserve_logconcave: bool = False,
    max_shift: int | None = None,
    shear: tuple[int, int] | None = None,
) -> tuple[GridFn, GridFn]:
    """Return ``(f, g)`` with ``project(g, axis) == project(f, axis)`` exactly.

    ``g`` is an integer shear of ``f`` along ``axis``: line ``i`` (in
    row-major order over the other axis) moves by ``slope * (i - c) +
    offset`` cells, ``c`` the middle line.  The shear is drawn among those
    that keep every line maximum inside the box.  Unless
    ``preserve_logconcave`` is set, each line is additionally shifted by its
    own random amount and about half of the lines are randomly permuted.

    Parameters
    ----------
    shear : (slope, offset), optional
        Force a particular shear instead of drawing one; raises
        ``ValueError`` if it would push a maximum out of the box.
    """
    if not 0 <= axis < f.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {f.ndim}")
    rng = np.random.default_rng(seed)
    rows = _lines(f, axis)
    count, length = rows.shape
    idx = np.arange(count) - count // 2
    if max_shift is None:
        max_shift = length // 4
    lo, hi = _argmax_ranges(rows)
    if shear is not None:
        slope, offset = shear
        return f, shear_lines(f, axis, slope * idx + offset)
    options = []
    for slope in ((-1, 0, 1) if count > 1 else (0,)):
        s = slope * idx
        a = max(int(np.max(lo - s)), int(np.max(-max_shift - s)))
        b = min(int(np.min(hi - s)), int(np.min(max_shift - s)))
        options.extend((slope, c) for c in range(a, b + 1))
    slope, offset = options[int(rng.integers(len(options)))]
    shifts = slope * idx + offset
    g = shear_lines(f, axis, shifts)
    if preserve_logconcave:
        return f, g
    rows = _lines(g, axis)
    lo, hi = _argmax_ranges(rows)
    extra = np.array([
        int(rng.integers(max(a, -max_shift), min(b, max_shift) + 1))
        if max(a, -max_shift) <= min(b, max_shift) else 0
        for a, b in zip(lo, hi)
    ])
    g = shear_lines(g, axis, extra)
    rows = _lines(g, axis).copy()
    for i in np.flatnonzero(rng.random(count) < 0.5):
        rows[i] = rows[i, rng.permutation(length)]
    return f, GridFn(f.grid, _unlines(rows, f, axis))


def _positive_finite(value: float, what: str) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{what} must be positive and finite, got {value}")


def make_equal_projection_integral_pair(f: GridFn, g: GridFn, axis: int) -> tuple[GridFn, GridFn]:
    """Scale ``g`` so both projections onto ``{x_axis = 0}`` integrate equally.

    In dimension 1 the projection is the supremum, so this equalises
    ``sup f`` and ``sup g``.
    """
    a = integrate(project(f, axis))
    b = integrate(project(g, axis))
    _positive_finite(a, "projection integral of f")
    _positive_finite(b, "projection integral of g")
    return f, g.scaled(a / b)


def make_equal_max_section_pair(f: GridFn, g: GridFn, axis: int) -> tuple[GridFn, GridFn]:
    """Scale ``g`` so the largest section integrals along ``axis`` agree."""
    a = float(np.max(slice_integrals(f, axis)))
    b = float(np.max(slice_integrals(g, axis)))
    _positive_finite(a, "maximal section integral of f")
    _positive_finite(b, "maximal section integral of g")
    return f, g.scaled(a / b)


def make_common_projection_boxes(grid: Grid, axis: int, seed: int) -> tuple[GridSet, GridSet]:
    """Two lattice boxes with the same shadow on ``{x_axis = 0}``."""
    rng = np.random.default_rng(seed)
    masks = []
    shared = [_random_box_cells(rng, grid.shape[i]) for i in range(grid.ndim)]
    for _ in range(2):
        mask = np.ones((), dtype=bool)
        for i in range(grid.ndim):
            a, b = _random_box_cells(rng, grid.shape[i]) if i == axis else shared[i]
            line = np.zeros(grid.shape[i], dtype=bool)
            line[a:b] = True
            mask = np.multiply.outer(mask, line)
        masks.append(GridSet(grid, mask))
    return masks[0], masks[1]


def make_equal_projection_volume_pair(a: GridSet, b: GridSet, axis: int, seed: int) -> tuple[GridSet, GridSet]:
    """Clear whole lines of the larger-shadow set until shadow volumes agree.

    Both inputs must live on the same grid; the results have shadows with
    the same number of cells but generally different shapes.
    """
    if a.grid != b.grid:
        raise ValueError("sets must share a grid")
    rng = np.random.default_rng(seed)
    shadows = [m.mask.any(axis=axis) for m in (a, b)]
    counts = [int(s.sum()) for s in shadows]
    if min(counts) == 0:
        raise ValueError("both sets must be nonempty")
    big = int(counts[1] > counts[0])
    drop = counts[big] - counts[1 - big]
    active = np.flatnonzero(shadows[big].ravel())
    cleared = rng.choice(active, size=drop, replace=False)
    target = (a, b)[big]
    moved = np.moveaxis(target.mask, axis, -1).copy()
    flat = moved.reshape(-1, moved.shape[-1])
    flat[cleared] = False
    new = GridSet(target.grid, np.moveaxis(flat.reshape(moved.shape), -1, axis))
    return (a, new) if big else (new, b)
