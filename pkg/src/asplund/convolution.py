"""p-sup-convolution, infimal convolution and Minkowski combinations.

All operations take two grid objects with the same step on each axis and a
rational weight ``lam = k/m``.  Cell ``i`` of the first input and cell ``j``
of the second combine to the cell block
``(1-lam) C_i + lam C_j``, which on the output grid of step ``h/m`` is the
``m``-wide block starting at index ``(m-k) i + k j``.  The output therefore
covers exactly ``(1-lam) box_f + lam box_g`` and is the exact continuum
operation applied to the piecewise-constant inputs.

The fast path scatters per-pair scores (see :mod:`asplund.means`) into the
block start positions with a running maximum, then dilates by the block
width.  :func:`sup_convolution_bruteforce` is the literal double loop.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .gridfn import Grid, GridFn, GridSet, Potential
from .means import (
    _combine_parts,
    _score,
    _score_part,
    _unscore,
    _weights,
    as_lambda,
    mp_mean,
    parse_p,
)

__all__ = [
    "combined_grid",
    "minkowski_combine",
    "sup_convolution",
    "sup_convolution_bruteforce",
    "inf_convolution",
]


def combined_grid(a: Grid, b: Grid, lam) -> Grid:
    """Output grid of step ``h/m`` covering ``(1-lam) box_a + lam box_b``."""
    lam = as_lambda(lam)
    if a.ndim != b.ndim:
        raise ValueError("inputs have different dimensions")
    if a.step != b.step:
        raise ValueError("inputs have mismatched steps")
    k, m = lam.numerator, lam.denominator
    lo = tuple((1 - lam) * x + lam * y for x, y in zip(a.lo, b.lo))
    hi = tuple((1 - lam) * x + lam * y for x, y in zip(a.hi, b.hi))
    shape = tuple((m - k) * (p - 1) + k * (q - 1) + m for p, q in zip(a.shape, b.shape))
    return Grid(lo, hi, shape)


def _block_view(out: np.ndarray, start, stride: int, shape) -> np.ndarray:
    idx = tuple(
        slice(s, s + stride * (n - 1) + 1, stride) for s, n in zip(start, shape)
    )
    return out[idx]


def _dilate(arr: np.ndarray, m: int, reduce, fill) -> np.ndarray:
    """``out[t] = reduce(arr[t-m+1 .. t])`` per axis; length grows by m-1."""
    for axis in range(arr.ndim):
        pad = [(0, 0)] * arr.ndim
        pad[axis] = (m - 1, m - 1)
        padded = np.pad(arr, pad, constant_values=fill)
        n_out = arr.shape[axis] + m - 1
        acc = None
        for shift in range(m):
            piece = np.take(padded, np.arange(shift, shift + n_out), axis=axis)
            acc = piece if acc is None else reduce(acc, piece)
        arr = acc
    return arr


def _scatter(a_vals, b_vals, a_active, b_active, lam: Fraction, pair, null, reduce):
    """Reduce ``pair(a_i, b_j)`` over all pairs into block-start positions.

    Iterates over the active cells of the smaller side and broadcasts over
    the other; inactive pairs are known to produce ``null``.
    """
    if a_vals.ndim == 0:
        return np.asarray(pair(a_vals, b_vals), dtype=np.float64)
    k, m = lam.numerator, lam.denominator
    shape = tuple((m - k) * (p - 1) + k * (q - 1) + 1
                  for p, q in zip(a_vals.shape, b_vals.shape))
    out = np.full(shape, null, dtype=np.float64)
    loop_over_b = np.count_nonzero(b_active) <= np.count_nonzero(a_active)
    if loop_over_b:
        for j in zip(*np.nonzero(b_active)):
            vals = pair(a_vals, b_vals[j])
            view = _block_view(out, [k * x for x in j], m - k, a_vals.shape)
            reduce(view, vals, out=view)
    else:
        for i in zip(*np.nonzero(a_active)):
            vals = pair(a_vals[i], b_vals)
            view = _block_view(out, [(m - k) * x for x in i], k, b_vals.shape)
            reduce(view, vals, out=view)
    return _dilate(out, m, reduce, null)


def minkowski_combine(a: GridSet, b: GridSet, lam) -> GridSet:
    """The cell set ``(1-lam) A + lam B`` on the refined grid."""
    lam = as_lambda(lam)
    grid = combined_grid(a.grid, b.grid, lam)
    if grid.ndim == 0:
        return GridSet(grid, a.mask & b.mask)
    k, m = lam.numerator, lam.denominator
    starts = np.zeros(tuple((m - k) * (p - 1) + k * (q - 1) + 1
                            for p, q in zip(a.grid.shape, b.grid.shape)), dtype=bool)
    for j in zip(*np.nonzero(b.mask)):
        view = _block_view(starts, [k * x for x in j], m - k, a.grid.shape)
        np.logical_or(view, a.mask, out=view)
    return GridSet(grid, _dilate(starts, m, np.logical_or, False))


def _check_p_conventions(f: GridFn, g: GridFn, p: float) -> None:
    if p != 0:
        return
    fa, ga = f.samples, g.samples
    # 0 * inf pairs are skipped by the score; reject the ambiguous input only
    # when an infinite value can only meet zeros of the other function
    if np.isinf(fa).any() and not (ga > 0).any():
        raise ValueError("p = 0: infinite values meet an identically zero function")
    if np.isinf(ga).any() and not (fa > 0).any():
        raise ValueError("p = 0: infinite values meet an identically zero function")


def sup_convolution(f: GridFn, g: GridFn, lam, p) -> GridFn:
    """``(1-lam) f *_p lam g``: the sup of ``M_p(f(x), g(y), lam)`` per cell.

    At ``p = 0`` this is the Asplund sum.  The result lives on
    :func:`combined_grid` and matches :func:`sup_convolution_bruteforce`
    bit for bit.
    """
    lam = as_lambda(lam)
    p = parse_p(p)
    grid = combined_grid(f.grid, g.grid, lam)
    _check_p_conventions(f, g, p)
    w0, w1 = _weights(lam)
    pf, pg = _score_part(f.samples, w0, p), _score_part(g.samples, w1, p)
    if pf is not None and pg is not None:
        # separable score: only one addition per pair

        def pair(a, b):
            return _combine_parts(a, b, p)

        a_vals, b_vals = pf, pg
    else:

        def pair(a, b):
            return _score(a, b, w0, w1, p)

        a_vals, b_vals = f.samples, g.samples
    scores = _scatter(a_vals, b_vals, f.samples > 0, g.samples > 0,
                      lam, pair, -math.inf, np.maximum)
    return GridFn(grid, _unscore(scores, p))


def sup_convolution_bruteforce(f: GridFn, g: GridFn, lam, p) -> GridFn:
    """Reference implementation: every pair of cells, no shortcuts."""
    lam = as_lambda(lam)
    p = parse_p(p)
    grid = combined_grid(f.grid, g.grid, lam)
    _check_p_conventions(f, g, p)
    k, m = lam.numerator, lam.denominator
    out = np.zeros(grid.shape, dtype=np.float64)
    block = list(itertools.product(range(m), repeat=grid.ndim))
    for i in np.ndindex(*f.grid.shape):
        for j in np.ndindex(*g.grid.shape):
            v = mp_mean(f.samples[i], g.samples[j], lam, p)
            for w in block:
                t = tuple((m - k) * x + k * y + z for x, y, z in zip(i, j, w))
                if v > out[t]:
                    out[t] = v
    return GridFn(grid, out)


def inf_convolution(u: Potential, v: Potential, lam) -> Potential:
    """``inf {(1-lam) u(x) + lam v(y) : (1-lam) x + lam y = t}`` per cell.

    ``+inf`` absorbs: cells where either potential is infinite never attain
    the infimum unless nothing else is available.
    """
    lam = as_lambda(lam)
    grid = combined_grid(u.grid, v.grid, lam)
    w0, w1 = _weights(lam)

    def pair(a, b):
        return -(a + b)

    with np.errstate(invalid="ignore"):
        neg = _scatter(w0 * u.values, w1 * v.values,
                       np.isfinite(u.values), np.isfinite(v.values),
                       lam, pair, -math.inf, np.maximum)
    return Potential(grid, -neg)
