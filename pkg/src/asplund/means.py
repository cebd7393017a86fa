"""Extended non-negative arithmetic and two-point p-th means.

Values live in ``[0, +inf]`` and are plain floats.  Exponents ``p`` are floats
as well, with ``math.inf`` / ``-math.inf`` selecting max / min.  Mixing
weights ``lambda`` are exact rationals (:class:`fractions.Fraction`) so that
grid operations downstream can align nodes exactly.

The mean is evaluated as ``unscore(score(a, b))`` where ``score`` is a
monotone reparametrisation of the mean.  The sup-convolution reduces over
scores and applies ``unscore`` once per output node; because ``unscore`` is
non-decreasing this gives the same bits as reducing over means.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "Real",
    "as_lambda",
    "as_ext",
    "parse_p",
    "format_p",
    "mp_mean",
    "dual_exponent",
    "NEAR_ZERO_P",
]

Real = Union[int, float, Fraction]

#: finite exponents with ``|p|`` below this use the log-domain expansion
NEAR_ZERO_P = 1e-12

# tolerance for recognising the boundary exponent p = -1/n in floating point
_BOUNDARY_ATOL = 1e-12


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    # shortest decimal repr: 0.1 -> 1/10 rather than the binary expansion
    return Fraction(repr(float(x)))


def as_lambda(lam) -> Fraction:
    """Return ``lam`` as a reduced fraction ``k/m`` with ``0 < k < m``.

    Accepts fractions, ``"k/m"`` strings, ints and floats (converted through
    their shortest decimal representation).
    """
    try:
        out = _to_fraction(lam)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"invalid lambda {lam!r}") from exc
    if not 0 < out < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    return out


def as_ext(x) -> float:
    """Validate an extended non-negative value and return it as a float."""
    v = float(x)
    if math.isnan(v) or v < 0:
        raise ValueError(f"expected a value in [0, inf], got {x!r}")
    return v


def parse_p(p) -> float:
    """Parse an exponent: a number, ``"inf"``, ``"-inf"`` or ``"k/m"``."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        try:
            return float(Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"invalid exponent {p!r}") from exc
    v = float(p)
    if math.isnan(v):
        raise ValueError("exponent must not be NaN")
    return v


def format_p(p: float) -> str:
    if p == math.inf:
        return "inf"
    if p == -math.inf:
        return "-inf"
    return repr(float(p))


def _weights(lam) -> tuple[float, float]:
    lam = _to_fraction(lam)
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return float(1 - lam), float(lam)


def _score(a, b, w0: float, w1: float, p: float):
    """Monotone surrogate of ``M_p(a, b)``; ``-inf`` encodes a zero mean."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    valid = (a > 0) & (b > 0)
    with np.errstate(all="ignore"):
        if p == math.inf:
            s = np.maximum(a, b)
        elif p == -math.inf:
            s = np.minimum(a, b)
        elif p == 0:
            s = w0 * np.log(a) + w1 * np.log(b)
        elif abs(p) < NEAR_ZERO_P:
            la, lb = np.log(a), np.log(b)
            s = w0 * la + w1 * lb + (0.5 * p * w0 * w1) * (la - lb) ** 2
            if p > 0:
                s = np.where(np.isinf(la) | np.isinf(lb), np.inf, s)
            else:
                # an infinite argument contributes 0 to the p-sum
                a_inf, b_inf = np.isinf(la), np.isinf(lb)
                s = np.where(a_inf & ~b_inf, np.log(w1) / p + lb, s)
                s = np.where(b_inf & ~a_inf, np.log(w0) / p + la, s)
                s = np.where(a_inf & b_inf, np.inf, s)
        elif p > 0:
            s = w0 * np.power(a, p) + w1 * np.power(b, p)
        else:
            s = -(w0 * np.power(a, p) + w1 * np.power(b, p))
        return np.where(valid, s, -np.inf)


def _score_part(a, w: float, p: float):
    """Per-argument term of a separable score, or ``None``.

    For finite inputs and finite ``p`` outside the near-zero band the score
    is ``part(a, w0) + part(b, w1)`` (negated for ``p < 0``), evaluated with
    exactly the same floating-point operations as :func:`_score`.  Zero
    arguments map to ``-inf`` (``+inf`` before negation when ``p < 0``).
    """
    a = np.asarray(a, dtype=np.float64)
    if not np.isfinite(p) or (p != 0 and abs(p) < NEAR_ZERO_P) or np.isinf(a).any():
        return None
    with np.errstate(all="ignore"):
        if p == 0:
            return w * np.log(a)
        part = w * np.power(a, p)
        if p > 0:
            return np.where(a > 0, part, -np.inf)
        return part


def _combine_parts(pa, pb, p: float):
    if p < 0:
        return -(pa + pb)
    return pa + pb


def _unscore(s, p: float):
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(all="ignore"):
        if p == math.inf or p == -math.inf:
            out = s
        elif abs(p) < NEAR_ZERO_P:
            out = np.exp(s)
        elif p > 0:
            out = np.power(s, 1.0 / p)
        else:
            out = np.power(-s, 1.0 / p)
        return np.where(s == -np.inf, 0.0, out)


def _null_score() -> float:
    return -math.inf


def mp_mean(a, b, lam, p) -> float:
    """Weighted two-point p-th mean ``M_p(a, b, lam)`` on ``[0, inf]``.

    ``M_p = ((1 - lam) a**p + lam b**p) ** (1/p)``, the weighted geometric
    mean at ``p = 0``, ``max`` at ``+inf`` and ``min`` at ``-inf``.  The mean
    is 0 whenever ``a * b == 0``.  Infinite arguments are resolved by
    continuity: for ``p >= 0`` the mean is infinite, for finite ``p < 0`` an
    infinite argument contributes 0 to the power sum.

    >>> mp_mean(4, 9, "1/2", 0)
    6.0
    >>> mp_mean(2, 4, "1/4", 1)
    2.5
    """
    a, b = as_ext(a), as_ext(b)
    p = parse_p(p)
    w0, w1 = _weights(lam)
    return float(_unscore(_score(a, b, w0, w1, p), p))


def dual_exponent(p, n: int) -> float:
    """Return ``p / (n p + 1)``, the mean index on the BBL right-hand side.

    Maps ``[-1/n, inf]`` onto ``[-inf, 1/n]``; the boundary ``p = -1/n`` maps
    to ``-inf`` and ``p = inf`` to ``1/n``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    p = parse_p(p)
    if p == math.inf:
        return 1.0 / n
    if p == 0:
        return 0.0
    denom = n * p + 1
    if abs(denom) <= _BOUNDARY_ATOL:
        return -math.inf
    if denom < 0:
        raise ValueError(f"exponent {p} lies below -1/{n}")
    return p / denom
