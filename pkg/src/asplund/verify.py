"""Executable inequality checks with explicit tolerance accounting.

Every check compares a left-hand side computed from the exact
sup-convolution of the piecewise-constant inputs against a right-hand side
built from integrals of the inputs.  For piecewise-constant functions the
inequalities hold exactly, so any negative margin comes from floating-point
rounding or from the caller's discretisation of a continuous function;
:func:`tol_policy` is the one place that quantifies it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .convolution import minkowski_combine, sup_convolution
from .gridfn import GridFn, align, integrate, refine, slice_integrals
from .means import as_lambda, dual_exponent, format_p, mp_mean, parse_p
from .transform import (
    project,
    schwarz_fn,
    steiner_fn,
    steiner_set,
    truncate_infinite,
)

__all__ = [
    "HOLDS",
    "HOLDS_WITHIN_TOL",
    "VIOLATED",
    "HYPOTHESES",
    "Report",
    "ScanReport",
    "classify",
    "tol_policy",
    "total_variation",
    "check_pl",
    "check_bbl",
    "check_linear_refinement",
    "check_symmetrization_props",
    "lambda_scan",
    "persistent_violation",
    "reports_to_csv",
    "CSV_FIELDS",
]

HOLDS = "holds"
HOLDS_WITHIN_TOL = "holds_within_tol"
VIOLATED = "violated"

HYPOTHESES = (
    "common_projection",
    "equal_projection_integral",
    "equal_max_section",
    "equal_sup_1d",
)

CSV_FIELDS = ("check_name", "lhs", "rhs", "margin", "tol", "verdict")

#: default constant of the linear-in-h tolerance
TOL_CONSTANT = 4.0
#: relative tolerance for exactly aligned indicator pairs
ALIGNED_RTOL = 1e-9
#: relative residual allowed on a constructed hypothesis
HYPOTHESIS_RTOL = 1e-12
#: relative rounding slack for pointwise comparisons
POINTWISE_RTOL = 1e-12


def classify(margin: float, tol: float) -> str:
    if margin >= 0:
        return HOLDS
    if margin >= -tol:
        return HOLDS_WITHIN_TOL
    return VIOLATED


@dataclass(frozen=True)
class Report:
    """Outcome of one inequality check."""

    check_name: str
    lhs: float
    rhs: float
    margin: float
    tol: float
    verdict: str
    hypothesis_diagnostics: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def build(cls, name: str, lhs: float, rhs: float, tol: float,
              diagnostics: Mapping[str, float] | None = None,
              margin: float | None = None) -> "Report":
        if margin is None:
            margin = 0.0 if lhs == rhs else lhs - rhs
        return cls(name, float(lhs), float(rhs), float(margin), float(tol),
                   classify(margin, tol), dict(diagnostics or {}))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hypothesis_diagnostics"] = dict(self.hypothesis_diagnostics)
        return out

    def csv_row(self) -> list:
        return [self.check_name, repr(self.lhs), repr(self.rhs),
                repr(self.margin), repr(self.tol), self.verdict]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


@dataclass(frozen=True)
class ScanReport:
    """Integral of the sup-convolution along ``lambda = j / (K + 1)``.

    ``second_differences[j]`` is ``v[j-1] - 2 v[j] + v[j+1]`` with ``v[0] =
    int f`` and ``v[K+1] = int g``; non-positive entries mean the sampled
    curve is concave.
    """

    lambdas: tuple[Fraction, ...]
    values: tuple[float, ...]
    chord_margins: tuple[float, ...]
    second_differences: tuple[float, ...]
    endpoints: tuple[float, float]
    tol: float

    def __post_init__(self):
        n = len(self.lambdas)
        if not (len(self.values) == len(self.chord_margins) == len(self.second_differences) == n):
            raise ValueError("scan lists must share their length")
        if any(not 0 < a < 1 for a in self.lambdas) or any(
                a >= b for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("lambda grid must be strictly increasing in (0, 1)")

    def is_concave(self, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return all(d <= tol for d in self.second_differences)

    def chords_hold(self, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return all(c >= -tol for c in self.chord_margins)

    def to_dict(self) -> dict:
        return {
            "lambdas": [str(a) for a in self.lambdas],
            "values": list(self.values),
            "chord_margins": list(self.chord_margins),
            "second_differences": list(self.second_differences),
            "endpoints": list(self.endpoints),
            "tol": self.tol,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("lambda", "value", "chord_margin", "second_difference"))
        for row in zip(self.lambdas, self.values, self.chord_margins, self.second_differences):
            writer.writerow([str(row[0])] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- tolerance ---------------------------------------------------------------


def total_variation(f: GridFn) -> float:
    """Sum of jump sizes times face areas, including the jump to 0 outside.

    Equals the perimeter for an indicator and approximates ``int |grad f|``
    for a sampled smooth function.
    """
    s = f.samples
    if not np.isfinite(s).all():
        return math.inf
    total = 0.0
    for axis in range(f.ndim):
        face = f.grid.cell_volume / float(f.grid.step[axis])
        pad = [(0, 0)] * f.ndim
        pad[axis] = (1, 1)
        jumps = np.abs(np.diff(np.pad(s, pad), axis=axis))
        total += float(jumps.sum()) * face
    return total


def _is_indicator(f: GridFn) -> bool:
    s = f.samples
    return bool(((s == 0) | (s == 1)).all())


def tol_policy(h: float, f: GridFn, g: GridFn, C: float = TOL_CONSTANT) -> float:
    """Tolerance for integral comparisons between ``f`` and ``g``.

    ``C * h * (TV(f) + TV(g))`` with :func:`total_variation` as the
    perimeter and slope scale, so the tolerance is linear in the step ``h``.
    Pairs of {0, 1}-valued functions are exact on aligned grids and get
    ``1e-9 * max(int f, int g)``; two zero functions get 0.
    """
    if h < 0:
        raise ValueError("step must be non-negative")
    if not f.samples.any() and not g.samples.any():
        return 0.0
    if _is_indicator(f) and _is_indicator(g):
        return ALIGNED_RTOL * max(integrate(f), integrate(g))
    return C * h * (total_variation(f) + total_variation(g))


def _step(f: GridFn) -> float:
    return max((float(s) for s in f.grid.step), default=0.0)


def _tol(f: GridFn, g: GridFn, tol, tol_scale: float) -> float:
    if tol is not None:
        return float(tol)
    return tol_scale * tol_policy(max(_step(f), _step(g)), f, g)


def _finite_integrals(f: GridFn, g: GridFn) -> tuple[float, float]:
    a, b = integrate(f), integrate(g)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrals of f and g must be finite")
    return a, b


def _check_p_range(p: float, n: int) -> None:
    if p < -1.0 / n and not math.isclose(p, -1.0 / n, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"exponent {format_p(p)} lies below -1/{n}")


# -- integral inequalities ---------------------------------------------------


def check_pl(f: GridFn, g: GridFn, lam, tol=None, tol_scale: float = 1.0) -> Report:
    """Asplund-sum integral against the weighted geometric mean of integrals."""
    return _check_mean(f, g, lam, 0.0, "pl", tol, tol_scale)


def check_bbl(f: GridFn, g: GridFn, lam, p, tol=None, tol_scale: float = 1.0) -> Report:
    """``int supconv_p`` against ``M_q(int f, int g)``, ``q = p / (n p + 1)``."""
    p = parse_p(p)
    _check_p_range(p, f.ndim)
    return _check_mean(f, g, lam, p, "bbl", tol, tol_scale)


def _check_mean(f, g, lam, p, name, tol, tol_scale) -> Report:
    lam = as_lambda(lam)
    a, b = _finite_integrals(f, g)
    q = dual_exponent(p, f.ndim)
    lhs = integrate(sup_convolution(f, g, lam, p))
    rhs = mp_mean(a, b, lam, q)
    return Report.build(name, lhs, rhs, _tol(f, g, tol, tol_scale),
                        {"p": p, "q": q, "int_f": a, "int_g": b})


def _rel_residual(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def _hypothesis_residual(f: GridFn, g: GridFn, hypothesis: str, axis: int) -> float:
    if hypothesis == "common_projection":
        pf, pg = align(project(f, axis), project(g, axis))
        a, b = pf.samples, pg.samples
        scale = max(float(np.max(a, initial=0)), float(np.max(b, initial=0)))
        both_inf = np.isinf(a) & np.isinf(b)
        with np.errstate(invalid="ignore"):
            diff = np.where(both_inf, 0.0, np.abs(a - b))
        dev = float(np.max(diff, initial=0.0))
        if math.isinf(dev) or math.isinf(scale):
            return math.inf if dev > 0 else 0.0
        return 0.0 if scale == 0 else dev / scale
    if hypothesis in ("equal_projection_integral", "equal_sup_1d"):
        return _rel_residual(integrate(project(f, axis)), integrate(project(g, axis)))
    if hypothesis == "equal_max_section":
        return _rel_residual(float(np.max(slice_integrals(f, axis))),
                             float(np.max(slice_integrals(g, axis))))
    raise ValueError(f"unknown hypothesis {hypothesis!r}; expected one of {HYPOTHESES}")


def _check_hypothesis_p(hypothesis: str, p: float, n: int) -> None:
    if hypothesis == "equal_sup_1d" and n != 1:
        raise ValueError("equal_sup_1d needs one-dimensional functions")
    if hypothesis in ("equal_projection_integral", "equal_max_section"):
        if p > 0:
            raise ValueError(f"{hypothesis} is only established for -1/n <= p <= 0")
        _check_p_range(p, n)


def check_linear_refinement(f: GridFn, g: GridFn, lam, p, hypothesis: str, axis: int = 0,
                            tol=None, tol_scale: float = 1.0) -> Report:
    """``int supconv_p`` against the arithmetic mean ``(1-lam) int f + lam int g``.

    The named hypothesis is measured first and recorded as a relative
    residual; a residual above ``1e-12`` raises ``ValueError``.  The
    diagnostics also carry the mean ``M_q`` of the integrals and the
    strengthening ``rhs - M_q >= 0`` over the plain inequality.  Grid
    functions are always measurable, so the side conditions on measurability
    are recorded as satisfied.
    """
    lam = as_lambda(lam)
    p = parse_p(p)
    if hypothesis not in HYPOTHESES:
        raise ValueError(f"unknown hypothesis {hypothesis!r}; expected one of {HYPOTHESES}")
    if not 0 <= axis < f.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {f.ndim}")
    _check_hypothesis_p(hypothesis, p, f.ndim)
    residual = _hypothesis_residual(f, g, hypothesis, axis)
    if residual > HYPOTHESIS_RTOL:
        raise ValueError(f"hypothesis {hypothesis} fails: relative residual {residual:.3e}")
    a, b = _finite_integrals(f, g)
    lhs = integrate(sup_convolution(f, g, lam, p))
    rhs = float((1 - lam) * Fraction(a) + lam * Fraction(b))
    diagnostics = {
        "hypothesis_residual": residual,
        "hypothesis_rtol": HYPOTHESIS_RTOL,
        "measurability": 0.0,
        "int_f": a,
        "int_g": b,
    }
    if p >= -1.0 / f.ndim or math.isclose(p, -1.0 / f.ndim, abs_tol=1e-12):
        q = dual_exponent(p, f.ndim)
        rhs_dual = mp_mean(a, b, lam, q)
        strengthening = rhs - rhs_dual
        if strengthening < -POINTWISE_RTOL * max(rhs, rhs_dual):
            raise ArithmeticError("arithmetic mean fell below the dual-exponent mean")
        diagnostics.update(q=q, rhs_dual=rhs_dual, strengthening=strengthening)
    return Report.build(f"refinement:{hypothesis}", lhs, rhs,
                        _tol(f, g, tol, tol_scale), diagnostics)


# -- pointwise properties ----------------------------------------------------


def _pointwise(name: str, left, right, tol=None, **diagnostics) -> Report:
    """Report ``min(left - right)`` over the common hull grid."""
    left, right = align(left, right)
    a, b = left.samples, right.samples
    with np.errstate(invalid="ignore"):
        diff = np.where(a == b, 0.0, a - b)
    k = int(np.argmin(diff)) if diff.size else 0
    margin = float(diff.ravel()[k]) if diff.size else 0.0
    if tol is None:
        finite = np.concatenate([a[np.isfinite(a)], b[np.isfinite(b)]])
        tol = POINTWISE_RTOL * float(np.max(finite, initial=0.0))
    return Report.build(name, a.ravel()[k], b.ravel()[k], tol, diagnostics, margin=margin)


def check_symmetrization_props(f: GridFn, g: GridFn, lam, p, axis: int = 0) -> list[Report]:
    """Pointwise inequalities between symmetrals and sup-convolutions.

    Always reported:

    * ``projection``: ``proj(f *_p g) >= proj f *_p proj g``.
    * ``steiner_set``: ``S(A) + S(B)`` is contained in ``S(A + B)`` for the
      supports, with tolerance 0.

    For ``p <= 0`` (including ``-inf``):

    * ``steiner``: ``S(f *_p g) >= S(f0) *_p S(g0)``, with ``f0`` the input
      with infinite values set to 0.

    For ``-1/n <= p <= 0``:

    * ``schwarz``: ``T(f *_p g) >= T(f) *_q T(g)``, ``q = p / (n p + 1)``,
      ``T`` the section-integral symmetrisation.

    Steiner symmetrals are taken after halving the step along ``axis``, which
    makes them the exact symmetrals of the piecewise-constant functions.
    """
    lam = as_lambda(lam)
    p = parse_p(p)
    n = f.ndim
    reports = []
    conv = sup_convolution(f, g, lam, p)

    reports.append(_pointwise(
        "props:projection",
        project(conv, axis),
        sup_convolution(project(f, axis), project(g, axis), lam, p),
        p=p))

    sa = steiner_set(refine(f.support(), 2, axis), axis)
    sb = steiner_set(refine(g.support(), 2, axis), axis)
    big = steiner_set(refine(minkowski_combine(f.support(), g.support(), lam), 2, axis), axis)
    reports.append(_pointwise(
        "props:steiner_set",
        big.indicator(),
        minkowski_combine(sa, sb, lam).indicator(),
        tol=0.0))

    if p <= 0:
        fs = steiner_fn(refine(truncate_infinite(f), 2, axis), axis)
        gs = steiner_fn(refine(truncate_infinite(g), 2, axis), axis)
        reports.append(_pointwise(
            "props:steiner",
            steiner_fn(refine(conv, 2, axis), axis),
            sup_convolution(fs, gs, lam, p),
            p=p))

    if p == 0 or (p < 0 and p >= -1.0 / n - 1e-12):
        q = dual_exponent(p, n)
        reports.append(_pointwise(
            "props:schwarz",
            schwarz_fn(conv, axis),
            sup_convolution(schwarz_fn(f, axis), schwarz_fn(g, axis), lam, q),
            p=p, q=q))
    return reports


# -- lambda scans ------------------------------------------------------------


def lambda_scan(f: GridFn, g: GridFn, p, K: int, tol=None, tol_scale: float = 1.0) -> ScanReport:
    """Sample ``lambda -> int supconv_p(f, g, lambda)`` at ``j / (K + 1)``."""
    if int(K) != K or K < 3:
        raise ValueError("K must be an integer >= 3")
    p = parse_p(p)
    v0, v1 = _finite_integrals(f, g)
    lambdas = tuple(Fraction(j, K + 1) for j in range(1, K + 1))
    values = [integrate(sup_convolution(f, g, lam, p)) for lam in lambdas]
    chords = [v - float((1 - lam) * Fraction(v0) + lam * Fraction(v1))
              for lam, v in zip(lambdas, values)]
    seq = [v0, *values, v1]
    second = [seq[j - 1] - 2 * seq[j] + seq[j + 1] for j in range(1, K + 1)]
    return ScanReport(lambdas, tuple(values), tuple(chords), tuple(second),
                      (v0, v1), _tol(f, g, tol, tol_scale))


def persistent_violation(coarse: Report, fine: Report) -> bool:
    """True when a check is violated at ``h`` and ``h/2`` without improving."""
    return (coarse.verdict == VIOLATED and fine.verdict == VIOLATED
            and abs(fine.margin) >= abs(coarse.margin))
