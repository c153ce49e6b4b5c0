"""Explicit dual certificate for the implied lower bound on ``X_N``.

Subsets of the variables are bitmasks (bit ``i`` is variable ``i``, zero
based); the reference variable is the last one, ``n - 1``.  ``bfc(T)`` is the
bound factor in which the variables of ``T`` enter as ``(u_i - x_i)`` and the
rest as ``(x_j - l_j)``.

The restricted proof LP minimizes ``X_N`` over the rows ``bfc(T) >= 0`` for
every ``T`` plus the lower bounds ``X_R >= prod(l_R)`` for every proper
nonempty ``R``.  The certificate gives nonnegative duals for the rows, plus
reduced costs on the bounds of ``X_{n}`` and ``X_{N minus n}``, whose dual
objective equals ``prod(l)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import Box, PolyProblem
from .lpsolve import GE, LinearProgram, Row, lp_min_column
from .rlt import RelaxationConfig, build_relaxation, implied_bounds


class DegenerateBox(ValueError):
    pass


def mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def members(m: int) -> list[int]:
    return [i for i in range(m.bit_length()) if m >> i & 1]


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _check_strict(lo, hi, idx: Iterable[int]):
    for i in idx:
        if not hi[i] > lo[i]:
            raise DegenerateBox(f"variable {i} has u == l; the certificate needs u > l")


def _bounds(box: Box, exact: bool):
    if exact:
        return [Fraction(v) for v in box.lower], [Fraction(v) for v in box.upper]
    return list(box.lower), list(box.upper)


def _total(values):
    values = list(values)
    if any(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(values)


def _d_value(T: int, lo, hi):
    n = len(lo)
    if T >> (n - 1) & 1 or _popcount(T) >= n - 1:
        return 0 * lo[0]
    if T == 0:
        return 1 + 0 * lo[0]
    idx = members(T)
    _check_strict(lo, hi, idx)
    return math.prod(lo[i] / (hi[i] - lo[i]) for i in idx)


def _bfc_dual(T: int, lo, hi):
    free = ((1 << len(lo)) - 1) & ~T
    terms = []
    sub = free
    while True:
        terms.append(_d_value(T | sub, lo, hi))
        if sub == 0:
            break
        sub = (sub - 1) & free
    return _total(terms)


def _bfc_coeff(T: int, R: int, lo, hi):
    full = (1 << len(lo)) - 1
    sign = -1 if _popcount(T & R) % 2 else 1
    prod = math.prod(hi[i] for i in members(T & ~R))
    prod *= math.prod(-lo[j] for j in members(full & ~T & ~R))
    return sign * prod


def d_value(T: int, box: Box, exact: bool = False):
    return _d_value(T, *_bounds(box, exact))


def bfc_dual(T: int, box: Box, exact: bool = False):
    """Sum of ``d_value`` over all supersets of ``T``."""
    return _bfc_dual(T, *_bounds(box, exact))


def bfc_coeff(T: int, R: int, box: Box, exact: bool = False):
    """Coefficient of ``X_R`` in ``bfc(T)``; ``R = 0`` gives the constant term."""
    return _bfc_coeff(T, R, *_bounds(box, exact))


def bfc_rhs(T: int, box: Box, exact: bool = False):
    return -bfc_coeff(T, 0, box, exact)


@dataclass
class DualCertificate:
    """Dual solution; values are floats, or Fractions when built exactly."""

    n: int
    box: Box
    rc_single: float
    rc_allbutone: float
    bfc_duals: dict[int, float]
    objective: float

    def dual(self, T: int):
        return self.bfc_duals.get(T, 0.0)

    def reduced_cost(self, R: int):
        ref = 1 << (self.n - 1)
        full = (1 << self.n) - 1
        if R == ref:
            return self.rc_single
        if R == full & ~ref:
            return self.rc_allbutone
        return 0.0


def build_certificate(box: Box, exact: bool = False) -> DualCertificate:
    """Dual certificate with the last variable as reference.

    ``exact=True`` carries out the construction in rational arithmetic on the
    (exactly converted) box bounds.
    """
    n = len(box)
    if n < 2:
        raise ValueError("the certificate needs at least two variables")
    lo, hi = _bounds(box, exact)
    _check_strict(lo, hi, range(n))
    rc_single = math.prod(lo[:-1])
    rc_allbutone = lo[-1]
    duals = {}
    for T in range(1 << n):
        v = _bfc_dual(T, lo, hi)
        if v:
            duals[T] = v
    obj = _total([v * -_bfc_coeff(T, 0, lo, hi) for T, v in duals.items()]
                 + [rc_single * lo[-1], rc_allbutone * math.prod(lo[:-1])])
    return DualCertificate(n, box, rc_single, rc_allbutone, duals, obj)


@dataclass
class CertificateReport:
    max_residual: float
    residuals: dict[int, float]
    objective: float
    expected_objective: float
    min_dual: float
    objective_error: float = field(init=False)

    def __post_init__(self):
        self.objective_error = abs(self.objective - self.expected_objective)

    def ok(self, tol: float = 1e-9) -> bool:
        return (self.max_residual <= tol and self.min_dual >= 0.0
                and self.objective_error <= tol * max(1.0, abs(self.expected_objective)))


def _scaled_ints(values) -> tuple[list[int], int]:
    """Integers ``v * scale`` for dyadic/rational ``values`` over one common ``scale``."""
    fr = [Fraction(v) for v in values]
    scale = math.lcm(*(f.denominator for f in fr)) if fr else 1
    return [f.numerator * (scale // f.denominator) for f in fr], scale


def verify_certificate(c: DualCertificate) -> CertificateReport:
    """Check every dual constraint and recompute the dual objective.

    Evaluation is exact: the box and the certificate's values are converted
    to rationals, so a residual measures the certificate alone and not
    floating-point cancellation.  Internally everything is scaled to integers.
    """
    n = c.n
    full = (1 << n) - 1
    ref = 1 << (n - 1)
    bounds, bscale = _scaled_ints(list(c.box.lower) + list(c.box.upper))
    lo, hi = bounds[:n], bounds[n:]
    Ts = sorted(c.bfc_duals)
    rc_masks = (ref, full & ~ref)
    nums, dscale = _scaled_ints([c.bfc_duals[T] for T in Ts]
                                + [c.reduced_cost(R) for R in rc_masks])
    duals, rc = nums[:len(Ts)], dict(zip(rc_masks, nums[len(Ts):]))

    residuals = {}
    for R in range(1, full + 1):
        # the coefficient of X_R carries bscale ** |N minus R|, the duals dscale
        width = n - _popcount(R)
        s = sum(_bfc_coeff(T, R, lo, hi) * d for T, d in zip(Ts, duals))
        s += rc.get(R, 0) * bscale ** width
        target = dscale * bscale ** width if R == full else 0
        residuals[R] = float(Fraction(abs(s - target), dscale * bscale ** width))

    objective = Fraction(sum(-_bfc_coeff(T, 0, lo, hi) * d for T, d in zip(Ts, duals)),
                         dscale * bscale ** n)
    for R, v in rc.items():
        objective += Fraction(v * math.prod(lo[i] for i in members(R)),
                              dscale * bscale ** _popcount(R))
    expected = Fraction(math.prod(lo), bscale ** n)
    return CertificateReport(max(residuals.values()), residuals, float(objective),
                             float(expected), min(nums) / dscale)


def proof_lp(box: Box, lower_bounds: bool = True) -> LinearProgram:
    """Rows ``bfc(T) >= 0`` over distinct-variable monomials; column ``R - 1`` is ``X_R``.

    The objective is ``X_N``.  With ``lower_bounds`` every ``X_R`` with
    ``R`` a proper subset is bounded below by ``prod(l_R)``.
    """
    n = len(box)
    full = (1 << n) - 1
    rows = []
    for T in range(full + 1):
        coefs = {R - 1: bfc_coeff(T, R, box) for R in range(1, full + 1)}
        rows.append(Row({k: v for k, v in coefs.items() if v}, GE, bfc_rhs(T, box)))
    lo = np.full(full, -math.inf)
    if lower_bounds:
        for R in range(1, full):
            lo[R - 1] = math.prod(box.lower[i] for i in members(R))
    c = np.zeros(full)
    c[full - 1] = 1.0
    return LinearProgram(full, c, lo, np.full(full, math.inf), rows)


def proof_bounds(box: Box, lower_bounds: bool = True) -> tuple[float, float]:
    """``(min X_N, max X_N)`` over :func:`proof_lp`."""
    lp = proof_lp(box, lower_bounds)
    col = lp.num_cols - 1
    return lp_min_column(lp, col), lp_min_column(lp, col, maximize=True)


def redundancy_table(box: Box) -> list[dict]:
    """LP range of every ``X_R`` over the bound-factor rows alone, against its product bounds."""
    lp = proof_lp(box, lower_bounds=False)
    table = []
    for R in range(1, 1 << len(box)):
        idx = members(R)
        lo = math.prod(box.lower[i] for i in idx)
        hi = math.prod(box.upper[i] for i in idx)
        table.append(_redundancy_row(idx, lp_min_column(lp, R - 1),
                                     lp_min_column(lp, R - 1, maximize=True), lo, hi))
    return table


def _redundancy_row(J, vmin, vmax, lo, hi) -> dict:
    tol = 1e-7 * (1 + abs(hi))
    return {"monomial": list(J), "lp_min": vmin, "lp_max": vmax,
            "product_lower": lo, "product_upper": hi,
            "lower_implied": vmin >= lo - tol, "upper_implied": vmax <= hi + tol}


def check_redundancy(p: PolyProblem, box: Box) -> list[dict]:
    """Range of every RLT column over the loose relaxation of ``p`` on ``box``."""
    rel = build_relaxation(p, box, RelaxationConfig())
    table = []
    for k in rel.lift.rlt_columns():
        J = rel.lift.columns[k]
        lo, hi = implied_bounds(J, box)
        table.append(_redundancy_row(J, lp_min_column(rel.lp, k),
                                     lp_min_column(rel.lp, k, maximize=True), lo, hi))
    return table
