"""Domain reduction: interval propagation (FBBT) and root OBBT."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import EQ, Box, Multiset, Polynomial, PolyProblem
from .lpsolve import LpInfeasible, lp_min_column
from .rlt import LinearProblem, RelaxationConfig, build_linear_program, build_relaxation

INF = math.inf
EMPTY_TOL = 1e-9
MAX_PASSES = 10
MIN_IMPROVEMENT = 1e-6
OBBT_TOL = 1e-9


class Infeasible(Exception):
    """Domain reduction proved the box contains no feasible point."""


def _mul(a: float, b: float) -> float:
    # 0 * inf is 0 for interval endpoints
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        p = [_mul(self.lo, other.lo), _mul(self.lo, other.hi),
             _mul(self.hi, other.lo), _mul(self.hi, other.hi)]
        return Interval(min(p), max(p))

    def scale(self, c: float) -> "Interval":
        if c >= 0:
            return Interval(_mul(c, self.lo), _mul(c, self.hi))
        return Interval(_mul(c, self.hi), _mul(c, self.lo))

    def __pow__(self, k: int) -> "Interval":
        if k == 0:
            return Interval(1.0, 1.0)
        a, b = self.lo ** k, self.hi ** k
        if k % 2 == 1:
            return Interval(a, b)
        if self.lo <= 0.0 <= self.hi:
            return Interval(0.0, max(a, b))
        return Interval(min(a, b), max(a, b))

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def divide(self, other: "Interval") -> "Interval | None":
        """Quotient, or None when ``other`` contains zero."""
        if other.contains(0.0):
            return None
        return self * Interval(1.0 / other.hi, 1.0 / other.lo)

    def root(self, k: int) -> "Interval | None":
        """Values ``x`` with ``x**k`` in this interval (``x >= 0`` branch for even k)."""
        if k == 1:
            return self
        if k % 2 == 1:
            return Interval(_signed_root(self.lo, k), _signed_root(self.hi, k))
        if self.hi < 0.0:
            return None
        return Interval(max(self.lo, 0.0) ** (1.0 / k), self.hi ** (1.0 / k))


def _signed_root(v: float, k: int) -> float:
    if math.isinf(v):
        return v
    return math.copysign(abs(v) ** (1.0 / k), v)


def _var_intervals(box: Box) -> list[Interval]:
    return [Interval(a, b) for a, b in zip(box.lower, box.upper)]


def monomial_interval(J: Multiset, xs: list[Interval]) -> Interval:
    out = Interval(1.0, 1.0)
    for j in J.support():
        out = out * (xs[j] ** J.count(j))
    return out


def interval_eval(p: Polynomial, box: Box) -> Interval:
    xs = _var_intervals(box)
    total = Interval(0.0, 0.0)
    for J, c in p.terms.items():
        total = total + monomial_interval(J, xs).scale(c)
    return total


def _propagate(poly: Polynomial, target: Interval, xs: list[Interval]) -> bool:
    """One forward/backward sweep over a constraint; narrows ``xs`` in place."""
    terms = list(poly.terms.items())
    term_iv = [monomial_interval(J, xs).scale(c) for J, c in terms]
    total = Interval(math.fsum(t.lo for t in term_iv), math.fsum(t.hi for t in term_iv))
    if total.hi < target.lo - EMPTY_TOL * (1 + abs(target.lo)) or \
            total.lo > target.hi + EMPTY_TOL * (1 + abs(target.hi)):
        raise Infeasible("constraint interval is disjoint from its requirement")

    changed = False
    for t, (J, c) in enumerate(terms):
        if not J:
            continue
        rest_lo = math.fsum(term_iv[s].lo for s in range(len(terms)) if s != t)
        rest_hi = math.fsum(term_iv[s].hi for s in range(len(terms)) if s != t)
        if target.lo - rest_hi > target.hi - rest_lo:
            continue
        need = Interval(target.lo - rest_hi, target.hi - rest_lo)
        for j in J.support():
            k = J.count(j)
            # term = c * x_j**k * other
            other = _without_var(J, j, xs)
            powered = need.divide(other.scale(c))
            if powered is None:
                continue
            cand = powered.root(k)
            if cand is None:
                raise Infeasible(f"no nonnegative root for variable {j}")
            lo = max(xs[j].lo, cand.lo)
            hi = min(xs[j].hi, cand.hi)
            if lo > hi:
                if lo - hi > EMPTY_TOL * (1 + abs(lo)):
                    raise Infeasible(f"empty domain for variable {j}")
                lo = hi = 0.5 * (lo + hi)
            if lo > xs[j].lo or hi < xs[j].hi:
                xs[j] = Interval(lo, hi)
                changed = True
    return changed


def _without_var(J: Multiset, j: int, xs: list[Interval]) -> Interval:
    out = Interval(1.0, 1.0)
    for i in J.support():
        if i != j:
            out = out * (xs[i] ** J.count(i))
    return out


def fbbt_pass(p: PolyProblem, box: Box) -> tuple[Box, bool]:
    """Propagate every constraint until bounds move less than 1e-6 or 10 passes.

    Returns the reduced box and whether any bound moved.  Raises
    :class:`Infeasible` when some variable's domain empties.
    """
    xs = _var_intervals(box)
    improved = False
    for _ in range(MAX_PASSES):
        before = [(v.lo, v.hi) for v in xs]
        for con in p.constraints:
            target = Interval(con.rhs, con.rhs) if con.sense == EQ else Interval(con.rhs, INF)
            _propagate(con.poly, target, xs)
        delta = max(max(v.lo - a, b - v.hi) for v, (a, b) in zip(xs, before)) if xs else 0.0
        if delta > 0:
            improved = True
        if delta < MIN_IMPROVEMENT:
            break
    if not improved:
        return box, False
    return Box(tuple(v.lo for v in xs), tuple(v.hi for v in xs)), True


def obbt_root(p: PolyProblem, box: Box, cfg: RelaxationConfig = RelaxationConfig()) -> Box:
    """Min and max of each original variable over the root relaxation.

    Bounds only ever shrink.  Raises :class:`Infeasible` when the relaxation
    has no feasible point.
    """
    try:
        lp = build_relaxation(p, box, cfg).lp
    except LinearProblem:
        lp = build_linear_program(p, box).lp
    lo, hi = list(box.lower), list(box.upper)
    try:
        for j in range(p.num_vars):
            # moves within LP round-off are ignored; the old bound is always valid
            vmin = lp_min_column(lp, j)
            if vmin > lo[j] + OBBT_TOL * (1 + abs(lo[j])):
                lo[j] = vmin
            vmax = lp_min_column(lp, j, maximize=True)
            if vmax < hi[j] - OBBT_TOL * (1 + abs(hi[j])):
                hi[j] = vmax
            if lo[j] > hi[j]:
                lo[j] = hi[j] = 0.5 * (lo[j] + hi[j])
    except LpInfeasible:
        raise Infeasible("root relaxation is infeasible") from None
    return Box(tuple(lo), tuple(hi))
