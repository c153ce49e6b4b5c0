"""Lifted linear relaxation: RLT columns, linearization and bound-factor rows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import EQ, Box, Multiset, Polynomial, PolyProblem, enumerate_multisets, sub_multisets
from .lpsolve import GE as LP_GE, EQ as LP_EQ, LinearProgram, Row


class BoundMode(str, Enum):
    LOOSE = "loose"
    TIGHT = "tight"


@dataclass(frozen=True)
class RelaxationConfig:
    bound_mode: BoundMode = BoundMode.LOOSE
    include_bound_factors: bool = True


class LinearProblem(Exception):
    """Raised for degree-1 problems, which need no lifting."""


class LiftMap:
    """Column layout of the lifted space.

    Columns ``0..n-1`` are the original variables; then every multiset of
    degree ``2..degree`` follows, grouped by degree and lexicographic within.
    """

    def __init__(self, num_vars: int, degree: int):
        self.num_vars = num_vars
        self.degree = degree
        self.columns: list[Multiset] = []
        for d in range(1, max(degree, 1) + 1):
            self.columns.extend(enumerate_multisets(num_vars, d))
        self.index = {J: i for i, J in enumerate(self.columns)}

    def __len__(self) -> int:
        return len(self.columns)

    def col(self, J) -> int:
        return self.index[Multiset(J)]

    def rlt_columns(self) -> range:
        return range(self.num_vars, len(self.columns))

    def lift_point(self, x) -> np.ndarray:
        """Lifted image ``X_J = prod(x_j for j in J)`` of an original point."""
        return np.array([math.prod(x[j] for j in J) for J in self.columns])


def linearize(p: Polynomial, lift: LiftMap) -> tuple[dict[int, float], float]:
    """Replace each monomial by its column; returns ``(coefficients, constant)``."""
    coefs: dict[int, float] = {}
    const = 0.0
    for J, c in p.terms.items():
        if not J:
            const += c
            continue
        if len(J) > lift.degree:
            raise ValueError(f"monomial {J!r} exceeds lift degree {lift.degree}")
        k = lift.index[J]
        coefs[k] = coefs.get(k, 0.0) + c
    return coefs, const


def bound_factor_poly(J1, J2, box: Box) -> Polynomial:
    """Expanded ``prod_{j in J1} (x_j - l_j) * prod_{j in J2} (u_j - x_j)``."""
    p = Polynomial.constant(1.0)
    for j in Multiset(J1):
        p = p * Polynomial.from_terms([((j,), 1.0), ((), -box.lower[j])])
    for j in Multiset(J2):
        p = p * Polynomial.from_terms([((j,), -1.0), ((), box.upper[j])])
    return p


def implied_bounds(J, box: Box) -> tuple[float, float]:
    J = Multiset(J)
    return (math.prod(box.lower[j] for j in J), math.prod(box.upper[j] for j in J))


def bound_factor_rows(lift: LiftMap, box: Box, degree: int) -> list[Row]:
    """Linearized ``>= 0`` bound-factor rows of the given degree, deduplicated."""
    rows, seen = [], set()
    for M in enumerate_multisets(lift.num_vars, degree):
        for J1, J2 in sub_multisets(M):
            coefs, const = linearize(bound_factor_poly(J1, J2, box), lift)
            coefs = {k: v for k, v in coefs.items() if v != 0.0}
            if not coefs:
                continue
            key = (tuple(sorted(coefs.items())), const)
            if key in seen:
                continue
            seen.add(key)
            rows.append(Row(coefs, LP_GE, -const))
    return rows


@dataclass
class Relaxation:
    lp: LinearProgram
    lift: LiftMap
    num_constraint_rows: int


def _constraint_rows(p: PolyProblem, lift: LiftMap) -> list[Row]:
    rows = []
    for con in p.constraints:
        coefs, const = linearize(con.poly, lift)
        rows.append(Row(coefs, LP_EQ if con.sense == EQ else LP_GE, con.rhs - const))
    return rows


def build_relaxation(p: PolyProblem, box: Box, cfg: RelaxationConfig = RelaxationConfig()
                     ) -> Relaxation:
    """LP(box) for ``p`` under the configured handling of RLT column bounds."""
    if len(box) != p.num_vars:
        raise ValueError("box dimension does not match the problem")
    degree = p.degree
    if degree <= 1:
        raise LinearProblem("problem is linear; solve it directly")
    lift = LiftMap(p.num_vars, degree)
    obj, obj_const = linearize(p.objective, lift)
    c = np.zeros(len(lift))
    for k, v in obj.items():
        c[k] = v

    lo = np.full(len(lift), -math.inf)
    hi = np.full(len(lift), math.inf)
    lo[:p.num_vars] = box.lower
    hi[:p.num_vars] = box.upper
    if cfg.bound_mode == BoundMode.TIGHT:
        for k in lift.rlt_columns():
            lo[k], hi[k] = implied_bounds(lift.columns[k], box)

    rows = _constraint_rows(p, lift)
    ncon = len(rows)
    if cfg.include_bound_factors:
        rows += bound_factor_rows(lift, box, degree)
    return Relaxation(LinearProgram(len(lift), c, lo, hi, rows, obj_const), lift, ncon)


def build_linear_program(p: PolyProblem, box: Box) -> Relaxation:
    """The degree-1 problem itself as an LP over the original variables."""
    lift = LiftMap(p.num_vars, 1)
    obj, obj_const = linearize(p.objective, lift)
    c = np.zeros(p.num_vars)
    for k, v in obj.items():
        c[k] = v
    rows = _constraint_rows(p, lift)
    lp = LinearProgram(p.num_vars, c, box.lower, box.upper, rows, obj_const)
    return Relaxation(lp, lift, len(rows))
