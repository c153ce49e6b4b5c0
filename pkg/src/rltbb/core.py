"""Multisets, sparse polynomials, boxes and polynomial problems."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

GE = "ge"
EQ = "eq"


class Multiset(tuple):
    """Sorted bag of variable indices.

    The monomial ``x0 * x1**2`` is ``Multiset((0, 1, 1))``; the empty
    multiset stands for the constant monomial.  Being a tuple, a multiset is
    hashable and compares lexicographically on its entries.
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable[int] = ()):
        return super().__new__(cls, sorted(int(j) for j in entries))

    @property
    def cardinality(self) -> int:
        return len(self)

    def multiplicity(self, j: int) -> int:
        return self.count(j)

    def support(self) -> tuple[int, ...]:
        """Distinct indices (the union of the multiset)."""
        return tuple(sorted(set(self)))

    def __add__(self, other):
        return multiset_sum(self, other)

    def __repr__(self) -> str:
        return "{" + ",".join(map(str, self)) + "}"


EMPTY = Multiset()


def multiset_sum(a: Sequence[int], b: Sequence[int]) -> Multiset:
    # tuple.__add__ concatenates; the constructor re-sorts
    return Multiset(tuple.__add__(tuple(a), tuple(b)))


def enumerate_multisets(num_vars: int, degree: int) -> list[Multiset]:
    """All multisets over ``range(num_vars)`` of the given cardinality, lexicographic."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    return [
        Multiset(c)
        for c in itertools.combinations_with_replacement(range(num_vars), degree)
    ]


def sub_multisets(m: Sequence[int]) -> list[tuple[Multiset, Multiset]]:
    """Every ordered split ``(J1, J2)`` with ``J1 + J2 == m``.

    ``J1`` ranges over the distinct sub-multisets of ``m``, so the number of
    splits is the product of ``multiplicity + 1`` over the support.
    """
    m = Multiset(m)
    counts = [(j, m.count(j)) for j in m.support()]
    splits = []
    for picks in itertools.product(*(range(c + 1) for _, c in counts)):
        left, right = [], []
        for (j, c), k in zip(counts, picks):
            left.extend([j] * k)
            right.extend([j] * (c - k))
        splits.append((Multiset(left), Multiset(right)))
    return splits


@dataclass(frozen=True)
class Polynomial:
    """Sparse polynomial keyed by monomial multiset.

    Build through :meth:`from_terms`, which merges repeated monomials and
    drops zero coefficients.
    """

    terms: Mapping[Multiset, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[Iterable[int], float]]) -> "Polynomial":
        acc: dict[Multiset, float] = {}
        for vars_, coef in terms:
            key = Multiset(vars_)
            acc[key] = acc.get(key, 0.0) + float(coef)
        return cls({k: v for k, v in acc.items() if v != 0.0})

    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls.from_terms([((), value)])

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    @property
    def constant_term(self) -> float:
        return self.terms.get(EMPTY, 0.0)

    def variables(self) -> set[int]:
        return {j for k in self.terms for j in k}

    def monomials(self) -> list[Multiset]:
        """Nonconstant monomials, sorted by degree then lexicographically."""
        return sorted((k for k in self.terms if k), key=lambda k: (len(k), k))

    def evaluate(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        acc: dict[Multiset, float] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = ka + kb
                acc[key] = acc.get(key, 0.0) + ca * cb
        return Polynomial({k: v for k, v in acc.items() if v != 0.0})

    def __neg__(self) -> "Polynomial":
        return Polynomial({k: -v for k, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        parts = [f"{c:+g}*x{k!r}" if k else f"{c:+g}" for k, c in
                 sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))]
        return "Polynomial(" + " ".join(parts) + ")"


def evaluate(p: Polynomial, point: Sequence[float]) -> float:
    return math.fsum(c * math.prod(point[j] for j in k) for k, c in p.terms.items())


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("lower and upper must have the same length")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if not a >= 0.0:
                raise ValueError(f"negative lower bound for variable {j}: {a}")
            if not b < math.inf:
                raise ValueError(f"upper bound of variable {j} must be finite")
            if a > b:
                raise ValueError(f"lower bound exceeds upper bound for variable {j}: {a} > {b}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __len__(self) -> int:
        return len(self.lower)

    def width(self, j: int) -> float:
        return self.upper[j] - self.lower[j]

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return all(a - tol <= x <= b + tol for a, b, x in zip(self.lower, self.upper, point))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        return all(a - tol <= c and d <= b + tol for a, b, c, d in
                   zip(self.lower, self.upper, other.lower, other.upper))

    def replace(self, j: int, lower: float | None = None, upper: float | None = None) -> "Box":
        lo, hi = list(self.lower), list(self.upper)
        if lower is not None:
            lo[j] = lower
        if upper is not None:
            hi[j] = upper
        return Box(tuple(lo), tuple(hi))


@dataclass(frozen=True)
class Constraint:
    poly: Polynomial
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in (GE, EQ):
            raise ValueError(f"unknown sense {self.sense!r}")

    def violation(self, point: Sequence[float]) -> float:
        """Amount by which ``point`` fails the constraint (0 when satisfied)."""
        r = evaluate(self.poly, point) - self.rhs
        return abs(r) if self.sense == EQ else max(0.0, -r)


@dataclass(frozen=True)
class PolyProblem:
    """``min objective(x)`` subject to polynomial constraints and ``x`` in ``box``.

    Inequalities (``ge``) precede equalities (``eq``).
    """

    num_vars: int
    objective: Polynomial
    constraints: tuple[Constraint, ...]
    box: Box
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.box) != self.num_vars:
            raise ValueError("box dimension does not match num_vars")
        seen_eq = False
        for c in self.constraints:
            if c.sense == EQ:
                seen_eq = True
            elif seen_eq:
                raise ValueError("inequality constraints must precede equalities")
        for poly in self.polynomials():
            for k in poly.terms:
                if k and k[-1] >= self.num_vars:
                    raise ValueError(f"variable index {k[-1]} out of range")

    def polynomials(self) -> list[Polynomial]:
        return [self.objective] + [c.poly for c in self.constraints]

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.polynomials())

    @property
    def num_inequalities(self) -> int:
        return sum(c.sense == GE for c in self.constraints)

    def max_violation(self, point: Sequence[float]) -> float:
        return max((c.violation(point) for c in self.constraints), default=0.0)

    def with_box(self, box: Box) -> "PolyProblem":
        return PolyProblem(self.num_vars, self.objective, self.constraints, box, self.name)
