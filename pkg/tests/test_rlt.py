import itertools
import math

import numpy as np
import pytest

from rltbb.core import Box, Multiset, Polynomial, PolyProblem, enumerate_multisets, sub_multisets
from rltbb.lpsolve import GE, Status, solve_lp
from rltbb.rlt import (BoundMode, LiftMap, LinearProblem, RelaxationConfig, bound_factor_poly,
                       bound_factor_rows, build_relaxation, implied_bounds, linearize)

from helpers import random_instance


def poly(*terms):
    return Polynomial.from_terms(terms)


def test_liftmap_layout():
    lift = LiftMap(3, 3)
    assert lift.columns[:3] == [Multiset([0]), Multiset([1]), Multiset([2])]
    assert len(lift) == sum(math.comb(3 + d - 1, d) for d in (1, 2, 3))
    assert all(lift.index[J] == k for k, J in enumerate(lift.columns))
    degs = [len(J) for J in lift.columns]
    assert degs == sorted(degs)
    np.testing.assert_allclose(lift.lift_point([2.0, 3.0, 0.5])[lift.col([0, 1, 2])], 3.0)


def test_linearize_examples():
    lift = LiftMap(3, 2)
    coefs, const = linearize(poly(((1, 2), 3.0), ((1,), -1.0), ((), 5.0)), lift)
    assert coefs == {lift.col([1, 2]): 3.0, lift.col([1]): -1.0} and const == 5.0
    coefs, const = linearize(poly(((0,), 2.0), ((2,), -1.0)), lift)
    assert coefs == {0: 2.0, 2: -1.0} and const == 0.0
    assert linearize(poly(((1, 1), 1.0)), lift)[0] == {lift.col([1, 1]): 1.0}
    with pytest.raises(ValueError):
        linearize(poly(((0, 1, 2), 1.0)), lift)


def test_bound_factor_examples():
    box = Box((0.0, 0.3, 0.7), (1.0, 2.0, 3.0))
    l1, l2, u2 = 0.3, 0.7, 3.0
    assert bound_factor_poly([1, 2], [], box) == poly(((1, 2), 1.0), ((1,), -l2), ((2,), -l1),
                                                      ((), l1 * l2))
    assert bound_factor_poly([1], [2], box) == poly(((1, 2), -1.0), ((1,), u2), ((2,), l1),
                                                    ((), -l1 * u2))
    assert bound_factor_poly([], [], box) == Polynomial.constant(1.0)


def _brute_coefficients(J1, J2, box):
    """Coefficient of each monomial by expanding every choice of factor term."""
    factors = [[((j,), 1.0), ((), -box.lower[j])] for j in J1]
    factors += [[((j,), -1.0), ((), box.upper[j])] for j in J2]
    acc = {}
    for pick in itertools.product(*factors):
        key = Multiset(sum((list(v) for v, _ in pick), []))
        acc[key] = acc.get(key, 0.0) + math.prod(c for _, c in pick)
    return {k: v for k, v in acc.items() if v != 0.0}


def test_bound_factor_matches_finite_product_oracle():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        lo = rng.uniform(0, 2, n)
        box = Box(tuple(lo), tuple(lo + rng.uniform(0.1, 2, n)))
        M = Multiset(rng.integers(0, n, int(rng.integers(1, 5))))
        for J1, J2 in sub_multisets(M):
            got = dict(bound_factor_poly(J1, J2, box).terms)
            want = _brute_coefficients(J1, J2, box)
            assert got.keys() == want.keys()
            for k in got:
                assert got[k] == pytest.approx(want[k], rel=1e-12, abs=1e-12)


def test_bound_factor_nonneg_and_linearization_exact():
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        lo = rng.uniform(0, 2, n)
        box = Box(tuple(lo), tuple(lo + rng.uniform(0.1, 2, n)))
        lift = LiftMap(n, 3)
        for M in enumerate_multisets(n, 3):
            for J1, J2 in sub_multisets(M):
                p = bound_factor_poly(J1, J2, box)
                x = [rng.uniform(a, b) for a, b in zip(box.lower, box.upper)]
                value = p.evaluate(x)
                assert value >= -1e-12
                coefs, const = linearize(p, lift)
                X = lift.lift_point(x)
                lin = math.fsum([const] + [c * X[k] for k, c in coefs.items()])
                assert lin == pytest.approx(value, abs=1e-12 * (1 + abs(value)) + 1e-12)


def test_implied_bounds():
    box = Box((0.0, 0.5, 2.0), (1.0, 1.0, 3.0))
    assert implied_bounds([1, 1, 2], box) == (0.5, 3.0)
    assert implied_bounds([2], box) == (2.0, 3.0)
    assert implied_bounds([0, 1], box)[0] == 0.0


def _bilinear():
    return PolyProblem(2, poly(((0, 1), 1.0)), (), Box((0.0, 0.0), (1.0, 1.0)))


def test_degree_two_rows_are_mccormick():
    p = _bilinear()
    rel = build_relaxation(p, p.box)
    k = rel.lift.col([0, 1])
    got = {(tuple(sorted(r.coefs.items())), r.rhs) for r in rel.lp.rows if k in r.coefs}
    # on [0,1]^2: X >= 0, X >= x0 + x1 - 1, X <= x0, X <= x1
    want = {(((k, 1.0),), 0.0), (((0, -1.0), (1, -1.0), (k, 1.0)), -1.0),
            (((0, 1.0), (k, -1.0)), 0.0), (((1, 1.0), (k, -1.0)), 0.0)}
    assert got == want


def test_row_count_bilinear_matches_brute_dedup():
    p = _bilinear()
    rel = build_relaxation(p, p.box)
    lift = rel.lift
    keys = set()
    for M in enumerate_multisets(2, 2):
        for J1, J2 in sub_multisets(M):
            coefs, const = linearize(bound_factor_poly(J1, J2, p.box), lift)
            coefs = tuple(sorted((k, v) for k, v in coefs.items() if v))
            if coefs:
                keys.add((coefs, const))
    assert len(rel.lp.rows) == len(keys)
    assert len(lift.rlt_columns()) == 3


def test_bound_modes():
    p = _bilinear()
    loose = build_relaxation(p, p.box, RelaxationConfig(BoundMode.LOOSE))
    tight = build_relaxation(p, p.box, RelaxationConfig(BoundMode.TIGHT))
    k = loose.lift.col([0, 1])
    assert loose.lp.col_lower[k] == -math.inf and loose.lp.col_upper[k] == math.inf
    assert (tight.lp.col_lower[k], tight.lp.col_upper[k]) == (0.0, 1.0)
    np.testing.assert_array_equal(loose.lp.col_lower[:2], [0, 0])


def test_linear_problem_signalled():
    p = PolyProblem(1, poly(((0,), 1.0)), (), Box((0.0,), (1.0,)))
    with pytest.raises(LinearProblem):
        build_relaxation(p, p.box)


def test_constraint_rows_carry_constant():
    p = random_instance(np.random.default_rng(5), 2, 2, num_cons=2, eq=True)
    rel = build_relaxation(p, p.box)
    assert rel.num_constraint_rows == 2
    for row, con in zip(rel.lp.rows, p.constraints):
        assert row.rhs == pytest.approx(con.rhs - con.poly.constant_term)


def test_loose_tight_root_equal():
    rng = np.random.default_rng(8)
    for _ in range(10):
        p = random_instance(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
        a = solve_lp(build_relaxation(p, p.box, RelaxationConfig(BoundMode.LOOSE)).lp)
        b = solve_lp(build_relaxation(p, p.box, RelaxationConfig(BoundMode.TIGHT)).lp)
        assert a.status is b.status is Status.OPTIMAL
        assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-9)
