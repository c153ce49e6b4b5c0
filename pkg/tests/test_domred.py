import math

import numpy as np
import pytest

from rltbb.core import EQ, GE, Box, Constraint, Polynomial, PolyProblem
from rltbb.domred import Infeasible, Interval, fbbt_pass, interval_eval, obbt_root

from helpers import dense_poly, fbbt_soundness_draw, random_instance


def poly(*terms):
    return Polynomial.from_terms(terms)


def problem(cons, lower, upper, objective=None):
    n = len(lower)
    obj = objective or poly(((0,), 1.0))
    return PolyProblem(n, obj, tuple(cons), Box(tuple(lower), tuple(upper)))


def test_interval_arithmetic():
    assert Interval(0, 1) * Interval(0, 2) == Interval(0, 2)
    assert Interval(-1, 2) ** 2 == Interval(0, 4)
    assert Interval(0.5, 2) ** 2 == Interval(0.25, 4)
    assert Interval(-2, -1) ** 3 == Interval(-8, -1)
    assert Interval(1, 2).divide(Interval(-1, 1)) is None
    assert Interval(1, 2).divide(Interval(2, 4)) == Interval(0.25, 1)
    assert Interval(0, math.inf) * Interval(0, 0) == Interval(0, 0)
    assert Interval(-1, 1).root(2) == Interval(0, 1)
    assert Interval(-2, -1).root(2) is None
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_interval_eval_examples():
    box = Box((0.0, 0.0), (1.0, 2.0))
    assert interval_eval(poly(((0, 1), 1.0)), box) == Interval(0, 2)
    assert interval_eval(poly(((0, 0), 1.0)), Box((0.5,), (2.0,))) == Interval(0.25, 4)
    assert interval_eval(poly(((0,), 2.0), ((1,), -1.0)), Box((0.0, 0.0), (1.0, 1.0))) == \
        Interval(-1, 2)


def test_fbbt_linear_example():
    p = problem([Constraint(poly(((0,), 1.0), ((1,), 1.0)), GE, 3.0)], [0, 0], [2, 2])
    box, improved = fbbt_pass(p, p.box)
    assert improved and box == Box((1.0, 1.0), (2.0, 2.0))


def test_fbbt_detects_infeasible_product():
    p = problem([Constraint(poly(((0, 1), 1.0)), GE, 1.0)], [0, 0], [1, 0.5])
    with pytest.raises(Infeasible):
        fbbt_pass(p, p.box)


def test_fbbt_no_change_when_satisfied():
    p = problem([Constraint(poly(((0,), 1.0), ((1,), 1.0)), GE, -1.0)], [0, 0], [2, 2])
    box, improved = fbbt_pass(p, p.box)
    assert not improved and box is p.box


def test_fbbt_even_power_and_equality():
    # x0^2 = 4 on [0, 5] -> x0 = 2
    p = problem([Constraint(poly(((0, 0), 1.0)), EQ, 4.0)], [0], [5])
    box, _ = fbbt_pass(p, p.box)
    assert box.lower[0] == pytest.approx(2.0) and box.upper[0] == pytest.approx(2.0)


def test_fbbt_monotone():
    rng = np.random.default_rng(6)
    for _ in range(30):
        p = random_instance(rng, 3, 2, num_cons=2)
        try:
            b1, _ = fbbt_pass(p, p.box)
            b2, _ = fbbt_pass(p, b1)
        except Infeasible:
            continue
        assert b1.contains_box(b2) and p.box.contains_box(b1)


def test_fbbt_soundness_sampled():
    rng = np.random.default_rng(12)
    assert all(fbbt_soundness_draw(rng) for _ in range(200))


def test_obbt_fixed_point_box_only():
    p = problem([], [0.5, 1.0], [2.0, 3.0], objective=poly(((0, 1), 1.0)))
    assert obbt_root(p, p.box) == p.box


def test_obbt_linear_example():
    p = problem([Constraint(poly(((0,), 1.0), ((1,), 1.0)), GE, 3.0)], [0, 0], [2, 2],
                objective=poly(((0, 1), 1.0)))
    box = obbt_root(p, p.box)
    assert box.lower == pytest.approx((1.0, 1.0)) and box.upper == (2.0, 2.0)
    lin = problem([Constraint(poly(((0,), 1.0), ((1,), 1.0)), GE, 3.0)], [0, 0], [2, 2])
    assert obbt_root(lin, lin.box).lower == pytest.approx((1.0, 1.0))


def test_obbt_infeasible():
    p = problem([Constraint(poly(((0, 1), 1.0)), GE, 2.0)], [0, 0], [1, 1],
                objective=poly(((0, 1), 1.0)))
    with pytest.raises(Infeasible):
        obbt_root(p, p.box)


def test_obbt_keeps_feasible_points():
    rng = np.random.default_rng(9)
    for _ in range(15):
        p = random_instance(rng, 2, 2, num_cons=1)
        box = obbt_root(p, p.box)
        assert p.box.contains_box(box)
        pts = rng.uniform(p.box.lower, p.box.upper, (400, 2))
        for x in pts:
            if p.max_violation(x) <= 0:
                assert box.contains(x, tol=1e-7)
