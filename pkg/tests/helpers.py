"""Shared instance generators and oracles for the test-suite."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from rltbb.bench import RunRecord
from rltbb.core import EQ, GE, Box, Constraint, Polynomial, PolyProblem, enumerate_multisets
from rltbb.domred import Infeasible, fbbt_pass


def dense_poly(rng, n: int, degree: int, scale: float = 5.0) -> Polynomial:
    terms = [((), rng.uniform(-scale, scale))]
    for d in range(1, degree + 1):
        terms += [(tuple(J), rng.uniform(-scale, scale)) for J in enumerate_multisets(n, d)]
    return Polynomial.from_terms(terms)


def random_box(rng, n: int) -> Box:
    lo = rng.uniform(0.0, 1.0, n)
    return Box(tuple(lo), tuple(lo + rng.uniform(0.5, 2.0, n)))


def random_instance(rng, n: int, degree: int, num_cons: int = 1, eq: bool = False,
                    name: str = "") -> PolyProblem:
    """Dense objective and constraints; each constraint holds at a random box point."""
    box = random_box(rng, n)
    x0 = [rng.uniform(a, b) for a, b in zip(box.lower, box.upper)]
    cons = []
    for k in range(num_cons):
        g = dense_poly(rng, n, degree)
        sense = EQ if eq and k == num_cons - 1 else GE
        cons.append(Constraint(g, sense, g.evaluate(x0) - (0.0 if sense == EQ else 0.5)))
    return PolyProblem(n, dense_poly(rng, n, degree), tuple(cons), box, name)


def grid_polish_oracle(p: PolyProblem, points: int = 101) -> float:
    """Best feasible grid value, polished by SLSQP from the best few grid points."""
    axes = [np.linspace(a, b, points) for a, b in zip(p.box.lower, p.box.upper)]
    mesh = np.array(np.meshgrid(*axes, indexing="ij")).reshape(p.num_vars, -1).T

    def values(poly, X):
        out = np.zeros(len(X))
        for J, c in poly.terms.items():
            out += c * (np.prod(X[:, list(J)], axis=1) if J else 1.0)
        return out

    obj = values(p.objective, mesh)
    # equality constraints cannot be hit on a grid; start the polish anywhere
    ok = np.ones(len(mesh), bool)
    for con in p.constraints:
        if con.sense == GE:
            ok &= values(con.poly, mesh) >= con.rhs - 1e-9
    has_eq = any(c.sense == EQ for c in p.constraints)
    best = math.inf
    if ok.any() and not has_eq:
        best = float(obj[ok].min())
    order = np.argsort(np.where(ok, obj, np.inf))[:20]
    if has_eq:
        order = np.argsort(obj)[::max(1, len(obj) // 200)]
    cons = [{"type": "eq" if c.sense == EQ else "ineq",
             "fun": (lambda x, c=c: c.poly.evaluate(x) - c.rhs)} for c in p.constraints]
    for i in order:
        r = minimize(lambda x: p.objective.evaluate(x), mesh[i], method="SLSQP",
                     bounds=list(zip(p.box.lower, p.box.upper)), constraints=cons,
                     options={"ftol": 1e-12, "maxiter": 200})
        if r.success and p.max_violation(r.x) <= 1e-6 and p.box.contains(r.x, 1e-9):
            best = min(best, float(r.fun))
    return best


def brute_min(p: PolyProblem, points: int = 41) -> float:
    axes = [np.linspace(a, b, points) for a, b in zip(p.box.lower, p.box.upper)]
    best = math.inf
    for x in itertools.product(*axes):
        if p.max_violation(x) <= 1e-9:
            best = min(best, p.objective.evaluate(x))
    return best


def random_feasible_lp(rng, max_rows: int = 30, max_cols: int = 30):
    """Random LP feasible by construction (rows hold at a random point ``x0``).

    Returns the LP together with the matching ``scipy.optimize.linprog`` arguments.
    """
    from rltbb.lpsolve import EQ as LEQ, GE as LGE, LE as LLE, LinearProgram, Row

    n = int(rng.integers(1, max_cols + 1))
    m = int(rng.integers(0, max_rows + 1))
    x0 = rng.uniform(-3, 3, n)
    lo = np.where(rng.random(n) < 0.2, -math.inf, x0 - rng.uniform(0, 3, n))
    hi = np.where(rng.random(n) < 0.2, math.inf, x0 + rng.uniform(0, 3, n))
    rows, A_ub, b_ub, A_eq, b_eq = [], [], [], [], []
    for _ in range(m):
        a = np.where(rng.random(n) < 0.5, rng.integers(-5, 6, n).astype(float), 0.0)
        act = float(a @ x0)
        sense = rng.choice([LGE, LLE, LEQ], p=[0.45, 0.45, 0.1])
        if sense == LEQ:
            rhs = act
            A_eq.append(a)
            b_eq.append(rhs)
        elif sense == LGE:
            rhs = act - rng.uniform(0, 2)
            A_ub.append(-a)
            b_ub.append(-rhs)
        else:
            rhs = act + rng.uniform(0, 2)
            A_ub.append(a)
            b_ub.append(rhs)
        rows.append(Row({j: a[j] for j in range(n) if a[j]}, str(sense), rhs))
    c = rng.integers(-5, 6, n).astype(float)
    lp = LinearProgram(n, c, lo, hi, rows)
    bounds = [(None if not math.isfinite(a) else a, None if not math.isfinite(b) else b)
              for a, b in zip(lo, hi)]
    kwargs = dict(c=c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None, bounds=bounds,
                  method="highs")
    return lp, kwargs


def complementary_slackness(lp, sol) -> float:
    """Largest ``|dual * slack|`` over rows and ``|rc * (distance to active bound)|`` over columns."""
    from rltbb.lpsolve import EQ as LEQ

    worst = 0.0
    for y, r in zip(sol.row_duals, lp.rows):
        if r.sense != LEQ:
            worst = max(worst, abs(y * (r.activity(sol.x) - r.rhs)))
    for j, d in enumerate(sol.reduced_costs):
        lo, hi = lp.col_lower[j], lp.col_upper[j]
        gaps = [abs(sol.x[j] - v) for v in (lo, hi) if math.isfinite(v)]
        worst = max(worst, abs(d) * min(gaps) if gaps else abs(d))
    return worst


def dual_sign_violation(lp, sol) -> float:
    """How far row duals and reduced costs stray from the signs a minimization requires."""
    from rltbb.lpsolve import GE as LGE, LE as LLE

    worst = 0.0
    for y, r in zip(sol.row_duals, lp.rows):
        if r.sense == LGE:
            worst = max(worst, -y)
        elif r.sense == LLE:
            worst = max(worst, y)
    for j, d in enumerate(sol.reduced_costs):
        if not math.isfinite(lp.col_lower[j]):
            worst = max(worst, d)
        if not math.isfinite(lp.col_upper[j]):
            worst = max(worst, -d)
    return worst


def fbbt_soundness_draw(rng) -> bool:
    """One random draw: FBBT must keep every sampled feasible point."""
    n = int(rng.integers(1, 4))
    lo = rng.uniform(0, 2, n)
    box = Box(tuple(lo), tuple(lo + rng.uniform(0.1, 3, n)))
    x0 = [rng.uniform(a, b) for a, b in zip(box.lower, box.upper)]
    cons = []
    for k in range(int(rng.integers(1, 4))):
        g = dense_poly(rng, n, int(rng.integers(1, 4)))
        sense = EQ if rng.random() < 0.2 else GE
        rhs = g.evaluate(x0) - (0 if sense == EQ else rng.uniform(0, 3))
        cons.append(Constraint(g, sense, rhs))
    cons.sort(key=lambda c: c.sense != GE)
    p = PolyProblem(n, Polynomial.from_terms([((0,), 1.0)]), tuple(cons), box)
    pts = [x0] + [list(v) for v in rng.uniform(box.lower, box.upper, (300, n))]
    feasible = [x for x in pts if p.max_violation(x) <= 1e-12]
    try:
        reduced, _ = fbbt_pass(p, box)
    except Infeasible:
        return False
    return all(reduced.contains(x, tol=1e-9 * (1 + max(map(abs, x)))) for x in feasible)


def rec(inst, cfg, status="OPTIMAL", lb=0.0, ub=0.0, t=1.0, nodes=1, ltime=0.01, hist=None):
    return RunRecord(inst, cfg, status, lb, ub, t, nodes, ltime,
                     hist if hist is not None else [(0.0, lb - 1.0)])


def fixture_records():
    h = lambda v: [(0.0, v)]  # noqa: E731
    return [
        # i1: solved by both in under 5 s
        rec("i1", "A", lb=1.0, ub=1.0, t=1.0, nodes=10, ltime=0.1, hist=h(0.0)),
        rec("i1", "B", lb=1.0, ub=1.0, t=2.0, nodes=20, ltime=0.3, hist=h(0.0)),
        # i2: solved by both, one slowly
        rec("i2", "A", lb=2.0, ub=2.0, t=10.0, nodes=40, ltime=0.2, hist=h(0.0)),
        rec("i2", "B", lb=2.0, ub=2.0, t=3.0, nodes=5, ltime=0.1, hist=h(1.0)),
        # i3: A hits the limit with a gap, B solves
        rec("i3", "A", "TIME_LIMIT", lb=1.0, ub=2.0, t=100.0, nodes=900, hist=h(0.0)),
        rec("i3", "B", lb=2.0, ub=2.0, t=50.0, nodes=300, hist=h(0.0)),
        # i4: nobody solves; A never finds an incumbent
        rec("i4", "A", "TIME_LIMIT", lb=0.5, ub=math.inf, t=100.0, nodes=700, hist=h(0.0)),
        rec("i4", "B", "TIME_LIMIT", lb=0.25, ub=3.0, t=100.0, nodes=800, hist=h(0.0)),
    ]
