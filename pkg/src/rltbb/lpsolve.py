"""Dense two-phase primal simplex with dual values and reduced costs.

Columns with finite lower bounds are shifted to start at zero, columns with
only an upper bound are reflected, and free columns are split in two.
Finite upper bounds become explicit ``<=`` rows.  Pricing is Dantzig's rule
until a run of degenerate pivots triggers Bland's rule for the rest of the
phase.

The tableau runs on a power-of-two equilibrated copy of the rows, uses a
two-pass (Harris) ratio test, and is rebuilt from the original rows every 50
pivots.  A column only proves unboundedness when it has no positive entry and
a reduced cost well above round-off.  Phase 1 stops once the artificials sum
to (nearly) zero; whatever is left is absorbed into the right-hand side.  The
tableau only selects the basis: primal values and row duals are recomputed
from the unscaled rows, and reduced costs are ``c - A^T y`` on the original
columns.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

GE, EQ, LE = ">=", "=", "<="

PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-9
RAY_TOL = 1e-13
GAIN_TOL = 1e-9
FEAS_TOL = 1e-7
REFACTOR_EVERY = 50
STOP_FRAC = 0.01


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"


class LpNumericalError(RuntimeError):
    """Simplex hit its iteration cap; ``log`` holds the pivot history."""

    def __init__(self, message: str, log: list):
        super().__init__(message)
        self.log = log


class LpInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class Row:
    coefs: Mapping[int, float]
    sense: str
    rhs: float

    def activity(self, x: Sequence[float]) -> float:
        return math.fsum(c * x[j] for j, c in self.coefs.items())


@dataclass
class LinearProgram:
    """``min c.x + constant`` over ``rows`` and ``col_lower <= x <= col_upper``."""

    num_cols: int
    objective: np.ndarray
    col_lower: np.ndarray
    col_upper: np.ndarray
    rows: list[Row] = field(default_factory=list)
    obj_constant: float = 0.0

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(self.num_cols)
        self.col_lower = np.asarray(self.col_lower, dtype=float).reshape(self.num_cols)
        self.col_upper = np.asarray(self.col_upper, dtype=float).reshape(self.num_cols)
        for r in self.rows:
            if r.sense not in (GE, EQ, LE):
                raise ValueError(f"unknown row sense {r.sense!r}")
            if not math.isfinite(r.rhs):
                raise ValueError("row right-hand sides must be finite")
            if any(not 0 <= j < self.num_cols for j in r.coefs):
                raise ValueError("row coefficient index out of range")

    def dense_rows(self) -> np.ndarray:
        A = np.zeros((len(self.rows), self.num_cols))
        for i, r in enumerate(self.rows):
            for j, c in r.coefs.items():
                A[i, j] += c
        return A

    def with_objective(self, objective, constant: float = 0.0) -> "LinearProgram":
        return replace(self, objective=np.asarray(objective, dtype=float), obj_constant=constant)


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    objective: float = math.nan
    row_duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    dual_objective: float = math.nan
    iterations: int = 0
    wall_time: float = 0.0
    pivots: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Standard:
    """``A y = b, y >= 0`` with bookkeeping back to the original LP."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c0: float
    basis: list            # initial basic column per row, -1 where an artificial is needed
    row_origin: list       # original row index, or -1 for a bound row
    row_sign: np.ndarray   # standard row = sign * original row
    T: np.ndarray          # x = shift + T @ y[:ny]
    shift: np.ndarray
    ny: int


def _standardize(lp: LinearProgram) -> _Standard | None:
    n = lp.num_cols
    lo, hi = lp.col_lower, lp.col_upper
    if np.any(lo > hi):
        return None

    # column substitutions
    cols = []  # (orig col, sign) pairs per new structural column
    shift = np.zeros(n)
    bound_rows = []  # (structural col, width)
    for j in range(n):
        if math.isfinite(lo[j]):
            shift[j] = lo[j]
            cols.append((j, 1.0))
            if math.isfinite(hi[j]):
                bound_rows.append((len(cols) - 1, hi[j] - lo[j]))
        elif math.isfinite(hi[j]):
            shift[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    T = np.zeros((n, ny))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s

    A0 = lp.dense_rows()
    b0 = np.array([r.rhs for r in lp.rows], dtype=float) - A0 @ shift
    Ay = A0 @ T

    rows, rhs, senses, origin = [], [], [], []
    for i, r in enumerate(lp.rows):
        if not np.any(Ay[i]):
            # zero row: either a tautology (dropped) or a certificate of infeasibility
            v = b0[i]
            ok = (v <= FEAS_TOL) if r.sense == GE else (v >= -FEAS_TOL) if r.sense == LE \
                else abs(v) <= FEAS_TOL
            if not ok:
                return None
            continue
        rows.append(Ay[i])
        rhs.append(b0[i])
        senses.append(r.sense)
        origin.append(i)
    for k, w in bound_rows:
        e = np.zeros(ny)
        e[k] = 1.0
        rows.append(e)
        rhs.append(w)
        senses.append(LE)
        origin.append(-1)

    m = len(rows)
    n_slack = sum(s != EQ for s in senses)
    A = np.zeros((m, ny + n_slack))
    b = np.zeros(m)
    sign = np.ones(m)
    basis = [-1] * m
    k = ny
    for i in range(m):
        A[i, :ny] = rows[i]
        b[i] = rhs[i]
        slack = None
        if senses[i] == GE:
            A[i, k] = -1.0
            slack = k
        elif senses[i] == LE:
            A[i, k] = 1.0
            slack = k
        if slack is not None:
            k += 1
        if b[i] < 0 or (b[i] == 0 and senses[i] == GE):
            A[i] *= -1.0
            b[i] *= -1.0
            sign[i] = -1.0
        if slack is not None and A[i, slack] > 0:
            basis[i] = slack

    c = np.zeros(A.shape[1])
    c[:ny] = lp.objective @ T
    c0 = float(lp.objective @ shift) + lp.obj_constant
    return _Standard(A, b, c, c0, basis, origin, sign, T, shift, ny)


def _pow2(v: np.ndarray) -> np.ndarray:
    # powers of two scale without rounding
    return np.exp2(np.round(np.log2(v)))


def _equilibrate(A: np.ndarray, basis: Sequence[int], passes: int = 4):
    """Geometric row and column scales; slack columns keep a unit entry."""
    m, n = A.shape
    rs, cs = np.ones(m), np.ones(n)
    if A.size == 0:
        return rs, cs
    mag = np.abs(A)
    nz = mag > 0
    for _ in range(passes):
        S = mag * rs[:, None] * cs[None, :]
        hi, lo = np.where(nz, S, 0.0).max(axis=1), np.where(nz, S, np.inf).min(axis=1)
        ok = hi > 0
        rs[ok] /= np.sqrt(hi[ok] * lo[ok])
        S = mag * rs[:, None] * cs[None, :]
        hi, lo = np.where(nz, S, 0.0).max(axis=0), np.where(nz, S, np.inf).min(axis=0)
        ok = hi > 0
        cs[ok] /= np.sqrt(hi[ok] * lo[ok])
    rs, cs = _pow2(rs), _pow2(cs)
    for i, j in enumerate(basis):
        if j >= 0:
            cs[j] = 1.0 / (rs[i] * A[i, j])
    return rs, cs


class _Simplex:
    """Tableau simplex; rows ``:m`` are constraints, the last row the reduced costs.

    ``base`` holds the original constraint rows (with the right-hand side as
    the last column) so the tableau can be rebuilt from the basis every
    ``REFACTOR_EVERY`` pivots, which keeps round-off from accumulating.
    """

    def __init__(self, tableau: np.ndarray, basis: list, max_iter: int, bland_after: int):
        self.t = tableau
        self.base = tableau[:-1].copy()
        self.cost = np.zeros(tableau.shape[1])
        self.basis = basis
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iterations = 0
        self.pivots: list = []

    def set_cost(self, cost: np.ndarray):
        """Install a new objective (rhs entry 0) and price it against the basis."""
        self.cost = cost
        t, m = self.t, self.t.shape[0] - 1
        t[m] = cost
        for i in range(m):
            cb = cost[self.basis[i]]
            if cb:
                t[m] -= cb * t[i]

    def keep_rows(self, keep: list):
        self.t = np.vstack([self.t[keep], self.t[-1:]])
        self.base = self.base[keep]
        self.basis = [self.basis[i] for i in keep]

    def refactor(self):
        t, m = self.t, self.t.shape[0] - 1
        try:
            body = np.linalg.solve(self.base[:, self.basis], self.base)
        except np.linalg.LinAlgError:
            return
        body[:, self.basis] = np.eye(m)
        # tiny negative values are round-off on a feasible basis
        rhs = body[:, -1]
        rhs[(rhs < 0) & (rhs > -FEAS_TOL)] = 0.0
        t[:m] = body
        self.set_cost(self.cost)

    def pivot(self, r: int, j: int):
        t = self.t
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        t[:, j] = 0.0
        t[r, j] = 1.0
        self.basis[r] = j
        self.pivots.append((r, j))
        self.iterations += 1
        if self.iterations % REFACTOR_EVERY == 0:
            self.refactor()

    def _leaving_row(self, col: np.ndarray, bland: bool) -> int | None:
        """Two-pass (Harris) ratio test: the largest pivot within a small bound slack."""
        t = self.t
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            return None
        rhs = np.maximum(t[rows, -1], 0.0)
        limit = ((rhs + HARRIS_TOL) / col[rows]).min()
        ties = rows[rhs / col[rows] <= limit]
        if bland:
            return int(min(ties, key=lambda i: self.basis[i]))
        return int(ties[np.argmax(col[ties])])

    def run(self, allowed: int, stop_below: float = -math.inf) -> str:
        """Optimize the objective in the last row over columns ``< allowed``.

        Stops early once the objective value drops to ``stop_below``.
        """
        degenerate = 0
        bland = False
        # columns whose only blocking entries are below the pivot tolerance; they are
        # skipped until the basis changes
        blocked = np.zeros(0, dtype=int)
        while True:
            t = self.t
            m = t.shape[0] - 1
            if -t[m, -1] <= stop_below:
                return "optimal"
            if self.iterations >= self.max_iter:
                raise LpNumericalError(
                    f"simplex did not converge within {self.max_iter} pivots", list(self.pivots))
            d = t[m, :allowed].copy()
            d[blocked] = 0.0
            if bland:
                cand = np.flatnonzero(d < -PIVOT_TOL)
                if cand.size == 0:
                    return "optimal"
                j = int(cand[0])
            else:
                j = int(np.argmin(d))
                if d[j] >= -PIVOT_TOL:
                    return "optimal"
            col = t[:m, j]
            r = self._leaving_row(col, bland)
            if r is None:
                # a ray needs a clean column and a reduced cost above round-off
                tiny_gain = d[j] > -GAIN_TOL * (1.0 + abs(t[m, -1]))
                if tiny_gain or (m and col.max() > RAY_TOL * np.abs(col).max()):
                    blocked = np.append(blocked, j)
                    continue
                return "unbounded"
            if t[r, -1] / t[r, j] <= PIVOT_TOL:
                degenerate += 1
                if degenerate > self.bland_after:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, j)
            blocked = blocked[:0]


def solve_lp(lp: LinearProgram) -> LpSolution:
    start = time.perf_counter()
    std = _standardize(lp)
    if std is None:
        return LpSolution(Status.INFEASIBLE, wall_time=time.perf_counter() - start)

    A, b = std.A, std.b
    m, ns = A.shape
    size = m + ns
    art = [i for i in range(m) if std.basis[i] < 0]
    na = len(art)
    # the tableau works on an equilibrated copy; it only has to find the basis
    rs, cs = _equilibrate(A, std.basis)
    t = np.zeros((m + 1, ns + na + 1))
    t[:m, :ns] = A * rs[:, None] * cs[None, :]
    t[:m, -1] = b * rs
    basis = list(std.basis)
    for k, i in enumerate(art):
        t[i, ns + k] = 1.0
        basis[i] = ns + k
    # phase 1 minimizes the sum of the artificials
    sx = _Simplex(t, basis, max_iter=50 * (size + na), bland_after=2 * (size + na))
    cost = np.zeros(t.shape[1])
    cost[ns:ns + na] = 1.0
    sx.set_cost(cost)
    scale = 1.0 + (np.abs(b * rs).max() if m else 0.0)
    if na:
        sx.run(ns + na, stop_below=STOP_FRAC * FEAS_TOL * scale)
        sx.refactor()
    if -sx.t[m, -1] > FEAS_TOL * scale:
        return LpSolution(Status.INFEASIBLE, iterations=sx.iterations,
                          wall_time=time.perf_counter() - start, pivots=sx.pivots)

    # artificials left at a tolerance-level value are absorbed into the right-hand
    # side, so driving them out below is degenerate and moves nothing else
    b = b.copy()
    for i in range(m):
        k = sx.basis[i] - ns
        if k >= 0 and sx.t[i, -1] != 0.0:
            r = art[k]
            b[r] -= sx.t[i, -1] / rs[r]
            sx.base[r, -1] -= sx.t[i, -1]
            sx.t[i, -1] = 0.0

    # drive artificials out of the basis; rows where that fails are redundant
    keep = list(range(m))
    for i in range(m):
        if sx.basis[i] >= ns:
            row = sx.t[i, :ns]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cand.size:
                sx.pivot(i, int(cand[np.argmax(np.abs(row[cand]))]))
            else:
                keep.remove(i)
    if len(keep) < m:
        sx.keep_rows(keep)
        A, b = A[keep], b[keep]
        m = len(keep)
    basis = sx.basis

    cost = np.zeros(sx.t.shape[1])
    cost[:ns] = std.c * cs
    sx.set_cost(cost)
    status = sx.run(ns)
    if status == "unbounded":
        return LpSolution(Status.UNBOUNDED, iterations=sx.iterations,
                          wall_time=time.perf_counter() - start, pivots=sx.pivots)
    t = sx.t

    # recompute primal and dual values from the basis to shed tableau drift
    B = A[:, basis]
    try:
        yb = np.linalg.solve(B, b)
        ystd = np.linalg.solve(B.T, std.c[basis])
    except np.linalg.LinAlgError:
        yb = t[:m, -1] * cs[basis]
        ystd = np.zeros(m)
    yb = np.maximum(yb, 0.0)
    yfull = np.zeros(ns)
    yfull[basis] = yb
    x = std.shift + std.T @ yfull[:std.ny]

    duals = np.zeros(len(lp.rows))
    for k, i in enumerate(keep):
        o = std.row_origin[i]
        if o >= 0:
            duals[o] = std.row_sign[i] * ystd[k]
    A0 = lp.dense_rows()
    rc = lp.objective - A0.T @ duals
    obj = float(lp.objective @ x) + lp.obj_constant

    bvec = np.array([r.rhs for r in lp.rows], dtype=float)
    dual_obj = float(bvec @ duals) + lp.obj_constant
    for j in range(lp.num_cols):
        if rc[j] > PIVOT_TOL and math.isfinite(lp.col_lower[j]):
            dual_obj += rc[j] * lp.col_lower[j]
        elif rc[j] < -PIVOT_TOL and math.isfinite(lp.col_upper[j]):
            dual_obj += rc[j] * lp.col_upper[j]
        else:
            dual_obj += rc[j] * x[j]
    return LpSolution(Status.OPTIMAL, x=x, objective=obj, row_duals=duals, reduced_costs=rc,
                      dual_objective=dual_obj, iterations=sx.iterations,
                      wall_time=time.perf_counter() - start, pivots=sx.pivots)


def lp_min_column(lp: LinearProgram, col: int, maximize: bool = False) -> float:
    """Optimal value of ``x[col]`` (minimized or maximized) over ``lp``'s feasible set."""
    c = np.zeros(lp.num_cols)
    c[col] = -1.0 if maximize else 1.0
    sol = solve_lp(lp.with_objective(c))
    if sol.status is Status.INFEASIBLE:
        raise LpInfeasible("LP is infeasible")
    if sol.status is Status.UNBOUNDED:
        return math.inf if maximize else -math.inf
    return -sol.objective if maximize else sol.objective


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest row or column-bound violation at ``x``."""
    worst = 0.0
    for r in lp.rows:
        a = r.activity(x)
        if r.sense == GE:
            worst = max(worst, r.rhs - a)
        elif r.sense == LE:
            worst = max(worst, a - r.rhs)
        else:
            worst = max(worst, abs(a - r.rhs))
    worst = max(worst, float(np.max(lp.col_lower - x, initial=0.0)),
                float(np.max(x - lp.col_upper, initial=0.0)))
    return worst
