"""Best-bound spatial branch-and-bound over RLT relaxations."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import Box, PolyProblem
from .domred import Infeasible, fbbt_pass, obbt_root
from .lpsolve import Status as LpStatus, solve_lp
from .rlt import BoundMode, LiftMap, RelaxationConfig, build_linear_program, build_relaxation

log = logging.getLogger(__name__)

BRANCH_CLAMP = 0.05
PRUNE_TOL = 1e-12
FEAS_TOL = 1e-6


class SolveStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    TIME_LIMIT = "TIME_LIMIT"


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-3
    time_limit: float = 3600.0
    bound_mode: BoundMode = BoundMode.LOOSE
    obbt: bool = False
    fbbt: bool = False
    theta_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "bound_mode", BoundMode(self.bound_mode))

    @property
    def relaxation(self) -> RelaxationConfig:
        return RelaxationConfig(bound_mode=self.bound_mode)


@dataclass(frozen=True)
class BnbNode:
    id: int
    box: Box
    lb: float


@dataclass
class SolveResult:
    status: SolveStatus
    ub: float
    lb: float
    incumbent: list | None
    nodes_explored: int
    lp_time_total: float
    lp_time_per_node: float
    lb_history: list = field(default_factory=list)
    wall_time: float = 0.0
    root_lb: float = -math.inf
    node_log: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        """JSON-ready form; every timing-dependent field sits under ``timing``."""
        return {
            "status": self.status.value,
            "ub": _num(self.ub),
            "lb": _num(self.lb),
            "incumbent": self.incumbent,
            "nodes_explored": self.nodes_explored,
            "root_lb": _num(self.root_lb),
            "timing": {
                "wall_time": self.wall_time,
                "lp_time_total": self.lp_time_total,
                "lp_time_per_node": self.lp_time_per_node,
                "lb_history": [[t, _num(v)] for t, v in self.lb_history],
            },
        }


def _num(v: float):
    # JSON has no infinities
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def theta_violations(x, X, lift: LiftMap) -> np.ndarray:
    """Per-variable sum of multiplicity-weighted ``|X_J - prod x_J|`` over RLT columns."""
    theta = np.zeros(lift.num_vars)
    for k in lift.rlt_columns():
        J = lift.columns[k]
        v = abs(X[k] - math.prod(x[j] for j in J))
        if v:
            for j in J.support():
                theta[j] += J.count(j) * v
    return theta


def branch(node: BnbNode, x, theta, z: float, next_id: int) -> tuple[BnbNode, BnbNode]:
    """Split on the most violated variable at its relaxation value.

    The split point is kept at least 5% of the width away from either end;
    both children inherit ``z`` as their lower bound.
    """
    p = int(np.argmax(theta))
    lo, hi = node.box.lower[p], node.box.upper[p]
    w = hi - lo
    beta = min(max(x[p], lo + BRANCH_CLAMP * w), hi - BRANCH_CLAMP * w)
    left = BnbNode(next_id, node.box.replace(p, upper=beta), z)
    right = BnbNode(next_id + 1, node.box.replace(p, lower=beta), z)
    return left, right


def _prune_level(ub: float) -> float:
    return ub - PRUNE_TOL * (1 + abs(ub)) if math.isfinite(ub) else ub


def gap(lb: float, ub: float, epsilon: float) -> tuple[float, float, bool]:
    """``(absolute, relative, closed)``; closed when either gap is below epsilon."""
    if lb == ub:
        return 0.0, 0.0, True
    if math.isinf(lb) or math.isinf(ub):
        return math.inf, math.inf, False
    absolute = ub - lb
    relative = absolute / max(1e-10, abs(ub))
    return absolute, relative, min(absolute, relative) < epsilon


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self.start


def _solve_linear(p: PolyProblem, cfg: SolverConfig, clock: _Clock) -> SolveResult:
    lp = build_linear_program(p, p.box).lp
    t0 = time.perf_counter()
    sol = solve_lp(lp)
    lp_time = time.perf_counter() - t0
    if sol.status is LpStatus.OPTIMAL:
        z = sol.objective
        return SolveResult(SolveStatus.OPTIMAL, z, z, [float(v) for v in sol.x], 1, lp_time,
                           lp_time, [(clock(), z)], clock(), root_lb=z)
    # a box-bounded LP cannot be unbounded
    return SolveResult(SolveStatus.INFEASIBLE, math.inf, math.inf, None, 1, lp_time, lp_time,
                       [], clock())


def solve(p: PolyProblem, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    clock = _Clock()
    if p.degree <= 1:
        return _solve_linear(p, cfg, clock)

    ub, incumbent = math.inf, None
    lb = -math.inf
    lb_history: list = []
    node_log: list = []
    nodes = 0
    lp_time = 0.0
    root_lb = -math.inf

    def finish(status: SolveStatus) -> SolveResult:
        return SolveResult(status, ub, lb, incumbent, nodes, lp_time,
                           lp_time / nodes if nodes else 0.0, lb_history, clock(), root_lb,
                           node_log)

    root_box = p.box
    try:
        if cfg.fbbt:
            root_box, _ = fbbt_pass(p, root_box)
        if cfg.obbt:
            root_box = obbt_root(p, root_box, cfg.relaxation)
    except Infeasible:
        lb = math.inf
        return finish(SolveStatus.INFEASIBLE)

    queue = [(-math.inf, 1, BnbNode(1, root_box, -math.inf))]
    tau = 1
    while True:
        # Stage 1
        _, _, node = heapq.heappop(queue)
        box = node.box
        feasible = True
        if cfg.fbbt and node.id != 1:
            try:
                box, _ = fbbt_pass(p, box)
            except Infeasible:
                feasible = False
        if feasible:
            rel = build_relaxation(p, box, cfg.relaxation)
            t0 = time.perf_counter()
            sol = solve_lp(rel.lp)
            lp_time += time.perf_counter() - t0
            nodes += 1
            feasible = sol.status is LpStatus.OPTIMAL
            if sol.status is LpStatus.UNBOUNDED:
                # only reachable with loose bounds on pathological input: no bound, so
                # bisect the widest variable and keep both halves at -inf
                log.warning("node %d relaxation unbounded", node.id)
                widths = [box.width(j) for j in range(p.num_vars)]
                mid = [0.5 * (a + b) for a, b in zip(box.lower, box.upper)]
                for child in branch(BnbNode(node.id, box, -math.inf), mid, widths, -math.inf,
                                    tau + 1):
                    heapq.heappush(queue, (child.lb, child.id, child))
                tau += 2
        if feasible:
            z = sol.objective
            x = sol.x[:p.num_vars]
            if node.id == 1:
                root_lb = z
            theta = theta_violations(x, sol.x, rel.lift)
            node_log.append((node.id, z))
            if z < _prune_level(ub):
                worst = theta.max()
                # a near-exact lifted point whose constraints still miss by more than
                # FEAS_TOL is branched on rather than accepted
                if worst > cfg.theta_tolerance or (worst > 0 and p.max_violation(x) > FEAS_TOL):
                    left, right = branch(BnbNode(node.id, box, node.lb), x, theta, z, tau + 1)
                    tau += 2
                    heapq.heappush(queue, (left.lb, left.id, left))
                    heapq.heappush(queue, (right.lb, right.id, right))
                else:
                    ub = z
                    incumbent = [float(v) for v in x]
                    queue = [e for e in queue if e[2].lb < ub]
                    heapq.heapify(queue)
        elif node.id == 1:
            root_lb = math.inf

        # Stage 2
        new_lb = min(min((e[0] for e in queue), default=math.inf), ub)
        if new_lb > lb or not lb_history:
            lb = max(lb, new_lb)
            lb_history.append((clock(), lb))
        if gap(lb, ub, cfg.epsilon)[2] or not queue:
            if not queue:
                lb = ub
            return finish(SolveStatus.OPTIMAL if incumbent is not None else SolveStatus.INFEASIBLE)
        if clock() > cfg.time_limit:
            return finish(SolveStatus.TIME_LIMIT)
