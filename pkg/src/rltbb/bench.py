"""Benchmark metrics, instance features and CSV export.

Metrics follow the usual solver-comparison conventions: shifted geometric
means with per-metric exclusion rules, plus LB pace (seconds per unit of
lower-bound improvement) and its normalized form.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_degree

from .bnb import SolveResult, SolveStatus, SolverConfig, gap, solve
from .core import EQ, PolyProblem
from .ingest import load_problem
from .rlt import BoundMode, LiftMap

FAST_SOLVE = 5.0
PACE_SENTINEL_DENOM = 1e-10
METRICS = ("Unsolved", "Gap", "Time", "Pace", "Nodes", "L-Time")
SHIFTS = {"Gap": 1.0, "Time": 1.0, "L-Time": 1.0, "Nodes": 0.0, "Pace": 0.0}


class GroupingError(ValueError):
    """Records do not form a complete instance x config grid."""


@dataclass
class RunRecord:
    instance: str
    config: str
    status: str
    lb: float
    ub: float
    wall_time: float
    nodes_explored: int
    lp_time_per_node: float
    lb_history: list = field(default_factory=list)

    @classmethod
    def from_result(cls, instance: str, config: str, res: SolveResult) -> "RunRecord":
        return cls(instance, config, SolveStatus(res.status).value, res.lb, res.ub,
                   res.wall_time, res.nodes_explored, res.lp_time_per_node,
                   list(res.lb_history))

    @property
    def solved(self) -> bool:
        return self.status == SolveStatus.OPTIMAL.value

    def gap(self) -> float:
        """Relative optimality gap; infinite when the run has no finite bounds."""
        if not (math.isfinite(self.lb) and math.isfinite(self.ub)):
            return math.inf
        return gap(self.lb, self.ub, 1.0)[1]


@dataclass
class Pace:
    value: float
    flag: str | None = None  # "sentinel" (no LB progress) or "excluded" (no finite LB)


def pace(rec: RunRecord) -> Pace:
    """Seconds per unit of lower-bound improvement from the root bound."""
    if not rec.lb_history:
        return Pace(math.nan, "excluded")
    initial = rec.lb_history[0][1]
    final = rec.ub if rec.solved else rec.lb
    if not math.isfinite(initial) or not math.isfinite(final):
        return Pace(math.nan, "excluded")
    improvement = final - initial
    if improvement <= 0:
        return Pace(rec.wall_time / PACE_SENTINEL_DENOM, "sentinel")
    return Pace(rec.wall_time / improvement)


def nlb_pace(paces: dict[str, float]) -> dict[str, float]:
    """Best pace divided by each config's pace; the best maps to 1."""
    best = min(paces.values())
    return {k: best / v for k, v in paces.items()}


def shifted_geomean(values: Sequence[float], shift: float = 0.0) -> float:
    if not values:
        return math.nan
    return math.exp(math.fsum(math.log(v + shift) for v in values) / len(values)) - shift


@dataclass
class MetricSummary:
    values: dict[str, float]
    instances: int
    excluded: list[str]
    variation: dict[str, float] = field(default_factory=dict)


@dataclass
class MetricsReport:
    configs: list[str]
    reference: str
    metrics: dict[str, MetricSummary]
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"configs": self.configs, "reference": self.reference,
                "metrics": {k: asdict(v) for k, v in self.metrics.items()},
                "notes": self.notes}


def group_records(records: Iterable[RunRecord], configs: Sequence[str] | None = None
                  ) -> tuple[list[str], dict[str, dict[str, RunRecord]]]:
    """Index records by instance then config, checking the grid is complete."""
    grid: dict[str, dict[str, RunRecord]] = defaultdict(dict)
    seen: list[str] = []
    for r in records:
        if r.config in grid[r.instance]:
            raise GroupingError(f"duplicate record for {r.instance!r} / {r.config!r}")
        grid[r.instance][r.config] = r
        if r.config not in seen:
            seen.append(r.config)
    configs = list(configs) if configs else seen
    for inst, row in grid.items():
        if set(row) != set(configs):
            missing = sorted(set(configs) - set(row))
            raise GroupingError(f"instance {inst!r} lacks records for {missing}")
    return configs, dict(sorted(grid.items()))


def _variation(values: dict[str, float], reference: str) -> dict[str, float]:
    ref = values[reference]
    out = {}
    for k, v in values.items():
        if ref == 0 or math.isnan(ref) or math.isnan(v):
            out[k] = 0.0 if v == ref else math.nan
        else:
            out[k] = 100.0 * (v - ref) / ref
    return out


def compute_metrics(records: Iterable[RunRecord], configs: Sequence[str] | None = None
                    ) -> MetricsReport:
    """Aggregate per-config metrics; the first config is the reference for variations."""
    configs, grid = group_records(records, configs)
    metrics: dict[str, MetricSummary] = {}

    unsolved = {c: float(sum(not grid[i][c].solved for i in grid)) for c in configs}
    metrics["Unsolved"] = MetricSummary(unsolved, len(grid), [])

    def aggregate(name: str, keep, value):
        used, excluded = [], []
        for inst, row in grid.items():
            (used if keep(inst, row) else excluded).append(inst)
        vals = {c: shifted_geomean([value(grid[i][c]) for i in used], SHIFTS[name])
                for c in configs}
        metrics[name] = MetricSummary(vals, len(used), excluded)

    def all_solved(inst, row):
        return all(r.solved for r in row.values())

    def all_fast(row):
        return all(r.solved and r.wall_time < FAST_SOLVE for r in row.values())

    def keep_gap(inst, row):
        return all(math.isfinite(r.gap()) for r in row.values()) and not all_solved(inst, row)

    def keep_time(inst, row):
        return not all_fast(row) and any(r.solved for r in row.values())

    paces = {i: {c: pace(grid[i][c]) for c in configs} for i in grid}

    def keep_pace(inst, row):
        return not all_fast(row) and all(p.flag is None for p in paces[inst].values())

    aggregate("Gap", keep_gap, RunRecord.gap)
    aggregate("Time", keep_time, lambda r: r.wall_time)
    aggregate("Pace", keep_pace, lambda r: paces[r.instance][r.config].value)
    aggregate("Nodes", all_solved, lambda r: r.nodes_explored)
    aggregate("L-Time", all_solved, lambda r: r.lp_time_per_node)

    reference = configs[0]
    for m in metrics.values():
        m.variation = _variation(m.values, reference)
    notes = {
        "shifts": SHIFTS,
        "gap": "relative gap (ub - lb) / max(1e-10, |ub|)",
        "solved": "status OPTIMAL",
        "pace_exclusion": "instances where any config's pace is flagged are dropped from Pace",
        "vig": "variables joined when they share a monomial",
        "cmig": "objective and constraints joined to the nonconstant monomials they contain",
        "treewidth": "min-degree elimination upper bound",
    }
    return MetricsReport(list(configs), reference, metrics, notes)


def reldiff(value: float, reference: float) -> float:
    """``(value - reference) / reference``, e.g. tight nodes against loose nodes."""
    if reference == 0:
        return 0.0 if value == 0 else math.nan
    return (value - reference) / reference


# ---------------------------------------------------------------- features


def _vig(p: PolyProblem) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(p.num_vars))
    for poly in p.polynomials():
        for J in poly.terms:
            s = J.support()
            for a in range(len(s)):
                for b in range(a + 1, len(s)):
                    g.add_edge(s[a], s[b])
    return g


def _row_key(con) -> tuple:
    return (con.sense, con.rhs, tuple(sorted((tuple(J), c) for J, c in con.poly.terms.items())))


def _cmig(p: PolyProblem) -> tuple[nx.Graph, int, int]:
    """Objective and constraints on one side, nonconstant monomials on the other.

    Constraint nodes are numbered in a canonical content order so the graph
    does not depend on the order constraints were listed in.
    """
    rows = [p.objective] + [c.poly for c in sorted(p.constraints, key=_row_key)]
    monos = sorted({J for poly in rows for J in poly.terms if J}, key=lambda J: (len(J), J))
    mono_id = {J: len(rows) + k for k, J in enumerate(monos)}
    g = nx.Graph()
    g.add_nodes_from(range(len(rows) + len(monos)))
    for r, poly in enumerate(rows):
        for J in poly.terms:
            if J:
                g.add_edge(r, mono_id[J])
    return g, len(rows), len(monos)


def label_propagation(g: nx.Graph, max_sweeps: int = 100) -> list[set]:
    """Semi-synchronous label propagation with ascending-index tie-breaks.

    Nodes are greedily coloured in ascending order and updated one colour
    class at a time, ascending within a class.  A node keeps its label when
    that label is among the most frequent around it; otherwise it takes the
    smallest of the most frequent labels.
    """
    colour = nx.coloring.greedy_color(g, strategy=lambda G, _: sorted(G))
    order = sorted(g.nodes, key=lambda v: (colour[v], v))
    labels = {v: v for v in g.nodes}
    for _ in range(max_sweeps):
        changed = False
        for v in order:
            counts: dict = defaultdict(int)
            for w in g.neighbors(v):
                counts[labels[w]] += 1
            if not counts:
                continue
            top = max(counts.values())
            best = [lab for lab, c in counts.items() if c == top]
            if labels[v] in best:
                continue
            labels[v] = min(best)
            changed = True
        if not changed:
            break
    groups: dict = defaultdict(set)
    for v, lab in labels.items():
        groups[lab].add(v)
    return [groups[k] for k in sorted(groups)]


def graph_stats(g: nx.Graph, bipartite_sides: tuple[int, int] | None = None) -> dict:
    v, e = g.number_of_nodes(), g.number_of_edges()
    if bipartite_sides is not None:
        a, b = bipartite_sides
        density = e / (a * b) if a and b else 0.0
    else:
        density = 2 * e / (v * (v - 1)) if v > 1 else 0.0
    modularity = nx.community.modularity(g, label_propagation(g)) if e else 0.0
    tw = treewidth_min_degree(g)[0] if v else 0
    return {"density": density, "modularity": modularity, "treewidth_ub": tw,
            "transitivity": float(nx.transitivity(g))}


def _pct(part: float, whole: float) -> float:
    return 100.0 * part / whole if whole else 0.0


def _var(values: Sequence[float]) -> float:
    return float(statistics.pvariance(values)) if values else 0.0


def _mean(values: Sequence[float]) -> float:
    return statistics.fmean(values) if values else 0.0


def extract_features(p: PolyProblem) -> dict[str, float]:
    """Structural features of an instance, in a fixed column order."""
    n, m = p.num_vars, len(p.constraints)
    polys = p.polynomials()
    monos = sorted({J for poly in polys for J in poly.terms if J}, key=lambda J: (len(J), J))
    nm = len(monos)
    degree = p.degree

    appearances = [0] * n
    for poly in polys:
        for J in poly.terms:
            for j in J.support():
                appearances[j] += 1
    in_monos = [sum(1 for J in monos if j in J) for j in range(n)]
    max_deg = [max((len(J) for J in monos if j in J), default=0) for j in range(n)]
    ranges = [p.box.width(j) for j in range(n)]

    lift = LiftMap(n, degree) if degree >= 2 else None
    rlt_cols = [lift.columns[k] for k in lift.rlt_columns()] if lift else []
    all_cols = len(lift) if lift else n
    possible = math.comb(n + degree, degree) - 1 if n else 0

    coefs = [c for poly in polys for J, c in poly.terms.items() if J]
    con_monos = [sum(1 for J in c.poly.terms if J) for c in p.constraints]

    f: dict[str, float] = {
        "num_vars": n,
        "var_density_variance": _var([k / nm for k in in_monos] if nm else []),
        "range_mean": _mean(ranges),
        "range_median": statistics.median(ranges) if ranges else 0.0,
        "range_variance": _var(ranges),
        "appearances_mean": _mean(appearances),
        "appearances_variance": _var(appearances),
        "pct_vars_not_in_degree_gt1": _pct(sum(d <= 1 for d in max_deg), n),
        "pct_vars_not_in_degree_gt2": _pct(sum(d <= 2 for d in max_deg), n),
        "num_constraints": m,
        "pct_equality_constraints": _pct(sum(c.sense == EQ for c in p.constraints), m),
        "pct_linear_constraints": _pct(sum(c.poly.degree <= 1 for c in p.constraints), m),
        "pct_quadratic_constraints": _pct(sum(c.poly.degree == 2 for c in p.constraints), m),
        "num_monomials": nm,
        "pct_linear_monomials": _pct(sum(len(J) == 1 for J in monos), nm),
        "pct_quadratic_monomials": _pct(sum(len(J) == 2 for J in monos), nm),
        "pct_linear_rlt_vars": _pct(n, all_cols),
        "pct_quadratic_rlt_vars": _pct(sum(len(J) == 2 for J in rlt_cols), all_cols),
        "avg_pct_monomials_per_constraint": _mean([_pct(k, nm) for k in con_monos]),
        "pct_monomials_in_objective": _pct(sum(1 for J in p.objective.terms if J), nm),
        "coef_mean": _mean(coefs),
        "coef_variance": _var(coefs),
        "degree": degree,
        "density": nm / possible if possible else 0.0,
        "vars_per_constraint": n / max(m, 1),
        "vars_per_degree": n / max(degree, 1),
        "rlt_vars_per_constraint": len(rlt_cols) / max(m, 1),
        "monomials_per_constraint": nm / max(m, 1),
    }
    for k, v in graph_stats(_vig(p)).items():
        f[f"vig_{k}"] = v
    g, rows, cols = _cmig(p)
    for k, v in graph_stats(g, (rows, cols)).items():
        f[f"cmig_{k}"] = v
    return f


FEATURE_COLUMNS = [
    "num_vars", "var_density_variance", "range_mean", "range_median", "range_variance",
    "appearances_mean", "appearances_variance", "pct_vars_not_in_degree_gt1",
    "pct_vars_not_in_degree_gt2", "num_constraints", "pct_equality_constraints",
    "pct_linear_constraints", "pct_quadratic_constraints", "num_monomials",
    "pct_linear_monomials", "pct_quadratic_monomials", "pct_linear_rlt_vars",
    "pct_quadratic_rlt_vars", "avg_pct_monomials_per_constraint",
    "pct_monomials_in_objective", "coef_mean", "coef_variance", "degree", "density",
    "vars_per_constraint", "vars_per_degree", "rlt_vars_per_constraint",
    "monomials_per_constraint",
] + [f"{g}_{k}" for g in ("vig", "cmig")
     for k in ("density", "modularity", "treewidth_ub", "transitivity")]


# ---------------------------------------------------------------- export

RUN_COLUMNS = ["instance", "config", "status", "lb", "ub", "gap", "wall_time",
               "nodes_explored", "lp_time_per_node", "pace", "pace_flag", "nlb_pace",
               "nodes_reldiff", "ltime_reldiff"]


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def runs_table(records: Sequence[RunRecord], configs: Sequence[str] | None = None
               ) -> list[dict]:
    """Rows of runs.csv; relative differences are against the first config."""
    if not records:
        return []
    configs, grid = group_records(records, configs)
    ref = configs[0]
    rows = []
    for inst, row in grid.items():
        paces = {c: pace(row[c]) for c in configs}
        valid = {c: p.value for c, p in paces.items() if p.flag is None and p.value > 0}
        nlb = nlb_pace(valid) if valid else {}
        for c in configs:
            r = row[c]
            rows.append({
                "instance": inst, "config": c, "status": r.status, "lb": r.lb, "ub": r.ub,
                "gap": r.gap(), "wall_time": r.wall_time, "nodes_explored": r.nodes_explored,
                "lp_time_per_node": r.lp_time_per_node, "pace": paces[c].value,
                "pace_flag": paces[c].flag or "", "nlb_pace": nlb.get(c, math.nan),
                "nodes_reldiff": reldiff(r.nodes_explored, row[ref].nodes_explored),
                "ltime_reldiff": reldiff(r.lp_time_per_node, row[ref].lp_time_per_node),
            })
    return rows


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def export_runs_csv(records: Sequence[RunRecord], configs: Sequence[str] | None = None) -> str:
    return to_csv(runs_table(records, configs), RUN_COLUMNS)


def export_features_csv(features: dict[str, dict[str, float]]) -> str:
    """One row per instance; the columns are those of :func:`extract_features`."""
    rows = [{"instance": k, **v} for k, v in sorted(features.items())]
    return to_csv(rows, ["instance"] + FEATURE_COLUMNS)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def metrics_json(report: MetricsReport) -> str:
    return json.dumps(_json_safe(report.to_dict()), indent=2)


# ---------------------------------------------------------------- runner


def config_for(label: str, base: SolverConfig) -> SolverConfig:
    """``loose`` or ``tight``, on top of the shared solver settings."""
    return SolverConfig(epsilon=base.epsilon, time_limit=base.time_limit,
                        bound_mode=BoundMode(label), obbt=base.obbt, fbbt=base.fbbt,
                        theta_tolerance=base.theta_tolerance)


def run_bench(paths: Sequence[Path], configs: Sequence[str], base: SolverConfig
              ) -> list[RunRecord]:
    records = []
    for path in sorted(paths):
        p = load_problem(path)
        for label in configs:
            res = solve(p, config_for(label, base))
            records.append(RunRecord.from_result(p.name or Path(path).stem, label, res))
    return records


def write_bench_outputs(out: Path, records: Sequence[RunRecord], configs: Sequence[str],
                        features: dict[str, dict[str, float]]) -> MetricsReport:
    out.mkdir(parents=True, exist_ok=True)
    report = compute_metrics(records, configs)
    (out / "runs.csv").write_text(export_runs_csv(records, configs))
    (out / "features.csv").write_text(export_features_csv(features))
    (out / "metrics.json").write_text(metrics_json(report) + "\n")
    return report
