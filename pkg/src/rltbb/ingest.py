"""JSON problem files and order-reversal transforms."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .core import EQ, GE, Box, Constraint, Multiset, Polynomial, PolyProblem


class ProblemFormatError(ValueError):
    """Invalid problem document; ``field`` names the offending JSON field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFormatError(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ProblemFormatError(field, "value must be finite")
    return float(value)


def _terms(raw, field: str, num_vars: int) -> Polynomial:
    if not isinstance(raw, list):
        raise ProblemFormatError(field, "expected a list of terms")
    terms = []
    for i, term in enumerate(raw):
        where = f"{field}[{i}]"
        if not isinstance(term, dict) or "vars" not in term or "coef" not in term:
            raise ProblemFormatError(where, "term needs 'vars' and 'coef'")
        vars_ = term["vars"]
        if not isinstance(vars_, list):
            raise ProblemFormatError(where + ".vars", "expected a list of indices")
        for j in vars_:
            if isinstance(j, bool) or not isinstance(j, int):
                raise ProblemFormatError(where + ".vars", f"index {j!r} is not an integer")
            if not 0 <= j < num_vars:
                raise ProblemFormatError(where + ".vars", f"index {j} out of range [0, {num_vars})")
        terms.append((vars_, _number(term["coef"], where + ".coef")))
    return Polynomial.from_terms(terms)


def parse_problem(text: str) -> PolyProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError("document", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ProblemFormatError("document", "top level must be an object")
    for key in ("num_vars", "objective", "lower", "upper"):
        if key not in doc:
            raise ProblemFormatError(key, "missing field")

    n = doc["num_vars"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ProblemFormatError("num_vars", "must be a positive integer")

    bounds = {}
    for key in ("lower", "upper"):
        vals = doc[key]
        if not isinstance(vals, list) or len(vals) != n:
            raise ProblemFormatError(key, f"expected a list of {n} numbers")
        bounds[key] = [_number(v, f"{key}[{j}]") for j, v in enumerate(vals)]
    for j, (lo, hi) in enumerate(zip(bounds["lower"], bounds["upper"])):
        if lo < 0:
            raise ProblemFormatError(f"lower[{j}]", f"negative lower bound {lo}")
        if lo > hi:
            raise ProblemFormatError(f"upper[{j}]", f"upper bound {hi} below lower bound {lo}")

    objective = _terms(doc["objective"], "objective", n)

    raw_cons = doc.get("constraints", [])
    if not isinstance(raw_cons, list):
        raise ProblemFormatError("constraints", "expected a list")
    ge, eq = [], []
    for r, con in enumerate(raw_cons):
        where = f"constraints[{r}]"
        if not isinstance(con, dict):
            raise ProblemFormatError(where, "expected an object")
        for key in ("terms", "sense", "rhs"):
            if key not in con:
                raise ProblemFormatError(f"{where}.{key}", "missing field")
        sense = con["sense"]
        if sense not in (GE, EQ):
            raise ProblemFormatError(f"{where}.sense", f"unknown sense {sense!r} (use 'ge' or 'eq')")
        c = Constraint(_terms(con["terms"], f"{where}.terms", n), sense,
                       _number(con["rhs"], f"{where}.rhs"))
        (ge if sense == GE else eq).append(c)

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ProblemFormatError("name", "must be a string")
    return PolyProblem(n, objective, tuple(ge + eq),
                       Box(bounds["lower"], bounds["upper"]), name)


def load_problem(path) -> PolyProblem:
    p = parse_problem(Path(path).read_text(encoding="utf-8"))
    if not p.name:
        p = PolyProblem(p.num_vars, p.objective, p.constraints, p.box, Path(path).stem)
    return p


def _dump_terms(poly: Polynomial) -> list[dict]:
    keys = sorted(poly.terms, key=lambda k: (len(k), k))
    return [{"vars": list(k), "coef": poly.terms[k]} for k in keys]


def problem_to_dict(p: PolyProblem) -> dict:
    doc = {
        "num_vars": p.num_vars,
        "objective": _dump_terms(p.objective),
        "constraints": [
            {"terms": _dump_terms(c.poly), "sense": c.sense, "rhs": c.rhs}
            for c in p.constraints
        ],
        "lower": list(p.box.lower),
        "upper": list(p.box.upper),
    }
    if p.name:
        doc = {"name": p.name, **doc}
    return doc


def serialize_problem(p: PolyProblem) -> str:
    return json.dumps(problem_to_dict(p), indent=2)


def _remap(poly: Polynomial, perm) -> Polynomial:
    return Polynomial({Multiset(perm[j] for j in k): c for k, c in poly.terms.items()})


def reverse_variables(p: PolyProblem) -> PolyProblem:
    """Relabel variable ``j`` as ``n - 1 - j`` everywhere."""
    n = p.num_vars
    perm = [n - 1 - j for j in range(n)]
    cons = tuple(Constraint(_remap(c.poly, perm), c.sense, c.rhs) for c in p.constraints)
    box = Box(p.box.lower[::-1], p.box.upper[::-1])
    return PolyProblem(n, _remap(p.objective, perm), cons, box, p.name)


def reverse_constraints(p: PolyProblem) -> PolyProblem:
    """Reverse constraint order separately among inequalities and equalities."""
    ge = [c for c in p.constraints if c.sense == GE]
    eq = [c for c in p.constraints if c.sense == EQ]
    return PolyProblem(p.num_vars, p.objective, tuple(ge[::-1] + eq[::-1]), p.box, p.name)
