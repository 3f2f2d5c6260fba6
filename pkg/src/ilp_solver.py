#!/usr/bin/env python3
"""
0-1 ILP Solver - Exact Branch-and-Bound
=======================================
Maximizes a linear objective over binary variables subject to linear
constraints. Built for the small joint-decoding programs of this repo
(tens of variables, hundreds of constraints).

Features:
- Depth-first branch-and-bound with interval constraint propagation
- Deterministic branching (descending |objective|, then index)
- Vectorised brute-force oracle for verification (n_vars <= 24)
- LP-style text dump for manual inspection
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
BRUTE_FORCE_LIMIT = 24

LE = "<="
EQ = "="
GE = ">="
SENSES = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


class IlpError(ValueError):
    """Raised for malformed problems or oracle misuse."""


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef * x[var] for var, coef in terms) <sense> rhs"""
    terms: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def lhs(self, assignment: Sequence[int]) -> float:
        return math.fsum(coef * assignment[var] for var, coef in self.terms)

    def is_satisfied(self, assignment: Sequence[int], tol: float = TOLERANCE) -> bool:
        value = self.lhs(assignment)
        if self.sense == LE:
            return value <= self.rhs + tol
        if self.sense == GE:
            return value >= self.rhs - tol
        return abs(value - self.rhs) <= tol

    def bounds(self) -> Tuple[float, float]:
        """(lo, hi) so that lo <= lhs <= hi"""
        if self.sense == LE:
            return -math.inf, self.rhs
        if self.sense == GE:
            return self.rhs, math.inf
        return self.rhs, self.rhs


@dataclass(frozen=True)
class IlpProblem:
    n_vars: int
    objective: Tuple[float, ...]
    constraints: Tuple[LinearConstraint, ...]
    var_names: Tuple[str, ...] = ()

    def check(self):
        """Raise IlpError if the problem breaks its own invariants."""
        if self.n_vars < 0:
            raise IlpError(f"n_vars must be >= 0, got {self.n_vars}")
        if len(self.objective) != self.n_vars:
            raise IlpError(f"objective has {len(self.objective)} coefficients for {self.n_vars} variables")
        if not all(math.isfinite(c) for c in self.objective):
            raise IlpError("objective has non-finite coefficients")
        if self.var_names and len(self.var_names) != self.n_vars:
            raise IlpError("var_names length does not match n_vars")

        for constraint in self.constraints:
            label = constraint.name or "<unnamed>"
            if constraint.sense not in SENSES:
                raise IlpError(f"constraint {label}: unknown sense {constraint.sense!r}")
            if not math.isfinite(constraint.rhs):
                raise IlpError(f"constraint {label}: non-finite rhs")
            seen = set()
            for var, coef in constraint.terms:
                if not 0 <= var < self.n_vars:
                    raise IlpError(f"constraint {label}: variable {var} out of range")
                if var in seen:
                    raise IlpError(f"constraint {label}: duplicate variable {var}")
                if not math.isfinite(coef):
                    raise IlpError(f"constraint {label}: non-finite coefficient on variable {var}")
                seen.add(var)

    def name_of(self, var: int) -> str:
        return self.var_names[var] if self.var_names else f"x{var}"


@dataclass(frozen=True)
class IlpSolution:
    status: str
    assignment: Optional[Tuple[int, ...]] = None
    objective_value: Optional[float] = None
    nodes_explored: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


class ProblemBuilder:
    """
    Incremental construction of an IlpProblem.

    Encoders allocate named variables, set objective coefficients and add
    constraints; build() freezes the result.
    """

    def __init__(self):
        self._names: List[str] = []
        self._objective: List[float] = []
        self._constraints: List[LinearConstraint] = []

    @property
    def n_vars(self) -> int:
        return len(self._names)

    def add_var(self, name: str, coef: float = 0.0) -> int:
        self._names.append(name)
        self._objective.append(float(coef))
        return len(self._names) - 1

    def add_constraint(self, terms: Sequence[Tuple[int, float]], sense: str, rhs: float, name: str):
        self._constraints.append(
            LinearConstraint(tuple((int(v), float(c)) for v, c in terms), sense, float(rhs), name)
        )

    def build(self) -> IlpProblem:
        return IlpProblem(
            n_vars=len(self._names),
            objective=tuple(self._objective),
            constraints=tuple(self._constraints),
            var_names=tuple(self._names),
        )


def violated_constraints(problem: IlpProblem, assignment: Sequence[int]) -> List[str]:
    """Names of the constraints the assignment breaks, in problem order."""
    return [c.name for c in problem.constraints if not c.is_satisfied(assignment)]


def objective_value(problem: IlpProblem, assignment: Sequence[int]) -> float:
    return math.fsum(c * x for c, x in zip(problem.objective, assignment))


# ========== Branch and Bound ==========

class _BranchAndBound:
    """
    Search state for one solve() call.

    Every constraint is kept as lo <= lhs <= hi together with the smallest and
    largest lhs reachable from the current partial assignment. Fixing a
    variable updates those intervals for the rows it appears in; a row whose
    interval leaves [lo, hi] is a conflict, and a free variable whose either
    value would push the row out is forced to the other one.
    """

    def __init__(self, problem: IlpProblem):
        n = problem.n_vars
        self.n = n
        self.obj = [float(c) for c in problem.objective]
        self.rows: List[List[Tuple[int, float]]] = []
        self.lo: List[float] = []
        self.hi: List[float] = []
        self.min_lhs: List[float] = []
        self.max_lhs: List[float] = []
        self.var_rows: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
        self.trivially_infeasible = False

        for constraint in problem.constraints:
            lo, hi = constraint.bounds()
            terms = [(v, c) for v, c in constraint.terms if c != 0.0]
            if not terms:
                if not lo - TOLERANCE <= 0.0 <= hi + TOLERANCE:
                    self.trivially_infeasible = True
                continue
            r = len(self.rows)
            self.rows.append(terms)
            self.lo.append(lo)
            self.hi.append(hi)
            self.min_lhs.append(sum(min(0.0, c) for _, c in terms))
            self.max_lhs.append(sum(max(0.0, c) for _, c in terms))
            for v, c in terms:
                self.var_rows[v].append((r, c))

        self.groups = self._at_most_one_groups(problem)
        self.group_of = [-1] * n
        for g, members in enumerate(self.groups):
            for v in members:
                self.group_of[v] = g

        self.order = sorted(range(n), key=lambda j: (-abs(self.obj[j]), j))
        self.value = [-1] * n
        self.trail: List[int] = []
        self.fixed_obj = 0.0
        self.queued = [False] * len(self.rows)

        self.nodes = 0
        self.best_value: Optional[float] = None
        self.best_assignment: Optional[Tuple[int, ...]] = None

    @staticmethod
    def _at_most_one_groups(problem: IlpProblem) -> List[List[int]]:
        # unit coefficients and hi <= 1: at most one member can be 1
        taken = set()
        groups = []
        for constraint in problem.constraints:
            if constraint.sense == GE or constraint.rhs > 1.0 + TOLERANCE:
                continue
            if not constraint.terms or any(c != 1.0 for _, c in constraint.terms):
                continue
            members = [v for v, _ in constraint.terms if v not in taken]
            if len(members) < 2:
                continue
            taken.update(members)
            groups.append(members)
        return groups

    # ----- assignment bookkeeping -----

    def _assign(self, var: int, val: int, stack: List[int]):
        self.value[var] = val
        self.trail.append(var)
        if val:
            self.fixed_obj += self.obj[var]
        for r, a in self.var_rows[var]:
            if val:
                self.min_lhs[r] += max(a, 0.0)
                self.max_lhs[r] += min(a, 0.0)
            else:
                self.min_lhs[r] -= min(a, 0.0)
                self.max_lhs[r] -= max(a, 0.0)
            if not self.queued[r]:
                self.queued[r] = True
                stack.append(r)

    def _undo(self, mark: int):
        while len(self.trail) > mark:
            var = self.trail.pop()
            val = self.value[var]
            self.value[var] = -1
            if val:
                self.fixed_obj -= self.obj[var]
            for r, a in self.var_rows[var]:
                if val:
                    self.min_lhs[r] -= max(a, 0.0)
                    self.max_lhs[r] -= min(a, 0.0)
                else:
                    self.min_lhs[r] += min(a, 0.0)
                    self.max_lhs[r] += max(a, 0.0)

    def _propagate(self, stack: List[int]) -> bool:
        ok = True
        while stack:
            r = stack.pop()
            self.queued[r] = False
            if not ok:
                continue
            if self.min_lhs[r] > self.hi[r] + TOLERANCE or self.max_lhs[r] < self.lo[r] - TOLERANCE:
                ok = False
                continue
            for var, a in self.rows[r]:
                if self.value[var] != -1:
                    continue
                room_up = self.hi[r] - self.min_lhs[r]
                room_down = self.max_lhs[r] - self.lo[r]
                forced = -1
                if a > 0.0:
                    if a > room_up + TOLERANCE:
                        forced = 0
                    elif a > room_down + TOLERANCE:
                        forced = 1
                else:
                    if -a > room_up + TOLERANCE:
                        forced = 1
                    elif -a > room_down + TOLERANCE:
                        forced = 0
                if forced != -1:
                    self._assign(var, forced, stack)
                    if self.min_lhs[r] > self.hi[r] + TOLERANCE or self.max_lhs[r] < self.lo[r] - TOLERANCE:
                        ok = False
                        break
        return ok

    def _fix(self, var: int, val: int) -> bool:
        stack: List[int] = []
        self._assign(var, val, stack)
        return self._propagate(stack)

    # ----- search -----

    def _bound(self) -> float:
        bound = self.fixed_obj
        group_best = [0.0] * len(self.groups)
        for var in range(self.n):
            if self.value[var] != -1:
                continue
            c = self.obj[var]
            if c <= 0.0:
                continue
            g = self.group_of[var]
            if g < 0:
                bound += c
            elif c > group_best[g]:
                group_best[g] = c
        return bound + sum(group_best)

    def _search(self, start: int):
        self.nodes += 1
        if self.best_value is not None and self._bound() <= self.best_value + TOLERANCE:
            return

        pos = start
        while pos < self.n and self.value[self.order[pos]] != -1:
            pos += 1
        if pos == self.n:
            self.best_value = self.fixed_obj
            self.best_assignment = tuple(self.value)
            return

        var = self.order[pos]
        first = 1 if self.obj[var] > 0.0 else 0
        for val in (first, 1 - first):
            mark = len(self.trail)
            if self._fix(var, val):
                self._search(pos + 1)
            self._undo(mark)

    def seed(self, assignment: Tuple[int, ...], value: float):
        """Start from a known feasible assignment; only strictly better leaves replace it."""
        self.best_assignment = tuple(assignment)
        self.best_value = value

    def run(self) -> Tuple[Optional[Tuple[int, ...]], int]:
        if self.trivially_infeasible:
            return None, 0
        # rows can already be tight before any branching (e.g. sum <= 0)
        stack = list(range(len(self.rows)))
        for r in stack:
            self.queued[r] = True
        if not self._propagate(stack):
            return None, 1
        self._search(0)
        return self.best_assignment, self.nodes


def solve(problem: IlpProblem, incumbent: Optional[Sequence[int]] = None) -> IlpSolution:
    """
    Solve a 0-1 ILP exactly.

    Args:
        problem: the program to maximize
        incumbent: optional 0/1 assignment used as the starting best solution
            when it satisfies every constraint (ignored otherwise); it is
            returned when nothing strictly better exists

    Returns:
        IlpSolution with status optimal (assignment + objective value) or
        infeasible. Identical inputs always yield identical assignments.

    Raises:
        IlpError: on malformed problems (non-finite coefficients, bad indices)
            or an incumbent of the wrong length
    """
    problem.check()
    search = _BranchAndBound(problem)
    if incumbent is not None:
        if len(incumbent) != problem.n_vars:
            raise IlpError(f"incumbent has {len(incumbent)} values, problem has {problem.n_vars} variables")
        start = tuple(int(x) for x in incumbent)
        if all(x in (0, 1) for x in start) and not violated_constraints(problem, start):
            search.seed(start, objective_value(problem, start))
        else:
            logger.debug("[SOLVER] incumbent violates constraints, searching from scratch")
    assignment, nodes = search.run()

    if assignment is None:
        logger.debug(f"[SOLVER] infeasible after {nodes} nodes ({problem.n_vars} vars)")
        return IlpSolution(status=INFEASIBLE, nodes_explored=nodes)

    value = objective_value(problem, assignment)
    logger.debug(f"[SOLVER] optimum {value:.6f} after {nodes} nodes ({problem.n_vars} vars)")
    return IlpSolution(status=OPTIMAL, assignment=assignment, objective_value=value, nodes_explored=nodes)


# ========== Brute-Force Oracle ==========

def brute_force(problem: IlpProblem, chunk_bits: int = 16) -> IlpSolution:
    """
    Enumerate all 2^n assignments in lexicographic order.

    Ties within TOLERANCE go to the lexicographically smallest assignment.

    Raises:
        IlpError: if n_vars > 24 or the problem is malformed
    """
    problem.check()
    n = problem.n_vars
    if n > BRUTE_FORCE_LIMIT:
        raise IlpError(f"brute force limited to {BRUTE_FORCE_LIMIT} variables, got {n}")

    m = len(problem.constraints)
    coef_matrix = np.zeros((m, n))
    lo = np.empty(m)
    hi = np.empty(m)
    for r, constraint in enumerate(problem.constraints):
        for var, coef in constraint.terms:
            coef_matrix[r, var] = coef
        lo[r], hi[r] = constraint.bounds()
    objective = np.asarray(problem.objective, dtype=float)

    total = 1 << n
    chunk = min(total, 1 << chunk_bits)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)

    best_value: Optional[float] = None
    best_row: Optional[np.ndarray] = None
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        rows = ((index[:, None] >> shifts) & 1).astype(float)
        lhs = rows @ coef_matrix.T
        feasible = np.all((lhs >= lo - TOLERANCE) & (lhs <= hi + TOLERANCE), axis=1)
        if not feasible.any():
            continue
        values = np.where(feasible, rows @ objective, -np.inf)
        top = values.max()
        k = int(np.flatnonzero(values >= top - TOLERANCE)[0])
        if best_value is None or values[k] > best_value + TOLERANCE:
            best_value = float(values[k])
            best_row = rows[k]

    if best_row is None:
        return IlpSolution(status=INFEASIBLE, nodes_explored=total)

    assignment = tuple(int(x) for x in best_row)
    return IlpSolution(
        status=OPTIMAL,
        assignment=assignment,
        objective_value=objective_value(problem, assignment),
        nodes_explored=total,
    )


# ========== Debug Dump ==========

def _format_terms(problem: IlpProblem, terms) -> str:
    if not terms:
        return "0"
    return " ".join(f"{coef:+.6g} {problem.name_of(var)}" for var, coef in terms)


def format_lp(problem: IlpProblem) -> str:
    """LP-style plain text: objective line, one named constraint per line."""
    lines = ["maximize"]
    objective_terms = [(v, c) for v, c in enumerate(problem.objective) if c != 0.0]
    lines.append(f"  obj: {_format_terms(problem, objective_terms)}")
    lines.append("subject to")
    for i, constraint in enumerate(problem.constraints):
        name = constraint.name or f"c{i}"
        lines.append(f"  {name}: {_format_terms(problem, constraint.terms)} {constraint.sense} {constraint.rhs:.6g}")
    lines.append("binary")
    lines.append("  " + " ".join(problem.name_of(v) for v in range(problem.n_vars)))
    lines.append("end")
    return "\n".join(lines) + "\n"
