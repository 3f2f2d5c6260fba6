#!/usr/bin/env python3
"""
Microtext Joint ILP
===================
Joint decoding of central claim (cc), role (ro), function (fu) and
attachment (at) for short argumentative texts.

Variables per segment i: a_i (central claim), b_i (proponent),
c_i / e_i / g_i (function support / attack / none); per ordered pair i != j:
d_ij (i attaches to j) and the auxiliary s_ij = d_ij AND c_i (i supports j).

Constraint families (names as reported by audits):
    one-central-claim      exactly one central claim
    at-least-one-opponent  some segment is an opponent
    one-function           exactly one function per segment
    cc-is-proponent        central claim has the proponent role
    cc-has-no-function     central claim has function none
    single-attachment      central claim attaches nowhere, others exactly once
    cc-has-support         central claim has a supporting segment
    support-link           s_ij = d_ij AND c_i
    no-mutual-attachment   no pair attaches both ways
    support-same-role      a support edge joins equal roles
    attack-opposite-role   an attack edge joins opposite roles
"""

import dataclasses
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from argument_corpus import (
    ATTACK, FUNCTIONS, NONE, SUPPORT,
    JointWeights, MicrotextInstance, MicrotextLabels,
)
from evidence_graph_mst import decode_mst_microtext
from ilp_solver import EQ, GE, LE, IlpProblem, IlpSolution, ProblemBuilder, objective_value, solve, violated_constraints

logger = logging.getLogger(__name__)

Grid = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class MicrotextVarMap:
    """Variable indices; d and s are n x n grids with -1 on the diagonal."""
    n: int
    a: Tuple[int, ...]
    b: Tuple[int, ...]
    c: Tuple[int, ...]
    e: Tuple[int, ...]
    g: Tuple[int, ...]
    d: Grid
    s: Grid

    @property
    def n_vars(self) -> int:
        return 5 * self.n + 2 * self.n * (self.n - 1)

    def pairs(self):
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    yield i, j


def _pair_grid(builder: ProblemBuilder, n: int, prefix: str) -> Grid:
    return tuple(
        tuple(builder.add_var(f"{prefix}{i}_{j}") if i != j else -1 for j in range(n))
        for i in range(n)
    )


@lru_cache(maxsize=64)
def constraint_system(n: int) -> Tuple[IlpProblem, MicrotextVarMap]:
    """
    All constraints for an n-segment text, with a zero objective.

    The system depends only on n, so it is built once per length and shared.
    """
    builder = ProblemBuilder()
    a = tuple(builder.add_var(f"a{i}") for i in range(n))
    b = tuple(builder.add_var(f"b{i}") for i in range(n))
    c = tuple(builder.add_var(f"c{i}") for i in range(n))
    e = tuple(builder.add_var(f"e{i}") for i in range(n))
    g = tuple(builder.add_var(f"g{i}") for i in range(n))
    d = _pair_grid(builder, n, "d")
    s = _pair_grid(builder, n, "s")
    varmap = MicrotextVarMap(n=n, a=a, b=b, c=c, e=e, g=g, d=d, s=s)

    def others(i):
        return [j for j in range(n) if j != i]

    builder.add_constraint([(a[i], 1) for i in range(n)], EQ, 1, "one-central-claim")
    builder.add_constraint([(b[i], 1) for i in range(n)], LE, n - 1, "at-least-one-opponent")

    for i in range(n):
        builder.add_constraint([(c[i], 1), (e[i], 1), (g[i], 1)], EQ, 1, f"one-function:{i}")
    for i in range(n):
        builder.add_constraint([(a[i], 1), (b[i], -1)], LE, 0, f"cc-is-proponent:{i}")
    for i in range(n):
        builder.add_constraint([(a[i], 1), (g[i], -1)], EQ, 0, f"cc-has-no-function:{i}")
    for i in range(n):
        builder.add_constraint([(a[i], 1)] + [(d[i][j], 1) for j in others(i)], EQ, 1, f"single-attachment:{i}")

    for j in range(n):
        builder.add_constraint([(a[j], 1)] + [(s[i][j], -1) for i in others(j)], LE, 0, f"cc-has-support:{j}")
    for i, j in varmap.pairs():
        name = f"support-link:{i},{j}"
        builder.add_constraint([(s[i][j], 1), (d[i][j], -1)], LE, 0, name)
        builder.add_constraint([(s[i][j], 1), (c[i], -1)], LE, 0, name)
        builder.add_constraint([(s[i][j], 1), (d[i][j], -1), (c[i], -1)], GE, -1, name)

    for i in range(n):
        for j in range(i + 1, n):
            builder.add_constraint([(d[i][j], 1), (d[j][i], 1)], LE, 1, f"no-mutual-attachment:{i},{j}")

    # d_ij AND c_i  =>  b_i == b_j
    for i, j in varmap.pairs():
        name = f"support-same-role:{i},{j}"
        builder.add_constraint([(b[i], 1), (b[j], -1), (d[i][j], 1), (c[i], 1)], LE, 2, name)
        builder.add_constraint([(b[j], 1), (b[i], -1), (d[i][j], 1), (c[i], 1)], LE, 2, name)

    # d_ij AND e_i  =>  b_i != b_j
    for i, j in varmap.pairs():
        name = f"attack-opposite-role:{i},{j}"
        builder.add_constraint([(b[i], 1), (b[j], 1), (d[i][j], 1), (e[i], 1)], LE, 3, name)
        builder.add_constraint([(b[i], 1), (b[j], 1), (d[i][j], -1), (e[i], -1)], GE, -1, name)

    return builder.build(), varmap


def encode(instance: MicrotextInstance, weights: JointWeights) -> Tuple[IlpProblem, MicrotextVarMap]:
    """
    Build the joint ILP for one text.

    Objective: w1*CC_i a_i + w2*RO_i b_i + w3*(SUP_i c_i + ATT_i e_i + NONE_i g_i)
    + w4*AT_ij d_ij, summed over segments and ordered pairs.
    """
    problem, varmap = constraint_system(instance.n)
    scores = instance.scores
    objective = np.zeros(problem.n_vars)
    objective[list(varmap.a)] = weights.w1 * scores.cc
    objective[list(varmap.b)] = weights.w2 * scores.ro
    objective[list(varmap.c)] = weights.w3 * scores.fu[:, 0]
    objective[list(varmap.e)] = weights.w3 * scores.fu[:, 1]
    objective[list(varmap.g)] = weights.w3 * scores.fu[:, 2]
    for i, j in varmap.pairs():
        objective[varmap.d[i][j]] = weights.w4 * scores.at[i, j]
    return dataclasses.replace(problem, objective=tuple(float(x) for x in objective)), varmap


def decode_solution(varmap: MicrotextVarMap, solution: IlpSolution) -> MicrotextLabels:
    """Map an optimal assignment back to labels."""
    if not solution.is_optimal:
        raise ValueError(f"cannot decode a {solution.status} solution")
    x = solution.assignment
    n = varmap.n

    fu = []
    for i in range(n):
        active = [f for f, var in zip(FUNCTIONS, (varmap.c[i], varmap.e[i], varmap.g[i])) if x[var]]
        if len(active) != 1:
            raise ValueError(f"segment {i} has {len(active)} active functions")
        fu.append(active[0])

    return MicrotextLabels(
        cc=tuple(bool(x[varmap.a[i]]) for i in range(n)),
        ro=tuple(bool(x[varmap.b[i]]) for i in range(n)),
        fu=tuple(fu),
        at=tuple(tuple(i != j and bool(x[varmap.d[i][j]]) for j in range(n)) for i in range(n)),
    )


def decode_separate(instance: MicrotextInstance) -> MicrotextLabels:
    """Independent per-task argmax; no cross-task constraints."""
    scores = instance.scores
    n = instance.n
    at = scores.at >= 0.5
    return MicrotextLabels(
        cc=tuple(bool(p >= 0.5) for p in scores.cc),
        ro=tuple(bool(p >= 0.5) for p in scores.ro),
        fu=tuple(FUNCTIONS[int(k)] for k in np.argmax(scores.fu, axis=1)),
        at=tuple(tuple(i != j and bool(at[i, j]) for j in range(n)) for i in range(n)),
    )


def assignment_from_labels(varmap: MicrotextVarMap, labels: MicrotextLabels) -> List[int]:
    x = [0] * varmap.n_vars
    for i in range(varmap.n):
        x[varmap.a[i]] = int(labels.cc[i])
        x[varmap.b[i]] = int(labels.ro[i])
        x[varmap.c[i]] = int(labels.fu[i] == SUPPORT)
        x[varmap.e[i]] = int(labels.fu[i] == ATTACK)
        x[varmap.g[i]] = int(labels.fu[i] == NONE)
    for i, j in varmap.pairs():
        x[varmap.d[i][j]] = int(labels.at[i][j])
        x[varmap.s[i][j]] = int(labels.at[i][j] and labels.fu[i] == SUPPORT)
    return x


def labels_objective(instance: MicrotextInstance, labels: MicrotextLabels, weights: JointWeights) -> float:
    """Objective value of an arbitrary labeling under the joint ILP objective."""
    problem, varmap = encode(instance, weights)
    return objective_value(problem, assignment_from_labels(varmap, labels))


def warm_start(instance: MicrotextInstance, weights: JointWeights,
               problem: IlpProblem, varmap: MicrotextVarMap) -> Optional[List[int]]:
    """Best feasible assignment among the separate and MST labelings, if any."""
    best_value, best = None, None
    mst_labels, _ = decode_mst_microtext(instance, weights)
    for labels in (decode_separate(instance), mst_labels):
        x = assignment_from_labels(varmap, labels)
        if violated_constraints(problem, x):
            continue
        value = objective_value(problem, x)
        if best_value is None or value > best_value:
            best_value, best = value, x
    return best


def decode_ilp(instance: MicrotextInstance, weights: JointWeights,
               seeded: bool = True) -> Tuple[Optional[MicrotextLabels], IlpSolution]:
    """
    Encode, solve and decode; labels are None when the text is infeasible.

    With seeded=True the search starts from warm_start(); the optimum value is
    the same either way, only the choice among equal optima can differ.
    """
    problem, varmap = encode(instance, weights)
    incumbent = warm_start(instance, weights, problem, varmap) if seeded and instance.n >= 3 else None
    solution = solve(problem, incumbent)
    if not solution.is_optimal:
        logger.info(f"[DECODE] {instance.id}: infeasible ({instance.n} segments)")
        return None, solution
    return decode_solution(varmap, solution), solution

