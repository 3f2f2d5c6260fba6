#!/usr/bin/env python3
"""
Essay Paragraph Joint ILP
=========================
Joint decoding of component type (claim / premise) and support relations
for one essay paragraph, under three corpus variants:

    mod1  common constraints only (isolated claims and premises allowed)
    mod2  + every premise supports something
    mod3  + every claim is supported

Constraint families:
    claim-or-premise       a_i + b_i = 1
    no-mutual-relation     c_ij + c_ji <= 1
    relation-from-premise  b_i >= c_ij
    at-least-one-claim     sum a_j >= 1
    relation-budget        sum c_ij <= comp_num (= n)
    premise-supports       b_i <= sum_j c_ij          (mod2, mod3)
    claim-has-premise      a_j <= sum_i c_ij          (mod3)
"""

import dataclasses
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from argument_corpus import CLAIM, PREMISE, VARIANTS, EssayInstance, EssayLabels, JointWeights
from ilp_solver import EQ, GE, LE, IlpProblem, IlpSolution, ProblemBuilder, objective_value, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EssayVarMap:
    """a (claim) and b (premise) per component; c is an n x n grid, -1 on the diagonal."""
    n: int
    a: Tuple[int, ...]
    b: Tuple[int, ...]
    c: Tuple[Tuple[int, ...], ...]

    @property
    def comp_num(self) -> int:
        return self.n

    @property
    def n_vars(self) -> int:
        return 2 * self.n + self.n * (self.n - 1)

    def pairs(self):
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    yield i, j


@lru_cache(maxsize=128)
def constraint_system(n: int, variant: str) -> Tuple[IlpProblem, EssayVarMap]:
    """Constraints active for (n, variant), with a zero objective."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown essay variant {variant!r}")

    builder = ProblemBuilder()
    a = tuple(builder.add_var(f"a{i}") for i in range(n))
    b = tuple(builder.add_var(f"b{i}") for i in range(n))
    c = tuple(
        tuple(builder.add_var(f"c{i}_{j}") if i != j else -1 for j in range(n))
        for i in range(n)
    )
    varmap = EssayVarMap(n=n, a=a, b=b, c=c)

    for i in range(n):
        builder.add_constraint([(a[i], 1), (b[i], 1)], EQ, 1, f"claim-or-premise:{i}")
    for i in range(n):
        for j in range(i + 1, n):
            builder.add_constraint([(c[i][j], 1), (c[j][i], 1)], LE, 1, f"no-mutual-relation:{i},{j}")
    for i, j in varmap.pairs():
        builder.add_constraint([(b[i], 1), (c[i][j], -1)], GE, 0, f"relation-from-premise:{i},{j}")
    builder.add_constraint([(a[j], 1) for j in range(n)], GE, 1, "at-least-one-claim")
    builder.add_constraint([(c[i][j], 1) for i, j in varmap.pairs()], LE, varmap.comp_num, "relation-budget")

    if variant in ("mod2", "mod3"):
        for i in range(n):
            terms = [(b[i], 1)] + [(c[i][j], -1) for j in range(n) if j != i]
            builder.add_constraint(terms, LE, 0, f"premise-supports:{i}")
    if variant == "mod3":
        for j in range(n):
            terms = [(a[j], 1)] + [(c[i][j], -1) for i in range(n) if i != j]
            builder.add_constraint(terms, LE, 0, f"claim-has-premise:{j}")

    return builder.build(), varmap


def encode(instance: EssayInstance, weights: JointWeights) -> Tuple[IlpProblem, EssayVarMap]:
    """
    Objective: v * sum(a_i C_i + b_i P_i) + (1 - v) * sum(c_ij SUP_ij)
    """
    problem, varmap = constraint_system(instance.n, instance.variant)
    scores = instance.scores
    v = weights.v
    objective = np.zeros(problem.n_vars)
    objective[list(varmap.a)] = v * scores.claim
    objective[list(varmap.b)] = v * scores.premise
    for i, j in varmap.pairs():
        objective[varmap.c[i][j]] = (1.0 - v) * scores.sup[i, j]
    return dataclasses.replace(problem, objective=tuple(float(x) for x in objective)), varmap


def decode_solution(varmap: EssayVarMap, solution: IlpSolution) -> EssayLabels:
    if not solution.is_optimal:
        raise ValueError(f"cannot decode a {solution.status} solution")
    x = solution.assignment
    n = varmap.n
    return EssayLabels(
        ctype=tuple(CLAIM if x[varmap.a[i]] else PREMISE for i in range(n)),
        rel=tuple(tuple(i != j and bool(x[varmap.c[i][j]]) for j in range(n)) for i in range(n)),
    )


def decode_separate(instance: EssayInstance) -> EssayLabels:
    """Claim iff C_i >= P_i (ties go to claim); relation iff SUP_ij >= 0.5."""
    scores = instance.scores
    n = instance.n
    rel = scores.sup >= 0.5
    return EssayLabels(
        ctype=tuple(CLAIM if scores.claim[i] >= scores.premise[i] else PREMISE for i in range(n)),
        rel=tuple(tuple(i != j and bool(rel[i, j]) for j in range(n)) for i in range(n)),
    )


def assignment_from_labels(varmap: EssayVarMap, labels: EssayLabels) -> List[int]:
    x = [0] * varmap.n_vars
    for i in range(varmap.n):
        x[varmap.a[i]] = int(labels.ctype[i] == CLAIM)
        x[varmap.b[i]] = int(labels.ctype[i] == PREMISE)
    for i, j in varmap.pairs():
        x[varmap.c[i][j]] = int(labels.rel[i][j])
    return x


def labels_objective(instance: EssayInstance, labels: EssayLabels, weights: JointWeights) -> float:
    problem, varmap = encode(instance, weights)
    return objective_value(problem, assignment_from_labels(varmap, labels))


def decode_ilp(instance: EssayInstance, weights: JointWeights) -> Tuple[Optional[EssayLabels], IlpSolution]:
    problem, varmap = encode(instance, weights)
    solution = solve(problem)
    if not solution.is_optimal:
        logger.info(f"[DECODE] {instance.id}: infeasible under {instance.variant} ({instance.n} components)")
        return None, solution
    return decode_solution(varmap, solution), solution
