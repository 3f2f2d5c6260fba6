import dataclasses
import itertools
import math
from functools import lru_cache

import numpy as np
import pytest

from argument_corpus import CLAIM, PREMISE, VARIANTS, EssayInstance, EssayLabels, EssayScores, JointWeights, check_label_constraints
from conftest import matrix, random_essay
from essay_ilp import (
    constraint_system, decode_ilp, decode_separate, decode_solution, encode, labels_objective,
)
from ilp_solver import INFEASIBLE, OPTIMAL, IlpSolution, brute_force
from synthetic_corpus import NoiseSpec, gen_corpus

EQUAL = JointWeights()


def single_component(variant, claim_score):
    return EssayInstance(
        id="es-1", n=1, variant=variant,
        gold=EssayLabels(ctype=(CLAIM,), rel=((False,),)),
        scores=EssayScores.create(claim=[claim_score], premise=[1.0 - claim_score], sup=[[0.0]]),
    )


def best_feasible_labeling(instance, weights):
    n = instance.n
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    best = -math.inf
    for ctype in itertools.product((CLAIM, PREMISE), repeat=n):
        for bits in itertools.product((False, True), repeat=len(pairs)):
            on = {pair for pair, bit in zip(pairs, bits) if bit}
            labels = EssayLabels(ctype=ctype, rel=matrix(n, on))
            if check_label_constraints(labels, instance.variant):
                continue
            best = max(best, labels_objective(instance, labels, weights))
    return best


@lru_cache(maxsize=None)
def feasible_label_table(n, variant):
    """
    Every (claim vector, relation vector) pair for n components, with a mask of
    the feasible ones: relations leave premises only, never run both ways and
    number at most n; some component is a claim; under mod2 every premise
    supports something and under mod3 every claim is also supported.
    """
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    claims = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    rels = (np.arange(2 ** len(pairs))[:, None] >> np.arange(len(pairs))) & 1
    src = np.array([[int(i == p[0]) for i in range(n)] for p in pairs]).reshape(len(pairs), n)
    dst = np.array([[int(j == p[1]) for j in range(n)] for p in pairs]).reshape(len(pairs), n)
    out_rel = (rels @ src > 0)[None, :, :]
    in_rel = (rels @ dst > 0)[None, :, :]

    index = {pair: k for k, pair in enumerate(pairs)}
    mutual = np.zeros(len(rels), dtype=bool)
    for i, j in pairs:
        if i < j:
            mutual |= (rels[:, index[i, j]] & rels[:, index[j, i]]).astype(bool)

    claim = claims.astype(bool)[:, None, :]
    ok = ((rels.sum(axis=1) <= n) & ~mutual)[None, :] & claims.any(axis=1)[:, None]
    ok = ok & ~(claim & out_rel).any(axis=2)
    if variant in ("mod2", "mod3"):
        ok = ok & (claim | out_rel).all(axis=2)
    if variant == "mod3":
        ok = ok & (~claim | in_rel).all(axis=2)
    return claims, rels, tuple(pairs), ok


def best_feasible_value(instance, weights):
    """Best objective over the feasible table; -inf when nothing is feasible."""
    claims, rels, pairs, ok = feasible_label_table(instance.n, instance.variant)
    s = instance.scores
    comp = weights.v * (claims @ s.claim + (1 - claims) @ s.premise)
    relation = (1.0 - weights.v) * (rels @ np.array([s.sup[i, j] for i, j in pairs], dtype=float))
    return float(np.where(ok, comp[:, None] + relation[None, :], -np.inf).max())


def decoded_value(instance, weights):
    _, solution = decode_ilp(instance, weights)
    return solution.objective_value if solution.is_optimal else -math.inf


@pytest.mark.parametrize("variant, expected", [("mod1", 14), ("mod2", 17), ("mod3", 20)])
def test_constraint_counts(variant, expected):
    problem, varmap = constraint_system(3, variant)
    assert problem.n_vars == 12 == varmap.n_vars
    assert len(problem.constraints) == expected


def test_unknown_variant():
    with pytest.raises(ValueError):
        constraint_system(3, "mod4")


def test_single_component_is_a_claim_under_mod1():
    labels, solution = decode_ilp(single_component("mod1", 0.9), EQUAL)
    assert solution.status == OPTIMAL
    assert labels == EssayLabels(ctype=(CLAIM,), rel=((False,),))


def test_single_component_is_infeasible_under_mod3():
    labels, solution = decode_ilp(single_component("mod3", 0.9), EQUAL)
    assert labels is None
    assert solution.status == INFEASIBLE


def test_assignment_mapping():
    _, varmap = constraint_system(3, "mod1")
    x = [0] * varmap.n_vars
    x[varmap.a[0]] = 1
    x[varmap.b[1]] = 1
    x[varmap.b[2]] = 1
    x[varmap.c[2][1]] = 1
    labels = decode_solution(varmap, IlpSolution(status=OPTIMAL, assignment=tuple(x), objective_value=0.0))
    assert labels.ctype == (CLAIM, PREMISE, PREMISE)
    assert labels.rel == matrix(3, {(2, 1)})


def test_one_hot_gold_is_recovered(make_essay, gold_essay3):
    instance = make_essay(gold_essay3, "mod3")
    labels, solution = decode_ilp(instance, EQUAL)
    assert labels == gold_essay3
    assert solution.objective_value == pytest.approx(2.5)


def test_v_balances_components_and_relations(make_essay, gold_essay3):
    problem, varmap = encode(make_essay(gold_essay3, "mod1"), JointWeights(v=1.0))
    assert problem.objective[varmap.a[0]] == 1.0
    assert all(problem.objective[varmap.c[i][j]] == 0.0 for i, j in varmap.pairs())


def test_separate_baseline():
    instance = EssayInstance(
        id="es-2", n=2, variant="mod1",
        gold=EssayLabels(ctype=(CLAIM, PREMISE), rel=matrix(2, {(1, 0)})),
        scores=EssayScores.create(claim=[0.6, 0.3], premise=[0.4, 0.7], sup=[[0.1, 0.1], [0.1, 0.1]]),
    )
    labels = decode_separate(instance)
    assert labels.ctype == (CLAIM, PREMISE)
    assert labels.rel == matrix(2, set())


def test_separate_recovers_one_hot_gold(make_essay, gold_essay3):
    assert decode_separate(make_essay(gold_essay3, "mod2")) == gold_essay3


@pytest.mark.parametrize("variant", VARIANTS)
def test_matches_label_space_search(rng, variant):
    for trial in range(25):
        instance = random_essay(rng, 3, variant, f"es-{trial}")
        weights = EQUAL.with_values(v=float(rng.random()))
        _, solution = decode_ilp(instance, weights)
        assert solution.objective_value == pytest.approx(best_feasible_labeling(instance, weights), abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("variant", VARIANTS)
def test_matches_brute_force_four_components(rng, variant):
    for trial in range(10):
        instance = random_essay(rng, 4, variant, f"es-{trial}")
        problem, _ = encode(instance, EQUAL)
        _, solution = decode_ilp(instance, EQUAL)
        assert solution.objective_value == pytest.approx(brute_force(problem).objective_value, abs=1e-8)


@pytest.mark.parametrize("variant", VARIANTS)
def test_decoded_labels_satisfy_constraints(variant):
    corpus = gen_corpus("essays", 60, (2, 6), NoiseSpec(epsilon=1.0, seed=8), variant=variant)
    for instance in corpus:
        labels, _ = decode_ilp(instance, EQUAL)
        assert labels is not None
        assert check_label_constraints(labels, variant) == []
        for i in range(instance.n):
            for j in range(instance.n):
                if labels.rel[i][j]:
                    assert labels.ctype[i] == PREMISE


@pytest.mark.parametrize("variant", VARIANTS)
def test_matches_feasible_label_table(rng, variant):
    for trial in range(30):
        instance = random_essay(rng, 2 + trial % 2, variant, f"es-{trial}")
        weights = EQUAL.with_values(v=float(rng.random()))
        assert decoded_value(instance, weights) == pytest.approx(best_feasible_value(instance, weights), abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("variant", VARIANTS)
def test_matches_feasible_label_table_on_two_hundred_paragraphs(rng, variant):
    for trial in range(200):
        instance = random_essay(rng, 2 + trial % 3, variant, f"es-{trial}")
        weights = EQUAL if trial % 2 else EQUAL.with_values(v=float(rng.random()))
        labels, solution = decode_ilp(instance, weights)
        expected = best_feasible_value(instance, weights)
        assert solution.is_optimal
        assert solution.objective_value == pytest.approx(expected, abs=1e-8)
        assert labels_objective(instance, labels, weights) == pytest.approx(expected, abs=1e-8)


def test_stricter_variants_never_score_higher(rng):
    for trial in range(40):
        base = random_essay(rng, int(rng.integers(2, 6)), "mod1", f"es-{trial}")
        weights = EQUAL.with_values(v=float(rng.random()))
        mod1, mod2, mod3 = (decoded_value(dataclasses.replace(base, variant=v), weights) for v in VARIANTS)
        assert mod3 <= mod2 + 1e-9
        assert mod2 <= mod1 + 1e-9


def test_component_weight_one_reduces_to_component_argmax(rng):
    checked = 0
    for trial in range(40):
        instance = random_essay(rng, int(rng.integers(2, 6)), "mod1", f"es-{trial}")
        if not any(instance.scores.claim >= instance.scores.premise):
            continue
        labels, _ = decode_ilp(instance, EQUAL.with_values(v=1.0))
        assert labels.ctype == decode_separate(instance).ctype
        checked += 1
    assert checked > 0
