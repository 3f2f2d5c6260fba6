import itertools
import math
import statistics
import time
from functools import lru_cache

import numpy as np
import pytest

from argument_corpus import ATTACK, FUNCTIONS, NONE, SUPPORT, JointWeights, MicrotextLabels, check_label_constraints
from conftest import random_microtext
from ilp_solver import INFEASIBLE, IlpSolution, OPTIMAL
from microtext_ilp import (
    assignment_from_labels, constraint_system, decode_ilp, decode_separate, decode_solution,
    encode, labels_objective,
)
from synthetic_corpus import NoiseSpec, gen_corpus

EQUAL = JointWeights()


def best_feasible_labeling(instance, weights):
    """Exhaustive search over every labeling with one central claim and one target per other segment."""
    n = instance.n
    best_value, best_labels = -math.inf, None
    for central in range(n):
        others = [i for i in range(n) if i != central]
        for targets in itertools.product(*[[j for j in range(n) if j != i] for i in others]):
            head = dict(zip(others, targets))
            for functions in itertools.product((SUPPORT, ATTACK), repeat=n - 1):
                fu = dict(zip(others, functions))
                for roles in itertools.product((True, False), repeat=n):
                    labels = MicrotextLabels(
                        cc=tuple(i == central for i in range(n)),
                        ro=roles,
                        fu=tuple(NONE if i == central else fu[i] for i in range(n)),
                        at=tuple(tuple(head.get(i) == j for j in range(n)) for i in range(n)),
                    )
                    if check_label_constraints(labels):
                        continue
                    value = labels_objective(instance, labels, weights)
                    if value > best_value:
                        best_value, best_labels = value, labels
    return best_value, best_labels


@lru_cache(maxsize=None)
def feasible_label_features(n):
    """
    Indicator features of every feasible n-segment labeling, stacked as rows.

    Feasibility is checked directly on the tree: the central claim is a
    proponent and receives a support, no two segments attach to each other,
    supports keep the role and attacks flip it, and some segment is an opponent.
    """
    rows = []
    for central in range(n):
        others = [i for i in range(n) if i != central]
        for targets in itertools.product(*[[j for j in range(n) if j != i] for i in others]):
            head = dict(zip(others, targets))
            if any(head.get(head[i]) == i for i in others):
                continue
            for functions in itertools.product((SUPPORT, ATTACK), repeat=n - 1):
                fu = dict(zip(others, functions))
                if not any(head[i] == central and fu[i] == SUPPORT for i in others):
                    continue
                for roles in itertools.product((True, False), repeat=n):
                    if all(roles) or not roles[central]:
                        continue
                    if any((roles[i] == roles[head[i]]) != (fu[i] == SUPPORT) for i in others):
                        continue
                    cc = np.eye(n)[central]
                    fu_onehot = np.zeros((n, len(FUNCTIONS)))
                    fu_onehot[central, FUNCTIONS.index(NONE)] = 1.0
                    at = np.zeros((n, n))
                    for i in others:
                        fu_onehot[i, FUNCTIONS.index(fu[i])] = 1.0
                        at[i, head[i]] = 1.0
                    rows.append((cc, np.array(roles, dtype=float), fu_onehot.ravel(), at.ravel()))
    return tuple(np.array([r[k] for r in rows]) for k in range(4))


def best_feasible_value(instance, weights):
    cc, ro, fu, at = feasible_label_features(instance.n)
    s = instance.scores
    values = (weights.w1 * cc @ s.cc + weights.w2 * ro @ s.ro
              + weights.w3 * fu @ s.fu.ravel() + weights.w4 * at @ s.at.ravel())
    return float(values.max())


def test_three_segment_program_size():
    problem, varmap = constraint_system(3)
    assert problem.n_vars == 27 == varmap.n_vars
    assert len(problem.constraints) == 62
    assert problem.var_names[:3] == ("a0", "a1", "a2")
    assert "d1_0" in problem.var_names and "s2_1" in problem.var_names


@pytest.mark.parametrize("n", [1, 2])
def test_short_texts_are_infeasible(rng, n):
    for _ in range(5):
        labels, solution = decode_ilp(random_microtext(rng, n), EQUAL)
        assert labels is None
        assert solution.status == INFEASIBLE


def test_one_hot_gold_is_recovered(make_microtext, gold_microtext3):
    instance = make_microtext(gold_microtext3)
    labels, solution = decode_ilp(instance, EQUAL)
    assert labels == gold_microtext3
    assert solution.objective_value == pytest.approx(2.0)
    assert labels_objective(instance, gold_microtext3, EQUAL) == pytest.approx(2.0)


def test_assignment_maps_back_to_labels(gold_microtext4):
    _, varmap = constraint_system(4)
    assignment = tuple(assignment_from_labels(varmap, gold_microtext4))
    solution = IlpSolution(status=OPTIMAL, assignment=assignment, objective_value=0.0)
    assert decode_solution(varmap, solution) == gold_microtext4


def test_decode_solution_rejects_infeasible():
    _, varmap = constraint_system(3)
    with pytest.raises(ValueError):
        decode_solution(varmap, IlpSolution(status=INFEASIBLE))


def test_objective_weights_scale_scores(make_microtext, gold_microtext3):
    instance = make_microtext(gold_microtext3)
    weights = JointWeights(w1=1.0, w2=0.0, w3=0.0, w4=0.0)
    problem, varmap = encode(instance, weights)
    assert problem.objective[varmap.a[0]] == 1.0
    assert problem.objective[varmap.b[0]] == 0.0
    assert all(problem.objective[varmap.s[i][j]] == 0.0 for i, j in varmap.pairs())


def test_separate_baseline_thresholds_and_argmax(make_microtext, gold_microtext3):
    instance = make_microtext(gold_microtext3)
    assert decode_separate(instance) == gold_microtext3

    scores = instance.scores.create(
        cc=[0.9, 0.2, 0.3], ro=[0.6, 0.4, 0.5], fu=[[0.2, 0.2, 0.6]] * 3, at=np.full((3, 3), 0.1)
    )
    labels = decode_separate(instance.__class__(id="x", n=3, gold=gold_microtext3, scores=scores))
    assert labels.cc == (True, False, False)
    assert labels.ro == (True, False, True)
    assert labels.fu == (NONE, NONE, NONE)
    assert not any(any(row) for row in labels.at)


def test_matches_label_space_search(rng):
    for trial in range(15):
        instance = random_microtext(rng, 3, f"mt-{trial}")
        weights = EQUAL if trial % 2 else JointWeights(*rng.random(4))
        labels, solution = decode_ilp(instance, weights)
        expected, _ = best_feasible_labeling(instance, weights)
        assert solution.objective_value == pytest.approx(expected, abs=1e-8)
        assert labels_objective(instance, labels, weights) == pytest.approx(expected, abs=1e-8)


def test_matches_feasible_label_table(rng):
    for trial in range(40):
        instance = random_microtext(rng, 3, f"mt-{trial}")
        weights = EQUAL if trial % 2 else JointWeights(*rng.random(4))
        _, solution = decode_ilp(instance, weights)
        assert solution.objective_value == pytest.approx(best_feasible_value(instance, weights), abs=1e-8)


@pytest.mark.slow
def test_matches_feasible_label_table_on_two_hundred_texts(rng):
    for trial in range(200):
        instance = random_microtext(rng, 3 + trial % 2, f"mt-{trial}")
        weights = EQUAL if trial % 3 else JointWeights(*rng.random(4))
        labels, solution = decode_ilp(instance, weights)
        expected = best_feasible_value(instance, weights)
        assert solution.objective_value == pytest.approx(expected, abs=1e-8)
        assert labels_objective(instance, labels, weights) == pytest.approx(expected, abs=1e-8)


def test_decoded_labels_satisfy_constraints():
    corpus = gen_corpus("microtext", 60, (3, 6), NoiseSpec(epsilon=0.9, seed=5, flip=0.3))
    for instance in corpus:
        labels, _ = decode_ilp(instance, EQUAL)
        assert labels is not None
        assert check_label_constraints(labels) == []


@pytest.mark.slow
def test_decoded_labels_satisfy_constraints_at_scale():
    corpus = gen_corpus("microtext", 1000, (3, 6), NoiseSpec(epsilon=1.0, seed=6))
    for instance in corpus:
        labels, _ = decode_ilp(instance, EQUAL)
        assert check_label_constraints(labels) == []


def test_scaling_all_weights_keeps_the_labels(rng):
    for trial in range(20):
        instance = random_microtext(rng, int(rng.integers(3, 6)), f"mt-{trial}")
        weights = JointWeights(*(0.05 + 0.25 * rng.random(4)))
        labels, _ = decode_ilp(instance, weights)
        for factor in (0.25, 3.0):
            scaled = JointWeights(*(factor * w for w in (weights.w1, weights.w2, weights.w3, weights.w4)))
            assert decode_ilp(instance, scaled)[0] == labels


def test_support_variables_follow_attachment_and_function(rng):
    for trial in range(20):
        instance = random_microtext(rng, int(rng.integers(3, 6)), f"mt-{trial}")
        _, solution = decode_ilp(instance, EQUAL)
        _, varmap = constraint_system(instance.n)
        x = solution.assignment
        for i, j in varmap.pairs():
            assert x[varmap.s[i][j]] == x[varmap.d[i][j]] * x[varmap.c[i]]


def test_warm_start_does_not_change_the_optimum(rng):
    for trial in range(30):
        instance = random_microtext(rng, int(rng.integers(3, 6)), f"mt-{trial}")
        seeded = decode_ilp(instance, EQUAL)[1]
        cold = decode_ilp(instance, EQUAL, seeded=False)[1]
        assert seeded.objective_value == pytest.approx(cold.objective_value, abs=1e-9)
        assert seeded.nodes_explored <= cold.nodes_explored


@pytest.mark.slow
def test_decoding_throughput_on_five_segment_texts():
    corpus = gen_corpus("microtext", 112, (5, 5), NoiseSpec(epsilon=0.4, seed=60, flip=0.2))
    elapsed = []
    for instance in corpus:
        start = time.perf_counter()
        labels, _ = decode_ilp(instance, EQUAL)
        elapsed.append(time.perf_counter() - start)
        assert labels is not None
    assert sum(elapsed) < 10.0
    assert statistics.median(elapsed) < 0.1
