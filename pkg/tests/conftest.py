"""Shared fixtures: gold structures, one-hot instances, seeded generators."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from argument_corpus import (  # noqa: E402
    ATTACK, CLAIM, FUNCTIONS, NONE, PREMISE, SUPPORT,
    EssayInstance, EssayLabels, EssayScores, MicrotextInstance, MicrotextLabels, MicrotextScores,
)


def matrix(n, edges):
    """n x n boolean rows with True at each (i, j) in edges"""
    return tuple(tuple((i, j) in edges for j in range(n)) for i in range(n))


def one_hot_microtext(gold: MicrotextLabels, instance_id: str = "mt-test") -> MicrotextInstance:
    n = gold.n
    scores = MicrotextScores.create(
        cc=[float(x) for x in gold.cc],
        ro=[float(x) for x in gold.ro],
        fu=[[float(f == name) for name in FUNCTIONS] for f in gold.fu],
        at=[[float(x) for x in row] for row in gold.at],
    )
    return MicrotextInstance(id=instance_id, n=n, gold=gold, scores=scores)


def one_hot_essay(gold: EssayLabels, variant: str, instance_id: str = "es-test") -> EssayInstance:
    claim = [float(c == CLAIM) for c in gold.ctype]
    scores = EssayScores.create(
        claim=claim,
        premise=[1.0 - c for c in claim],
        sup=[[float(x) for x in row] for row in gold.rel],
    )
    return EssayInstance(id=instance_id, n=gold.n, variant=variant, gold=gold, scores=scores)


@pytest.fixture
def gold_microtext3():
    """seg0 central claim; seg1 supports seg0 (pro); seg2 attacks seg0 (opp)"""
    return MicrotextLabels(
        cc=(True, False, False),
        ro=(True, True, False),
        fu=(NONE, SUPPORT, ATTACK),
        at=matrix(3, {(1, 0), (2, 0)}),
    )


@pytest.fixture
def gold_microtext4():
    """gold_microtext3 plus seg3 attacking seg2 (pro again)"""
    return MicrotextLabels(
        cc=(True, False, False, False),
        ro=(True, True, False, True),
        fu=(NONE, SUPPORT, ATTACK, ATTACK),
        at=matrix(4, {(1, 0), (2, 0), (3, 2)}),
    )


@pytest.fixture
def gold_essay3():
    """seg0 claim supported by seg1 and seg2"""
    return EssayLabels(ctype=(CLAIM, PREMISE, PREMISE), rel=matrix(3, {(1, 0), (2, 0)}))


@pytest.fixture
def make_microtext():
    return one_hot_microtext


@pytest.fixture
def make_essay():
    return one_hot_essay


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_microtext(rng: np.random.Generator, n: int, instance_id: str = "mt-random") -> MicrotextInstance:
    """Uniform random scores; gold is a placeholder star (only its shape matters)."""
    gold = MicrotextLabels(
        cc=(True,) + (False,) * (n - 1),
        ro=(True,) * n,
        fu=(NONE,) + (SUPPORT,) * (n - 1),
        at=matrix(n, {(i, 0) for i in range(1, n)}),
    )
    scores = MicrotextScores.create(
        cc=rng.random(n),
        ro=rng.random(n),
        fu=rng.dirichlet(np.ones(len(FUNCTIONS)), size=n),
        at=rng.random((n, n)),
    )
    return MicrotextInstance(id=instance_id, n=n, gold=gold, scores=scores)


def random_essay(rng: np.random.Generator, n: int, variant: str, instance_id: str = "es-random") -> EssayInstance:
    gold = EssayLabels(ctype=(CLAIM,) * n, rel=matrix(n, set()))
    claim = rng.random(n)
    scores = EssayScores.create(claim=claim, premise=1.0 - claim, sup=rng.random((n, n)))
    return EssayInstance(id=instance_id, n=n, variant=variant, gold=gold, scores=scores)
