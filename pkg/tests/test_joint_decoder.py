import pytest

import essay_ilp
import microtext_ilp
from argument_corpus import VARIANTS, JointWeights
from conftest import random_microtext
from joint_decoder import ILP, METHODS, SEPARATE, STATUS_INFEASIBLE, decode, decode_corpus
from synthetic_corpus import NoiseSpec, gen_corpus

EQUAL = JointWeights()


def test_unknown_method(make_microtext, gold_microtext3):
    with pytest.raises(ValueError):
        decode(make_microtext(gold_microtext3), "crf", EQUAL)


def test_non_ilp_objective_uses_ilp_objective(rng):
    instance = random_microtext(rng, 4)
    prediction = decode(instance, SEPARATE, EQUAL)
    assert prediction.labels == microtext_ilp.decode_separate(instance)
    assert prediction.objective == pytest.approx(microtext_ilp.labels_objective(instance, prediction.labels, EQUAL))


def test_infeasible_ilp_prediction(rng):
    prediction = decode(random_microtext(rng, 2, "mt-short"), ILP, EQUAL)
    assert not prediction.feasible
    assert prediction.status == STATUS_INFEASIBLE
    assert prediction.objective is None


def test_every_method_recovers_noise_free_gold():
    noise = NoiseSpec(epsilon=0.0, seed=12)
    corpora = [gen_corpus("microtext", 15, (3, 6), noise)]
    corpora += [gen_corpus("essays", 15, (2, 6), noise, variant=v) for v in VARIANTS]
    for corpus in corpora:
        for method in METHODS:
            for instance in corpus:
                assert decode(instance, method, EQUAL).labels == instance.gold, (method, instance.id)


def test_thread_pool_keeps_input_order():
    corpus = gen_corpus("essays", 25, (2, 6), NoiseSpec(epsilon=0.6, seed=13), variant="mod2")
    serial = decode_corpus(corpus, ILP, EQUAL, jobs=1)
    threaded = decode_corpus(corpus, ILP, EQUAL, jobs=4)
    assert [p.id for p in threaded] == [i.id for i in corpus]
    assert threaded == serial
    assert all(p.labels == essay_ilp.decode_ilp(i, EQUAL)[0] for p, i in zip(serial, corpus))


def test_jobs_must_be_positive():
    with pytest.raises(ValueError):
        decode_corpus([], ILP, EQUAL, jobs=0)
