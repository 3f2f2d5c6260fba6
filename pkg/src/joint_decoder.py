#!/usr/bin/env python3
"""
Joint Decoder - single entry point over all decoding methods
============================================================
    separate   independent per-task argmax
    mst        evidence-graph maximum spanning arborescence
    ilp        joint integer linear program

Every method returns a Prediction; the objective of non-ILP labels is their
value under the ILP objective with the same weights, so methods are directly
comparable.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import List, Optional, Sequence

from tqdm import tqdm

import essay_ilp
import microtext_ilp
from argument_corpus import EssayInstance, Instance, JointWeights, Labels, MicrotextInstance
from evidence_graph_mst import decode_mst_essays, decode_mst_microtext

logger = logging.getLogger(__name__)

SEPARATE = "separate"
MST = "mst"
ILP = "ilp"
METHODS = (SEPARATE, MST, ILP)

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class Prediction:
    id: str
    method: str
    labels: Optional[Labels]
    status: str = STATUS_OK
    objective: Optional[float] = None
    nodes_explored: int = 0

    @property
    def feasible(self) -> bool:
        return self.labels is not None


def _encoder(instance: Instance):
    return essay_ilp if isinstance(instance, EssayInstance) else microtext_ilp


def decode(instance: Instance, method: str, weights: JointWeights) -> Prediction:
    """
    Decode one instance.

    Args:
        instance: microtext or essay instance
        method: one of METHODS
        weights: combination weights (w1..w4 microtext, v / beta essays)

    Returns:
        Prediction; labels are None only for an infeasible ILP.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    encoder = _encoder(instance)

    if method == ILP:
        labels, solution = encoder.decode_ilp(instance, weights)
        if labels is None:
            return Prediction(instance.id, method, None, STATUS_INFEASIBLE, None, solution.nodes_explored)
        return Prediction(instance.id, method, labels, STATUS_OK, solution.objective_value, solution.nodes_explored)

    if method == SEPARATE:
        labels = encoder.decode_separate(instance)
    elif isinstance(instance, MicrotextInstance):
        labels, _ = decode_mst_microtext(instance, weights)
    else:
        labels, _ = decode_mst_essays(instance, weights.beta)
    return Prediction(instance.id, method, labels, STATUS_OK, encoder.labels_objective(instance, labels, weights))


def decode_corpus(instances: Sequence[Instance], method: str, weights: JointWeights,
                  jobs: int = 1, progress: bool = False) -> List[Prediction]:
    """
    Decode every instance, fanning out over a thread pool when jobs > 1.

    Returns:
        Predictions in input order, whatever the completion order.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    results: List[Optional[Prediction]] = [None] * len(instances)
    bar = tqdm(total=len(instances), desc=f"{method:>8}", unit="inst", disable=not progress, leave=False)

    if jobs == 1:
        for position, instance in enumerate(instances):
            results[position] = decode(instance, method, weights)
            bar.update(1)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = {
                executor.submit(decode, instance, method, weights): position
                for position, instance in enumerate(instances)
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                bar.update(1)
    bar.close()

    infeasible = sum(1 for p in results if not p.feasible)
    if infeasible:
        logger.info(f"[DECODE] {method}: {infeasible}/{len(instances)} instances infeasible")
    return results
