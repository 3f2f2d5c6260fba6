#!/usr/bin/env python3
"""
Synthetic Corpus Generator
==========================
Schema-valid corpora with known gold structures and noise-controlled scores,
for running the decoders and experiments without the annotated corpora.

Scores per prediction site:
    binary       (1 - epsilon) * gold + epsilon * U[0, 1]
    categorical  (1 - epsilon) * one_hot(gold) + epsilon * Dirichlet(1, ..., 1)

With flip = 0 and epsilon < 0.5 the per-site argmax equals gold. flip > 0
replaces the gold target by a wrong class before mixing, which models base
classifier errors.

Usage:
    python joint_runner.py synth --kind microtext --count 112 --n 5 corpus.jsonl
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from argument_corpus import (
    ATTACK, CLAIM, ESSAYS, FUNCTIONS, MICROTEXT, NONE, PREMISE, SUPPORT, VARIANTS,
    EssayInstance, EssayLabels, EssayScores, Instance,
    MicrotextInstance, MicrotextLabels, MicrotextScores,
)

logger = logging.getLogger(__name__)

MIN_MICROTEXT_SEGMENTS = 3
MAX_REJECTIONS = 10000


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float = 0.0
    seed: int = 0
    flip: float = 0.0

    def __post_init__(self):
        for name in ("epsilon", "flip"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value!r} outside [0, 1]")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _mix_binary(rng: np.random.Generator, gold: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    target = gold.astype(float)
    if noise.flip > 0:
        flips = rng.random(gold.shape) < noise.flip
        target = np.where(flips, 1.0 - target, target)
    return (1.0 - noise.epsilon) * target + noise.epsilon * rng.random(gold.shape)


def _mix_categorical(rng: np.random.Generator, gold: np.ndarray, k: int, noise: NoiseSpec) -> np.ndarray:
    target = gold.copy()
    if noise.flip > 0:
        flips = rng.random(len(gold)) < noise.flip
        shift = rng.integers(1, k, size=len(gold))
        target = np.where(flips, (target + shift) % k, target)
    one_hot = np.eye(k)[target]
    return (1.0 - noise.epsilon) * one_hot + noise.epsilon * rng.dirichlet(np.ones(k), size=len(gold))


def _min_essay_components(variant: str) -> int:
    return 2 if variant == "mod3" else 1


# =============================================================================
# MICROTEXT
# =============================================================================

def _sample_microtext_tree(n: int, rng: np.random.Generator) -> Tuple[int, Dict[int, int], List[str], List[bool]]:
    for _ in range(MAX_REJECTIONS):
        order = rng.permutation(n)
        central = int(order[0])
        head: Dict[int, int] = {}
        fu = [NONE] * n
        ro = [False] * n
        ro[central] = True
        for pos in range(1, n):
            node = int(order[pos])
            parent = int(order[rng.integers(pos)])
            head[node] = parent
            fu[node] = SUPPORT if rng.random() < 0.5 else ATTACK
            ro[node] = ro[parent] if fu[node] == SUPPORT else not ro[parent]

        has_opponent = not all(ro)
        cc_supported = any(p == central and fu[i] == SUPPORT for i, p in head.items())
        if has_opponent and cc_supported:
            return central, head, fu, ro
    raise RuntimeError(f"no valid microtext tree after {MAX_REJECTIONS} draws (n={n})")


def gen_microtext(n: int, noise: NoiseSpec, rng: Optional[np.random.Generator] = None,
                  instance_id: str = "mt-synthetic") -> MicrotextInstance:
    """
    Sample one microtext: a random argument tree rooted at a uniform central
    claim, resampled until it has an opponent and a supported central claim.

    Raises:
        ValueError: n < 3 (no text that short satisfies the constraints)
    """
    if n < MIN_MICROTEXT_SEGMENTS:
        raise ValueError(f"microtext needs at least {MIN_MICROTEXT_SEGMENTS} segments, got {n}")
    rng = noise.rng() if rng is None else rng

    central, head, fu, ro = _sample_microtext_tree(n, rng)
    at = np.zeros((n, n), dtype=bool)
    for node, parent in head.items():
        at[node, parent] = True
    cc = np.arange(n) == central

    gold = MicrotextLabels(
        cc=tuple(bool(x) for x in cc),
        ro=tuple(ro),
        fu=tuple(fu),
        at=tuple(tuple(bool(x) for x in row) for row in at),
    )
    fu_index = np.array([FUNCTIONS.index(f) for f in fu], dtype=int)
    scores = MicrotextScores.create(
        cc=_mix_binary(rng, cc, noise),
        ro=_mix_binary(rng, np.array(ro), noise),
        fu=_mix_categorical(rng, fu_index, len(FUNCTIONS), noise),
        at=_mix_binary(rng, at, noise),
    )
    return MicrotextInstance(id=instance_id, n=n, gold=gold, scores=scores)


# =============================================================================
# ESSAYS
# =============================================================================

def gen_essay(n: int, variant: str, noise: NoiseSpec, rng: Optional[np.random.Generator] = None,
              instance_id: str = "es-synthetic", isolate_rate: float = 0.0) -> EssayInstance:
    """
    Sample one essay paragraph for a variant.

    Claims are a uniform subset; each premise supports a claim or an earlier
    premise. Under mod3 the first premises give every claim a direct support.
    Under mod1, isolate_rate leaves premises without an outgoing relation.

    Raises:
        ValueError: unknown variant, n below the variant minimum, or
            isolate_rate outside [0, 1]
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown essay variant {variant!r}")
    if n < _min_essay_components(variant):
        raise ValueError(f"{variant} needs at least {_min_essay_components(variant)} components, got {n}")
    if not 0.0 <= isolate_rate <= 1.0:
        raise ValueError(f"isolate_rate={isolate_rate!r} outside [0, 1]")
    rng = noise.rng() if rng is None else rng

    max_claims = n // 2 if variant == "mod3" else n
    k = int(rng.integers(1, max_claims + 1))
    order = [int(x) for x in rng.permutation(n)]
    claims, premises = order[:k], order[k:]

    rel = np.zeros((n, n), dtype=bool)
    targets = list(claims)
    for pos, premise in enumerate(premises):
        if variant == "mod3" and pos < k:
            target = claims[pos]
        else:
            target = targets[int(rng.integers(len(targets)))]
        isolated = variant == "mod1" and isolate_rate > 0 and rng.random() < isolate_rate
        if not isolated:
            rel[premise, target] = True
        targets.append(premise)

    is_claim = np.zeros(n, dtype=bool)
    is_claim[claims] = True
    gold = EssayLabels(
        ctype=tuple(CLAIM if x else PREMISE for x in is_claim),
        rel=tuple(tuple(bool(x) for x in row) for row in rel),
    )
    claim_scores = _mix_binary(rng, is_claim, noise)
    scores = EssayScores.create(
        claim=claim_scores,
        premise=1.0 - claim_scores,
        sup=_mix_binary(rng, rel, noise),
    )
    return EssayInstance(id=instance_id, n=n, variant=variant, gold=gold, scores=scores)


# =============================================================================
# CORPORA
# =============================================================================

def gen_corpus(kind: str, count: int, n_range: Tuple[int, int], noise: NoiseSpec,
               variant: str = "mod1", isolate_rate: float = 0.0) -> List[Instance]:
    """
    Draw count instances from one generator seeded by noise.seed.

    Args:
        kind: microtext or essays
        count: number of instances (0 gives an empty corpus)
        n_range: inclusive (lo, hi) size range, sampled uniformly per instance
        noise: score noise and seed
        variant: essay variant
        isolate_rate: mod1 isolated-premise rate

    Returns:
        Instances with ids mt-0000, mt-0001, ... or es-0000, ...
    """
    lo, hi = n_range
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if lo > hi:
        raise ValueError(f"empty size range {lo}..{hi}")
    if kind == MICROTEXT:
        minimum = MIN_MICROTEXT_SEGMENTS
    elif kind == ESSAYS:
        minimum = _min_essay_components(variant)
    else:
        raise ValueError(f"unknown corpus kind {kind!r}")
    if lo < minimum:
        raise ValueError(f"{kind} needs sizes of at least {minimum}, got {lo}")

    rng = noise.rng()
    instances: List[Instance] = []
    for index in range(count):
        n = int(rng.integers(lo, hi + 1))
        if kind == MICROTEXT:
            instances.append(gen_microtext(n, noise, rng, instance_id=f"mt-{index:04d}"))
        else:
            instances.append(gen_essay(n, variant, noise, rng, instance_id=f"es-{index:04d}", isolate_rate=isolate_rate))

    logger.info(f"[SYNTH] Generated {count} {kind} instances (n={lo}..{hi}, epsilon={noise.epsilon}, "
                f"flip={noise.flip}, seed={noise.seed})")
    return instances
