#!/usr/bin/env python3
"""
Joint Evaluation - F1, Cross-Validation, Significance, Simulations
==================================================================
Features:
- Per-task F1 pooled over instances (class-mean primary, positive class kept)
- Macro-F1 over tasks
- Seeded k-fold splits and paired two-tailed t-tests on fold scores
- Ground-truth overwrite simulation of better base classifiers
- Combination-weight sweeps and training-fold weight tuning
- CSV / JSON reports with published reference scores as metadata

Infeasible ILP instances are scored as all-wrong so every method is
evaluated on the same instances.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import betainc

from argument_corpus import (
    CLAIM, ESSAY_TASKS, ESSAYS, FUNCTIONS, MICROTEXT, MICROTEXT_TASKS, PREMISE,
    EssayLabels, EssayScores, Instance, JointWeights, Labels,
    MicrotextInstance, MicrotextLabels, MicrotextScores, corpus_kind,
)
from joint_decoder import ILP, METHODS, MST, SEPARATE, Prediction, decode_corpus

logger = logging.getLogger(__name__)

TASK_CLASSES: Dict[str, Tuple[str, ...]] = {
    "cc": ("central-claim", "non-central"),
    "ro": ("proponent", "opponent"),
    "fu": FUNCTIONS,
    "at": ("attached", "unattached"),
    "comp": (CLAIM, PREMISE),
    "rel": ("support", "no-relation"),
}
BINARY_TASKS = ("cc", "ro", "at", "comp", "rel")

SWEEP_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TUNE_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
SIMULATION_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)

# Scores published for the original corpora, carried for comparison only.
PUBLISHED_REFERENCE = {
    MICROTEXT: {
        SEPARATE: {"cc": 0.804, "ro": 0.667, "fu": 0.666, "at": 0.652, "macro": 0.697},
        MST: {"cc": 0.834, "ro": 0.686, "fu": 0.662, "at": 0.696, "macro": 0.719},
        ILP: {"cc": 0.834, "ro": 0.695, "fu": 0.681, "at": 0.696, "macro": 0.727},
    },
    ESSAYS: {
        "mod1": {
            SEPARATE: {"comp": 0.737, "rel": 0.589, "macro": 0.663},
            MST: {"comp": 0.748, "rel": 0.666, "macro": 0.707},
            ILP: {"comp": 0.770, "rel": 0.666, "macro": 0.718},
        },
        "mod2": {
            SEPARATE: {"comp": 0.741, "rel": 0.590, "macro": 0.665},
            MST: {"comp": 0.751, "rel": 0.675, "macro": 0.713},
            ILP: {"comp": 0.778, "rel": 0.678, "macro": 0.728},
        },
        "mod3": {
            SEPARATE: {"comp": 0.737, "rel": 0.593, "macro": 0.665},
            MST: {"comp": 0.788, "rel": 0.689, "macro": 0.739},
            ILP: {"comp": 0.793, "rel": 0.688, "macro": 0.740},
        },
    },
}


# =============================================================================
# F1
# =============================================================================

@dataclass(frozen=True)
class TaskScore:
    task: str
    f1: float
    per_class_f1: Tuple[Tuple[str, float], ...]
    positive_f1: Optional[float] = None
    absent: Tuple[str, ...] = ()


def tasks_for(kind: str) -> Tuple[str, ...]:
    if kind == MICROTEXT:
        return MICROTEXT_TASKS
    if kind == ESSAYS:
        return ESSAY_TASKS
    raise ValueError(f"unknown corpus kind {kind!r}")


def _pairs(n: int):
    for i in range(n):
        for j in range(n):
            if i != j:
                yield i, j


def task_sites(labels: Labels, task: str) -> List[str]:
    """Class name per prediction site; relation tasks enumerate ordered pairs i != j."""
    first, second = TASK_CLASSES[task][:2]
    if task == "cc":
        return [first if x else second for x in labels.cc]
    if task == "ro":
        return [first if x else second for x in labels.ro]
    if task == "fu":
        return list(labels.fu)
    if task == "at":
        return [first if labels.at[i][j] else second for i, j in _pairs(labels.n)]
    if task == "comp":
        return list(labels.ctype)
    if task == "rel":
        return [first if labels.rel[i][j] else second for i, j in _pairs(labels.n)]
    raise ValueError(f"unknown task {task!r}")


def wrong_labels(gold: Labels) -> Labels:
    """Labels that are wrong at every site; stands in for infeasible predictions."""
    n = gold.n
    if isinstance(gold, MicrotextLabels):
        return MicrotextLabels(
            cc=tuple(not x for x in gold.cc),
            ro=tuple(not x for x in gold.ro),
            fu=tuple(FUNCTIONS[(FUNCTIONS.index(f) + 1) % len(FUNCTIONS)] for f in gold.fu),
            at=tuple(tuple(i != j and not gold.at[i][j] for j in range(n)) for i in range(n)),
        )
    return EssayLabels(
        ctype=tuple(PREMISE if c == CLAIM else CLAIM for c in gold.ctype),
        rel=tuple(tuple(i != j and not gold.rel[i][j] for j in range(n)) for i in range(n)),
    )


def task_f1(gold: Sequence[Labels], pred: Sequence[Labels], task: str) -> TaskScore:
    """
    Pooled-count F1 for one task.

    Per class: F1 = 2TP / (2TP + FP + FN). The task F1 is the unweighted mean
    over the task's classes; a class absent from both gold and prediction
    scores 0 and is listed in `absent`.
    """
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold labelings vs {len(pred)} predictions")
    gold_sites: List[str] = []
    pred_sites: List[str] = []
    for g, p in zip(gold, pred):
        if g.n != p.n:
            raise ValueError(f"size mismatch: gold n={g.n}, pred n={p.n}")
        gold_sites.extend(task_sites(g, task))
        pred_sites.extend(task_sites(p, task))
    g_arr = np.array(gold_sites, dtype=object)
    p_arr = np.array(pred_sites, dtype=object)

    per_class = []
    absent = []
    for name in TASK_CLASSES[task]:
        in_gold = g_arr == name
        in_pred = p_arr == name
        tp = int(np.sum(in_gold & in_pred))
        fp = int(np.sum(~in_gold & in_pred))
        fn = int(np.sum(in_gold & ~in_pred))
        denominator = 2 * tp + fp + fn
        if denominator == 0:
            absent.append(name)
            per_class.append((name, 0.0))
        else:
            per_class.append((name, 2 * tp / denominator))

    f1 = math.fsum(value for _, value in per_class) / len(per_class)
    positive = per_class[0][1] if task in BINARY_TASKS else None
    return TaskScore(task=task, f1=f1, per_class_f1=tuple(per_class), positive_f1=positive, absent=tuple(absent))


def macro_f1(scores: Sequence[TaskScore]) -> float:
    if not scores:
        raise ValueError("macro-F1 of no tasks")
    return math.fsum(s.f1 for s in scores) / len(scores)


def score_predictions(instances: Sequence[Instance], predictions: Sequence[Prediction]) -> List[TaskScore]:
    """All task scores of a corpus; infeasible predictions count as all-wrong."""
    if not instances:
        raise ValueError("cannot score an empty corpus")
    gold = [instance.gold for instance in instances]
    pred = [p.labels if p.feasible else wrong_labels(g) for p, g in zip(predictions, gold)]
    return [task_f1(gold, pred, task) for task in tasks_for(corpus_kind(instances))]


# =============================================================================
# CROSS-VALIDATION AND SIGNIFICANCE
# =============================================================================

def kfold_split(instance_ids: Sequence[str], k: int, seed: int) -> List[Tuple[List[str], List[str]]]:
    """
    Seeded shuffle, then k near-equal contiguous test folds (larger folds first).

    Returns:
        (train ids, test ids) per fold; train ids keep input order.
    """
    if not 1 <= k <= len(instance_ids):
        raise ValueError(f"k={k} must be between 1 and the number of instances ({len(instance_ids)})")
    order = np.random.default_rng(seed).permutation(len(instance_ids))
    folds = []
    for test_positions in np.array_split(order, k):
        test_set = set(int(p) for p in test_positions)
        test = [instance_ids[int(p)] for p in test_positions]
        train = [instance_ids[p] for p in range(len(instance_ids)) if p not in test_set]
        folds.append((train, test))
    return folds


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    note: str = ""

    @property
    def degenerate(self) -> bool:
        return bool(self.note)


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """
    Paired two-tailed t-test with n - 1 degrees of freedom.

    p = I_{df / (df + t^2)}(df / 2, 1 / 2), the regularized incomplete beta form
    of the two-tailed Student-t tail.

    Degenerate inputs are flagged: all differences zero gives t = 0, p = 1;
    constant nonzero differences give t = +-inf, p = 0.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"paired samples differ in shape: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise ValueError("paired t-test needs at least 2 pairs")

    diff = x - y
    n = len(diff)
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd <= 1e-12 * max(1.0, abs(mean)):
        if abs(mean) <= 1e-12:
            return TTestResult(0.0, 1.0, "no-difference")
        return TTestResult(math.copysign(math.inf, mean), 0.0, "zero-variance")

    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t, min(1.0, max(0.0, p)))


# =============================================================================
# OVERWRITE SIMULATION
# =============================================================================

def _overwrite_sites(instance: Instance, task: str) -> int:
    n = instance.n
    return n * (n - 1) if task in ("at", "rel") else n


def simulate_overwrite(instance: Instance, task: str, fraction: float, rng: np.random.Generator) -> Instance:
    """
    Replace ceil(fraction * m) of a task's m score sites with one-hot gold,
    chosen uniformly whether or not the base score was already right.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction={fraction!r} outside [0, 1]")
    if task not in instance.tasks:
        raise ValueError(f"task {task!r} does not belong to {instance.kind}")

    m = _overwrite_sites(instance, task)
    count = min(m, max(0, math.ceil(fraction * m - 1e-9)))
    if count == 0:
        return instance
    chosen = [int(s) for s in rng.choice(m, size=count, replace=False)]
    pairs = list(_pairs(instance.n))
    gold = instance.gold
    scores = instance.scores

    if isinstance(instance, MicrotextInstance):
        arrays = {name: np.array(getattr(scores, name)) for name in ("cc", "ro", "fu", "at")}
        for site in chosen:
            if task == "cc":
                arrays["cc"][site] = float(gold.cc[site])
            elif task == "ro":
                arrays["ro"][site] = float(gold.ro[site])
            elif task == "fu":
                arrays["fu"][site] = np.eye(len(FUNCTIONS))[FUNCTIONS.index(gold.fu[site])]
            else:
                i, j = pairs[site]
                arrays["at"][i, j] = float(gold.at[i][j])
        return dataclasses.replace(instance, scores=MicrotextScores.create(**arrays))

    claim = np.array(scores.claim)
    premise = np.array(scores.premise)
    sup = np.array(scores.sup)
    for site in chosen:
        if task == "comp":
            claim[site] = float(gold.ctype[site] == CLAIM)
            premise[site] = 1.0 - claim[site]
        else:
            i, j = pairs[site]
            sup[i, j] = float(gold.rel[i][j])
    return dataclasses.replace(instance, scores=EssayScores.create(claim=claim, premise=premise, sup=sup))


def overwrite_corpus(instances: Sequence[Instance], tasks: Sequence[str], fraction: float, seed: int) -> List[Instance]:
    """Overwrite each listed task on every instance from one seeded generator."""
    rng = np.random.default_rng(seed)
    result = []
    for instance in instances:
        for task in tasks:
            instance = simulate_overwrite(instance, task, fraction, rng)
        result.append(instance)
    return result


def run_simulation(instances: Sequence[Instance], method: str, weights: JointWeights,
                   tasks: Sequence[str], fractions: Sequence[float], seed: int,
                   jobs: int = 1, progress: bool = False) -> pd.DataFrame:
    """
    For each fraction, overwrite `tasks` together, re-decode and score every task.

    Returns:
        DataFrame with columns overwritten, fraction, task, f1
    """
    kind = corpus_kind(instances)
    for task in tasks:
        if task not in tasks_for(kind):
            raise ValueError(f"task {task!r} does not belong to {kind}")
    rows = []
    label = "+".join(tasks)
    for fraction in fractions:
        overwritten = overwrite_corpus(instances, tasks, fraction, seed)
        predictions = decode_corpus(overwritten, method, weights, jobs=jobs, progress=progress)
        for score in score_predictions(overwritten, predictions):
            rows.append({"overwritten": label, "fraction": float(fraction), "task": score.task, "f1": score.f1})
        logger.info(f"[EVAL] simulate {label} at {fraction:.2f}: "
                    + ", ".join(f"{r['task']}={r['f1']:.3f}" for r in rows[-len(tasks_for(kind)):]))
    return pd.DataFrame(rows, columns=["overwritten", "fraction", "task", "f1"])


# =============================================================================
# WEIGHT SWEEPS AND TUNING
# =============================================================================

def sweep_weights(kind: str, method: str, target_task: str, x: float, base: JointWeights) -> JointWeights:
    """
    Microtext: target task weight x, the other three (1 - x) / 3.
    Essays: x is v for ILP and beta for MST (separate ignores weights).
    """
    if kind == MICROTEXT:
        return base.with_target(target_task, x)
    if method == MST:
        return base.with_values(beta=x)
    return base.with_values(v=x)


def weight_sweep(instances: Sequence[Instance], target_task: str, x_values: Sequence[float], method: str,
                 base: JointWeights = JointWeights(), jobs: int = 1,
                 progress: bool = False) -> List[Tuple[float, List[TaskScore]]]:
    """
    Decode the whole corpus once per x.

    Returns:
        (x, task scores) per grid point, in grid order
    """
    kind = corpus_kind(instances)
    if kind == MICROTEXT and target_task not in MICROTEXT_TASKS:
        raise ValueError(f"microtext sweep target must be one of {MICROTEXT_TASKS}, got {target_task!r}")
    curve = []
    for x in x_values:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"sweep value {x!r} outside [0, 1]")
        weights = sweep_weights(kind, method, target_task, x, base)
        predictions = decode_corpus(instances, method, weights, jobs=jobs, progress=progress)
        curve.append((float(x), score_predictions(instances, predictions)))
    return curve


def sweep_frame(curve: Sequence[Tuple[float, List[TaskScore]]], method: str, target: str) -> pd.DataFrame:
    rows = [
        {"method": method, "target": target, "x": x, "task": score.task, "f1": score.f1}
        for x, scores in curve
        for score in scores
    ]
    return pd.DataFrame(rows, columns=["method", "target", "x", "task", "f1"])


def weight_candidates(kind: str, method: str, base: JointWeights, grid: Sequence[float]) -> List[JointWeights]:
    """Base weights first, then one candidate per (task, x) or per x."""
    if method == SEPARATE:
        return [base]
    candidates = [base]
    targets = MICROTEXT_TASKS if kind == MICROTEXT else ("v",)
    for target in targets:
        for x in grid:
            weights = sweep_weights(kind, method, target, x, base)
            if weights not in candidates:
                candidates.append(weights)
    return candidates


def tune_weights(train: Sequence[Instance], method: str, base: JointWeights = JointWeights(),
                 grid: Sequence[float] = TUNE_GRID, jobs: int = 1) -> JointWeights:
    """Pick the candidate with the best training macro-F1; ties keep the earlier candidate."""
    kind = corpus_kind(train)
    best_weights, best_score = base, -1.0
    for weights in weight_candidates(kind, method, base, grid):
        predictions = decode_corpus(train, method, weights, jobs=jobs)
        score = macro_f1(score_predictions(train, predictions))
        if score > best_score + 1e-12:
            best_weights, best_score = weights, score
    logger.debug(f"[EVAL] tuned {method} weights {best_weights.to_dict()} (train macro-F1 {best_score:.4f})")
    return best_weights


# =============================================================================
# REPORTS
# =============================================================================

@dataclass(frozen=True)
class Significance:
    method: str
    baseline: str
    t: float
    p: float
    note: str = ""


@dataclass
class ExperimentReport:
    """One method's cross-validated result."""
    method: str
    per_task: List[TaskScore]
    macro_f1: float
    folds: List[float]
    fold_tasks: List[List[TaskScore]] = field(default_factory=list)
    significance: List[Significance] = field(default_factory=list)
    infeasible_ids: List[str] = field(default_factory=list)


@dataclass
class EvaluationSummary:
    kind: str
    k: int
    seed: int
    weights: JointWeights
    tuned: bool
    reports: List[ExperimentReport]
    variants: List[str] = field(default_factory=list)

    def report(self, method: str) -> ExperimentReport:
        for report in self.reports:
            if report.method == method:
                return report
        raise KeyError(method)

    def reference(self) -> dict:
        if self.kind == MICROTEXT:
            return PUBLISHED_REFERENCE[MICROTEXT]
        return {v: PUBLISHED_REFERENCE[ESSAYS][v] for v in self.variants if v in PUBLISHED_REFERENCE[ESSAYS]}

    def to_frame(self) -> pd.DataFrame:
        """One row per (method, task, fold) plus fold='all' summary rows; task 'macro' is macro-F1."""
        rows = []
        for report in self.reports:
            for fold, scores in enumerate(report.fold_tasks):
                for score in scores:
                    rows.append({"method": report.method, "task": score.task, "fold": str(fold), "f1": score.f1})
                rows.append({"method": report.method, "task": "macro", "fold": str(fold), "f1": report.folds[fold]})
            for score in report.per_task:
                rows.append({"method": report.method, "task": score.task, "fold": "all", "f1": score.f1})
            rows.append({"method": report.method, "task": "macro", "fold": "all", "f1": report.macro_f1})
        return pd.DataFrame(rows, columns=["method", "task", "fold", "f1"])

    def table(self) -> pd.DataFrame:
        """Method x task summary (task F1 columns, then macro)."""
        data = {
            report.method: {**{s.task: s.f1 for s in report.per_task}, "macro": report.macro_f1}
            for report in self.reports
        }
        return pd.DataFrame.from_dict(data, orient="index", columns=list(tasks_for(self.kind)) + ["macro"])

    def to_dict(self) -> dict:
        def finite(x: float):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "kind": self.kind,
            "k": self.k,
            "seed": self.seed,
            "weights": self.weights.to_dict(),
            "tuned": self.tuned,
            "primary_f1": "class-mean",
            "methods": [
                {
                    "method": r.method,
                    "macro_f1": r.macro_f1,
                    "per_task": [
                        {
                            "task": s.task,
                            "f1": s.f1,
                            "positive_f1": s.positive_f1,
                            "per_class": dict(s.per_class_f1),
                            "absent": list(s.absent),
                        }
                        for s in r.per_task
                    ],
                    "folds": r.folds,
                    "significance": [
                        {"baseline": s.baseline, "t": finite(s.t), "p": s.p, "note": s.note}
                        for s in r.significance
                    ],
                    "infeasible_ids": r.infeasible_ids,
                }
                for r in self.reports
            ],
            "reference": self.reference(),
        }


def _comparisons(methods: Sequence[str]) -> List[Tuple[str, str]]:
    pairs = [(m, SEPARATE) for m in methods if m != SEPARATE and SEPARATE in methods]
    if ILP in methods and MST in methods:
        pairs.append((ILP, MST))
    return pairs


def run_evaluation(instances: Sequence[Instance], methods: Sequence[str] = METHODS,
                   weights: JointWeights = JointWeights(), k: int = 10, seed: int = 0,
                   tune: bool = False, jobs: int = 1, progress: bool = False) -> EvaluationSummary:
    """
    k-fold cross-validated comparison of decoding methods.

    Without tuning every fold uses the given weights; with tuning each fold's
    weights are picked on its training part. Pooled task F1 covers all test
    predictions; fold macro-F1 values feed the paired t-tests of each joint
    method against separate and of ILP against MST.

    Raises:
        ValueError: unknown method, or k outside 1..len(instances)
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    kind = corpus_kind(instances)
    by_id = {instance.id: instance for instance in instances}
    if len(by_id) != len(instances):
        raise ValueError("instance ids must be unique for cross-validation")
    folds = kfold_split([instance.id for instance in instances], k, seed)

    reports: Dict[str, ExperimentReport] = {}
    for method in methods:
        predictions: Dict[str, Prediction] = {}
        fold_scores: List[float] = []
        fold_tasks: List[List[TaskScore]] = []
        if not tune:
            for prediction in decode_corpus(instances, method, weights, jobs=jobs, progress=progress):
                predictions[prediction.id] = prediction
        for fold, (train_ids, test_ids) in enumerate(folds):
            test = [by_id[i] for i in test_ids]
            if tune:
                train = [by_id[i] for i in train_ids]
                fold_weights = tune_weights(train, method, weights, jobs=jobs) if train else weights
                for prediction in decode_corpus(test, method, fold_weights, jobs=jobs):
                    predictions[prediction.id] = prediction
            scores = score_predictions(test, [predictions[i] for i in test_ids])
            fold_tasks.append(scores)
            fold_scores.append(macro_f1(scores))

        ordered = [predictions[instance.id] for instance in instances]
        per_task = score_predictions(instances, ordered)
        reports[method] = ExperimentReport(
            method=method,
            per_task=per_task,
            macro_f1=macro_f1(per_task),
            folds=fold_scores,
            fold_tasks=fold_tasks,
            infeasible_ids=[p.id for p in ordered if not p.feasible],
        )
        logger.info(f"[EVAL] {method}: macro-F1 {reports[method].macro_f1:.4f} "
                    + " ".join(f"{s.task}={s.f1:.3f}" for s in per_task))

    for method, baseline in _comparisons(methods):
        if k < 2:
            break
        test = paired_t_test(reports[method].folds, reports[baseline].folds)
        reports[method].significance.append(Significance(method, baseline, test.t, test.p, test.note))
        logger.info(f"[EVAL] {method} vs {baseline}: t={test.t:.3f} p={test.p:.4f} {test.note}".rstrip())

    variants = sorted({i.variant for i in instances}) if kind == ESSAYS else []
    return EvaluationSummary(kind=kind, k=k, seed=seed, weights=weights, tuned=tune,
                             reports=[reports[m] for m in methods], variants=variants)
