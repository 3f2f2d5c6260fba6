#!/usr/bin/env python3
"""
Argument Corpus - Domain Records and Instance Format
====================================================
Shared data layer for every decoder in this repo:
- Microtext instances (central claim / role / function / attachment)
- Essay paragraph instances (claim vs premise, support relations)
- Joint combination weights
- Canonical JSON Lines format (one instance per line)
- Validation and gold-structure audits

Scores are the probability outputs of upstream classifiers. They are
validated here, never renormalized.
"""

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

MICROTEXT = "microtext"
ESSAYS = "essays"
KINDS = (MICROTEXT, ESSAYS)

SUPPORT = "sup"
ATTACK = "att"
NONE = "none"
FUNCTIONS = (SUPPORT, ATTACK, NONE)

CLAIM = "claim"
PREMISE = "premise"
COMPONENT_TYPES = (CLAIM, PREMISE)

VARIANTS = ("mod1", "mod2", "mod3")

MICROTEXT_TASKS = ("cc", "ro", "fu", "at")
ESSAY_TASKS = ("comp", "rel")

SUM_TOLERANCE = 1e-6


class CorpusFormatError(ValueError):
    """Malformed instance line: bad JSON, missing keys, ragged arrays, unknown labels."""

    def __init__(self, message: str, line_no: int = 0, instance_id: str = ""):
        where = []
        if line_no:
            where.append(f"line {line_no}")
        if instance_id:
            where.append(f"id {instance_id}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.detail = message
        self.line_no = line_no
        self.instance_id = instance_id


def _readonly(values, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.size == 0:
        array = array.reshape((0,) * ndim)
    array.setflags(write=False)
    return array


def _zero_diagonal(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim == 2 and array.shape[0] == array.shape[1]:
        np.fill_diagonal(array, 0.0)
    return array


Matrix = Tuple[Tuple[bool, ...], ...]


def _bool_matrix(rows) -> Matrix:
    return tuple(tuple(bool(x) for x in row) for row in rows)


# =============================================================================
# DOMAIN RECORDS
# =============================================================================

@dataclass(frozen=True)
class MicrotextLabels:
    """cc/ro per segment, fu in FUNCTIONS, at[i][j] = i attaches to j"""
    cc: Tuple[bool, ...]
    ro: Tuple[bool, ...]
    fu: Tuple[str, ...]
    at: Matrix

    @property
    def n(self) -> int:
        return len(self.cc)


@dataclass(frozen=True, eq=False)
class MicrotextScores:
    """cc (n,), ro (n,) proponent probability, fu (n, 3) over FUNCTIONS, at (n, n)"""
    cc: np.ndarray
    ro: np.ndarray
    fu: np.ndarray
    at: np.ndarray

    @classmethod
    def create(cls, cc, ro, fu, at) -> "MicrotextScores":
        return cls(
            cc=_readonly(cc, 1),
            ro=_readonly(ro, 1),
            fu=_readonly(fu, 2),
            at=_readonly(_zero_diagonal(at), 2),
        )


@dataclass(frozen=True, eq=False)
class MicrotextInstance:
    id: str
    n: int
    gold: MicrotextLabels
    scores: MicrotextScores

    kind = MICROTEXT
    tasks = MICROTEXT_TASKS


@dataclass(frozen=True)
class EssayLabels:
    """ctype in COMPONENT_TYPES, rel[i][j] = i supports j"""
    ctype: Tuple[str, ...]
    rel: Matrix

    @property
    def n(self) -> int:
        return len(self.ctype)


@dataclass(frozen=True, eq=False)
class EssayScores:
    claim: np.ndarray
    premise: np.ndarray
    sup: np.ndarray

    @classmethod
    def create(cls, claim, premise, sup) -> "EssayScores":
        return cls(
            claim=_readonly(claim, 1),
            premise=_readonly(premise, 1),
            sup=_readonly(_zero_diagonal(sup), 2),
        )


@dataclass(frozen=True, eq=False)
class EssayInstance:
    id: str
    n: int
    variant: str
    gold: EssayLabels
    scores: EssayScores

    kind = ESSAYS
    tasks = ESSAY_TASKS


Instance = Union[MicrotextInstance, EssayInstance]
Labels = Union[MicrotextLabels, EssayLabels]


@dataclass(frozen=True)
class JointWeights:
    """
    Combination weights.

    w1..w4 weigh the microtext tasks (cc, ro, fu, at); v balances component
    vs relation scores for essays; beta mixes premise and support scores on
    essay evidence-graph edges.
    """
    w1: float = 0.25
    w2: float = 0.25
    w3: float = 0.25
    w4: float = 0.25
    v: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "v", "beta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"weight {name}={value!r} outside [0, 1]")

    @property
    def task_weights(self) -> Dict[str, float]:
        return {"cc": self.w1, "ro": self.w2, "fu": self.w3, "at": self.w4}

    def with_target(self, task: str, x: float) -> "JointWeights":
        """Microtext sweep point: target task gets x, the other three (1 - x) / 3."""
        if task not in MICROTEXT_TASKS:
            raise ValueError(f"unknown microtext task {task!r}")
        rest = (1.0 - x) / 3.0
        values = {t: (x if t == task else rest) for t in MICROTEXT_TASKS}
        return JointWeights(values["cc"], values["ro"], values["fu"], values["at"], self.v, self.beta)

    def with_values(self, **changes) -> "JointWeights":
        fields = dict(w1=self.w1, w2=self.w2, w3=self.w3, w4=self.w4, v=self.v, beta=self.beta)
        fields.update(changes)
        return JointWeights(**fields)

    def to_dict(self) -> Dict[str, float]:
        return dict(w1=self.w1, w2=self.w2, w3=self.w3, w4=self.w4, v=self.v, beta=self.beta)


def parse_weights(text: str) -> Tuple[float, float, float, float]:
    """'0.25,0.25,0.25,0.25' -> (w1, w2, w3, w4)"""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated weights, got {text!r}")
    return tuple(float(p) for p in parts)


# =============================================================================
# VALIDATION
# =============================================================================

def _check_shape(violations: List[str], name: str, array: np.ndarray, shape: Tuple[int, ...]):
    if array.shape != shape:
        dims = "x".join(str(d) for d in array.shape) or "scalar"
        want = "x".join(str(d) for d in shape)
        violations.append(f"{name} has shape {dims}, expected {want}")
        return False
    return True


def _check_probabilities(violations: List[str], name: str, array: np.ndarray):
    bad = ~np.isfinite(array) | (array < 0.0) | (array > 1.0)
    for index in zip(*np.nonzero(bad)):
        where = ",".join(str(int(i)) for i in index)
        violations.append(f"{name}[{where}] = {float(array[index])!r} outside [0, 1]")


def _check_label_matrix(violations: List[str], name: str, matrix: Matrix, n: int):
    if len(matrix) != n or any(len(row) != n for row in matrix):
        violations.append(f"{name} is not {n}x{n}")
        return
    for i in range(n):
        if matrix[i][i]:
            violations.append(f"{name}[{i}][{i}] is true on the diagonal")


def _check_length(violations: List[str], name: str, values: Sequence, n: int):
    if len(values) != n:
        violations.append(f"{name} has length {len(values)}, expected {n}")


def validate_instance(instance: Instance) -> List[str]:
    """
    Check every type invariant of an instance.

    Returns:
        Violation descriptions naming field and index; empty iff valid.
    """
    violations: List[str] = []
    n = instance.n
    if n < 1:
        violations.append(f"n = {n}, expected at least 1")

    if isinstance(instance, MicrotextInstance):
        gold, scores = instance.gold, instance.scores
        _check_length(violations, "gold.cc", gold.cc, n)
        _check_length(violations, "gold.ro", gold.ro, n)
        _check_length(violations, "gold.fu", gold.fu, n)
        for i, function in enumerate(gold.fu):
            if function not in FUNCTIONS:
                violations.append(f"gold.fu[{i}] = {function!r} not in {FUNCTIONS}")
        _check_label_matrix(violations, "gold.at", gold.at, n)

        for name, array, shape in (
            ("cc", scores.cc, (n,)),
            ("ro", scores.ro, (n,)),
            ("fu", scores.fu, (n, 3)),
            ("at", scores.at, (n, n)),
        ):
            _check_shape(violations, name, array, shape)
            _check_probabilities(violations, name, array)

        if scores.fu.ndim == 2:
            for i, row in enumerate(scores.fu):
                total = float(row.sum())
                if abs(total - 1.0) > SUM_TOLERANCE:
                    violations.append(f"fu row {i} sums to {total:g}")

    elif isinstance(instance, EssayInstance):
        gold, scores = instance.gold, instance.scores
        if instance.variant not in VARIANTS:
            violations.append(f"variant {instance.variant!r} not in {VARIANTS}")
        _check_length(violations, "gold.ctype", gold.ctype, n)
        for i, ctype in enumerate(gold.ctype):
            if ctype not in COMPONENT_TYPES:
                violations.append(f"gold.ctype[{i}] = {ctype!r} not in {COMPONENT_TYPES}")
        _check_label_matrix(violations, "gold.rel", gold.rel, n)

        shapes_ok = True
        for name, array, shape in (
            ("claim", scores.claim, (n,)),
            ("premise", scores.premise, (n,)),
            ("sup", scores.sup, (n, n)),
        ):
            shapes_ok &= _check_shape(violations, name, array, shape)
            _check_probabilities(violations, name, array)

        if scores.claim.shape == scores.premise.shape and scores.claim.ndim == 1:
            for i, total in enumerate(scores.claim + scores.premise):
                if abs(float(total) - 1.0) > SUM_TOLERANCE:
                    violations.append(f"claim+premise of component {i} sums to {float(total):g}")
    else:
        violations.append(f"unsupported instance type {type(instance).__name__}")

    return violations


def _constraint_families(names: Iterable[str]) -> List[str]:
    families: List[str] = []
    for name in names:
        family = name.split(":", 1)[0]
        if family not in families:
            families.append(family)
    return families


def check_label_constraints(labels: Labels, variant: str = "") -> List[str]:
    """
    Evaluate the full constraint system of the labels' corpus on a labeling.

    Args:
        labels: microtext or essay labels
        variant: essay variant (mod1/mod2/mod3), required for essays; ignored for microtext

    Returns:
        Names of violated constraint families, in emission order.

    Raises:
        ValueError: essay labels with a missing or unknown variant
    """
    if isinstance(labels, MicrotextLabels):
        import microtext_ilp
        problem, varmap = microtext_ilp.constraint_system(labels.n)
        assignment = microtext_ilp.assignment_from_labels(varmap, labels)
    else:
        if variant not in VARIANTS:
            raise ValueError(f"essay labels need variant= one of {VARIANTS}, got {variant!r}")
        import essay_ilp
        problem, varmap = essay_ilp.constraint_system(labels.n, variant)
        assignment = essay_ilp.assignment_from_labels(varmap, labels)

    from ilp_solver import violated_constraints
    return _constraint_families(violated_constraints(problem, assignment))


def check_gold_constraints(instance: Instance) -> List[str]:
    """Audit an instance's gold labels against its corpus (and variant) constraints."""
    variant = instance.variant if isinstance(instance, EssayInstance) else ""
    return check_label_constraints(instance.gold, variant)


# =============================================================================
# JSON LINES FORMAT
# =============================================================================

def labels_to_json(labels: Labels) -> dict:
    if isinstance(labels, MicrotextLabels):
        return {
            "cc": list(labels.cc),
            "ro": list(labels.ro),
            "fu": list(labels.fu),
            "at": [list(row) for row in labels.at],
        }
    return {"ctype": list(labels.ctype), "rel": [list(row) for row in labels.rel]}


def _require(obj: dict, key: str):
    if not isinstance(obj, dict) or key not in obj:
        raise CorpusFormatError(f"missing key {key!r}")
    return obj[key]


def _bool_list(values, name: str) -> Tuple[bool, ...]:
    if not isinstance(values, list) or not all(isinstance(x, bool) for x in values):
        raise CorpusFormatError(f"{name} must be a list of booleans")
    return tuple(values)


def _bool_rows(values, name: str) -> Matrix:
    if not isinstance(values, list):
        raise CorpusFormatError(f"{name} must be a list of lists")
    return tuple(_bool_list(row, name) for row in values)


def _choice_list(values, name: str, allowed: Sequence[str]) -> Tuple[str, ...]:
    if not isinstance(values, list):
        raise CorpusFormatError(f"{name} must be a list")
    for value in values:
        if value not in allowed:
            raise CorpusFormatError(f"{name} has unknown label {value!r}")
    return tuple(values)


def _numbers(values, name: str, ndim: int) -> np.ndarray:
    try:
        array = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise CorpusFormatError(f"{name} is not a numeric array: {e}")
    if array.size == 0:
        array = array.reshape((0,) * ndim)
    if array.ndim != ndim:
        raise CorpusFormatError(f"{name} must be {ndim}-dimensional")
    return array


def labels_from_json(kind: str, obj: dict) -> Labels:
    if kind == MICROTEXT:
        return MicrotextLabels(
            cc=_bool_list(_require(obj, "cc"), "cc"),
            ro=_bool_list(_require(obj, "ro"), "ro"),
            fu=_choice_list(_require(obj, "fu"), "fu", FUNCTIONS),
            at=_bool_rows(_require(obj, "at"), "at"),
        )
    return EssayLabels(
        ctype=_choice_list(_require(obj, "ctype"), "ctype", COMPONENT_TYPES),
        rel=_bool_rows(_require(obj, "rel"), "rel"),
    )


def instance_from_dict(obj: dict) -> Instance:
    """Build an instance from a decoded JSON object; essays are recognised by 'variant'."""
    instance_id = _require(obj, "id")
    n = _require(obj, "n")
    if not isinstance(instance_id, str):
        raise CorpusFormatError("id must be a string")
    if not isinstance(n, int) or isinstance(n, bool):
        raise CorpusFormatError("n must be an integer", instance_id=instance_id)

    try:
        gold = _require(obj, "gold")
        scores = _require(obj, "scores")
        if "variant" in obj:
            variant = obj["variant"]
            if variant not in VARIANTS:
                raise CorpusFormatError(f"unknown variant {variant!r}")
            return EssayInstance(
                id=instance_id,
                n=n,
                variant=variant,
                gold=labels_from_json(ESSAYS, gold),
                scores=EssayScores.create(
                    claim=_numbers(_require(scores, "claim"), "claim", 1),
                    premise=_numbers(_require(scores, "premise"), "premise", 1),
                    sup=_numbers(_require(scores, "sup"), "sup", 2),
                ),
            )
        return MicrotextInstance(
            id=instance_id,
            n=n,
            gold=labels_from_json(MICROTEXT, gold),
            scores=MicrotextScores.create(
                cc=_numbers(_require(scores, "cc"), "cc", 1),
                ro=_numbers(_require(scores, "ro"), "ro", 1),
                fu=_numbers(_require(scores, "fu"), "fu", 2),
                at=_numbers(_require(scores, "at"), "at", 2),
            ),
        )
    except CorpusFormatError as e:
        if e.instance_id:
            raise
        raise CorpusFormatError(e.detail, instance_id=instance_id) from None


def instance_to_dict(instance: Instance) -> dict:
    if isinstance(instance, EssayInstance):
        return {
            "id": instance.id,
            "n": instance.n,
            "variant": instance.variant,
            "gold": labels_to_json(instance.gold),
            "scores": {
                "claim": instance.scores.claim.tolist(),
                "premise": instance.scores.premise.tolist(),
                "sup": instance.scores.sup.tolist(),
            },
        }
    return {
        "id": instance.id,
        "n": instance.n,
        "gold": labels_to_json(instance.gold),
        "scores": {
            "cc": instance.scores.cc.tolist(),
            "ro": instance.scores.ro.tolist(),
            "fu": instance.scores.fu.tolist(),
            "at": instance.scores.at.tolist(),
        },
    }


def to_json_line(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def serialize_instance(instance: Instance) -> str:
    """Canonical compact JSON (one line, fixed key order, shortest float repr)."""
    return to_json_line(instance_to_dict(instance))


def parse_instance(line: str, line_no: int = 0) -> Instance:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"invalid JSON: {e}", line_no=line_no)
    try:
        return instance_from_dict(obj)
    except CorpusFormatError as e:
        raise CorpusFormatError(e.detail, line_no=line_no, instance_id=e.instance_id) from None


def read_corpus(path: Union[str, Path]) -> List[Instance]:
    """
    Load a JSON Lines corpus.

    Raises:
        FileNotFoundError: path does not exist
        CorpusFormatError: a line cannot be parsed
    """
    path = Path(path)
    instances = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            instances.append(parse_instance(line, line_no))
    logger.info(f"[IO] Loaded {len(instances)} instances from {path}")
    return instances


def write_corpus(path: Union[str, Path], instances: Iterable[Instance]) -> int:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for instance in instances:
            f.write(serialize_instance(instance) + "\n")
            count += 1
    logger.info(f"[IO] Wrote {count} instances to {path}")
    return count


def corpus_kind(instances: Sequence[Instance]) -> str:
    kinds = {instance.kind for instance in instances}
    if len(kinds) > 1:
        raise CorpusFormatError(f"corpus mixes instance kinds: {sorted(kinds)}")
    return kinds.pop() if kinds else ""


# =============================================================================
# STATISTICS
# =============================================================================

def corpus_statistics(instances: Sequence[Instance]) -> Dict[str, Dict[str, int]]:
    """
    Gold class counts per task, in the layout of published corpus statistics.

    Microtext: cc true/false, ro pro/opp, fu sup/att/none, at at/un-at.
    Essays: paragraphs, components, claim/premise, candidate pairs, support.
    """
    kind = corpus_kind(instances)
    if kind == MICROTEXT:
        counts = {"cc": Counter(), "ro": Counter(), "fu": Counter(), "at": Counter()}
        units = 0
        for instance in instances:
            gold = instance.gold
            units += instance.n
            counts["cc"].update("true" if x else "false" for x in gold.cc)
            counts["ro"].update("pro" if x else "opp" for x in gold.ro)
            counts["fu"].update(gold.fu)
            for i in range(instance.n):
                for j in range(instance.n):
                    if i != j:
                        counts["at"]["at" if gold.at[i][j] else "un-at"] += 1
        result = {"corpus": {"texts": len(instances), "segments": units}}
        order = {"cc": ("true", "false"), "ro": ("pro", "opp"), "fu": FUNCTIONS, "at": ("at", "un-at")}
        for task, keys in order.items():
            result[task] = {key: counts[task][key] for key in keys}
        return result

    if kind == ESSAYS:
        by_variant: Dict[str, Counter] = {}
        for instance in instances:
            counter = by_variant.setdefault(instance.variant, Counter())
            counter["paragraphs"] += 1
            counter["components"] += instance.n
            counter.update(instance.gold.ctype)
            counter["pairs"] += instance.n * (instance.n - 1)
            counter["support"] += sum(sum(row) for row in instance.gold.rel)
        keys = ("paragraphs", "components", PREMISE, CLAIM, "pairs", "support")
        return {variant: {key: by_variant[variant][key] for key in keys} for variant in sorted(by_variant)}

    return {}
