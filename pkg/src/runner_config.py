#!/usr/bin/env python3
"""
Runner Configuration
====================
Settings are layered, later layers winning:

    1. built-in defaults (RunConfig field defaults)
    2. .env file / environment (ARGMINE_* variables)
    3. JSON config file (--config, see config.example.json)
    4. command-line flags

Environment:
    ARGMINE_SEED, ARGMINE_JOBS, ARGMINE_OUT, ARGMINE_LOG_LEVEL,
    ARGMINE_WEIGHTS (w1,w2,w3,w4), ARGMINE_V, ARGMINE_BETA
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from argument_corpus import KINDS, VARIANTS, JointWeights, parse_weights
from joint_decoder import ILP, METHODS

# Load environment variables
try:
    from dotenv import load_dotenv
    load_dotenv(Path(__file__).parent.parent / ".env")
except ImportError:
    pass  # dotenv not installed, use os.environ directly

logger = logging.getLogger(__name__)

ENV_PREFIX = "ARGMINE_"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class RunConfig:
    """Resolved settings for one runner invocation"""

    corpus: str = ""
    kind: str = ""                  # detected from the corpus when empty
    method: str = ILP
    methods: Tuple[str, ...] = METHODS
    weights: JointWeights = field(default_factory=JointWeights)
    variant: str = ""               # essays only: restrict to / generate this variant
    seed: int = 0
    k: int = 10
    jobs: int = 1
    out: str = "out"
    log_level: str = "INFO"
    log_file: str = ""
    quiet: bool = False

    def validate(self):
        """
        Raises:
            ValueError: unknown kind / method / variant / log level, or
                out-of-range k, jobs or weights
        """
        if self.kind and self.kind not in KINDS:
            raise ValueError(f"unknown corpus kind {self.kind!r}, expected one of {KINDS}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValueError(f"bad method list {list(self.methods)!r}, expected a subset of {METHODS}")
        if self.variant and self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.variant and self.kind == "microtext":
            raise ValueError("--variant applies to essays corpora only")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be at least 1, got {self.jobs}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ValueError(f"unknown log level {self.log_level!r}")
        # JointWeights checks its own bounds on construction
        JointWeights(**self.weights.to_dict())
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["methods"] = list(self.methods)
        data["weights"] = self.weights.to_dict()
        return data


def _weight_fields(values: Mapping[str, Any]) -> Dict[str, float]:
    """Accepts 'weights' as 'w1,w2,w3,w4', a 4-list or a dict, plus 'v' and 'beta'."""
    changes: Dict[str, float] = {}
    raw = values.get("weights")
    if isinstance(raw, str):
        raw = parse_weights(raw)
    if isinstance(raw, dict):
        changes.update({k: float(v) for k, v in raw.items()})
    elif raw is not None:
        if len(raw) != 4:
            raise ValueError(f"expected 4 weights, got {raw!r}")
        changes.update(zip(("w1", "w2", "w3", "w4"), (float(w) for w in raw)))
    for name in ("v", "beta"):
        if values.get(name) is not None:
            changes[name] = float(values[name])
    return changes


def apply_layer(config: RunConfig, values: Mapping[str, Any], source: str) -> RunConfig:
    """Overlay non-None values onto config; unknown keys are ignored with a warning."""
    known = {f for f in RunConfig.__dataclass_fields__ if f != "weights"}
    weight_keys = {"weights", "v", "beta"}
    for key, value in values.items():
        if value is None or key in weight_keys:
            continue
        if key not in known:
            logger.warning(f"[CONFIG] {source}: ignoring unknown setting {key!r}")
            continue
        current = getattr(config, key)
        if isinstance(current, bool):
            value = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(value)
        elif isinstance(current, tuple):
            value = tuple(v.strip() for v in value.split(",")) if isinstance(value, str) else tuple(value)
        else:
            value = str(value)
        setattr(config, key, value)

    changes = _weight_fields(values)
    if changes:
        config.weights = config.weights.with_values(**changes)
    return config


def env_layer(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    environ = os.environ if environ is None else environ
    names = {
        "SEED": "seed", "JOBS": "jobs", "OUT": "out", "LOG_LEVEL": "log_level",
        "WEIGHTS": "weights", "V": "v", "BETA": "beta",
    }
    return {key: environ[ENV_PREFIX + name] for name, key in names.items() if environ.get(ENV_PREFIX + name)}


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Load a JSON config file.

    Raises:
        FileNotFoundError: path does not exist
        ValueError: not a JSON object
    """
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return data


def build_config(cli_values: Mapping[str, Any], config_path: str = "",
                 environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Resolve defaults < environment < config file < CLI flags, then validate."""
    config = RunConfig()
    apply_layer(config, env_layer(environ), "environment")
    if config_path:
        apply_layer(config, load_config_file(config_path), config_path)
        logger.debug(f"[CONFIG] Loaded {config_path}")
    apply_layer(config, cli_values, "command line")
    return config.validate()
