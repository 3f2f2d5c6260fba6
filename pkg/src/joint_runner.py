#!/usr/bin/env python3
"""
Joint Runner - batch front end for argument structure decoding
==============================================================
Subcommands:
    decode    decode a corpus with separate / mst / ilp
    evaluate  k-fold comparison of methods with paired t-tests
    simulate  ground-truth overwrite simulation curves
    sweep     combination-weight sweep curves
    synth     write a synthetic corpus
    validate  check a corpus for schema and constraint problems
    stats     gold class counts per task

Exit codes: 0 success (infeasible instances included), 1 IO / schema error,
2 usage error.

Usage:
    python joint_runner.py synth --kind microtext --count 112 --n 5 --epsilon 0.4 --flip 0.2 mt.jsonl
    python joint_runner.py decode --method ilp --weights 0.25,0.25,0.25,0.25 mt.jsonl
    python joint_runner.py evaluate --methods separate,mst,ilp --k 10 --seed 7 mt.jsonl
"""

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

sys.path.insert(0, str(Path(__file__).parent))

import essay_ilp
import microtext_ilp
from argument_corpus import (
    ESSAYS, KINDS, MICROTEXT, VARIANTS,
    CorpusFormatError, EssayInstance, Instance,
    check_gold_constraints, corpus_kind, corpus_statistics, labels_to_json,
    parse_instance, read_corpus, to_json_line, validate_instance, write_corpus,
)
from ilp_solver import IlpError, format_lp
from joint_decoder import METHODS, decode_corpus
from joint_evaluation import (
    SIMULATION_FRACTIONS, SWEEP_GRID, run_evaluation, run_simulation, sweep_frame, tasks_for, weight_sweep,
)
from runner_config import LOG_LEVELS, RunConfig, build_config
from synthetic_corpus import NoiseSpec, gen_corpus

logger = logging.getLogger("joint_runner")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

CONFIG_KEYS = ("kind", "method", "methods", "weights", "v", "beta", "variant", "seed", "k", "jobs",
               "out", "log_level", "log_file", "quiet")


def setup_logging(level: str = "INFO", log_file: str = "") -> logging.Logger:
    """Configure logging"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        handlers=handlers,
        force=True,
    )
    return logger


def banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# =============================================================================
# CORPUS LOADING
# =============================================================================

def load_corpus(config: RunConfig, path: str) -> List[Instance]:
    """Read a corpus, check it against --kind and apply the --variant filter."""
    instances = read_corpus(path)
    kind = corpus_kind(instances)
    if config.kind and kind and kind != config.kind:
        raise CorpusFormatError(f"{path} holds {kind} instances, but --kind is {config.kind}")
    if config.variant and kind == ESSAYS:
        before = len(instances)
        instances = [i for i in instances if i.variant == config.variant]
        logger.info(f"[IO] Kept {len(instances)}/{before} paragraphs of variant {config.variant}")
    for instance in instances:
        violations = validate_instance(instance)
        if violations:
            raise CorpusFormatError("; ".join(violations), instance_id=instance.id)
    return instances


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_frame(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    logger.info(f"[IO] Wrote {len(frame)} rows to {path}")


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_decode(config: RunConfig, args) -> int:
    instances = load_corpus(config, args.corpus)
    predictions = decode_corpus(instances, config.method, config.weights, jobs=config.jobs, progress=not config.quiet)

    out = _out_dir(config)
    path = out / "predictions.jsonl"
    objectives = []
    infeasible_ids = []
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for prediction in predictions:
            if not prediction.feasible:
                infeasible_ids.append(prediction.id)
                continue
            objectives.append(prediction.objective)
            f.write(to_json_line({
                "id": prediction.id,
                "pred": labels_to_json(prediction.labels),
                "objective": prediction.objective,
            }) + "\n")
        mean_objective = math.fsum(objectives) / len(objectives) if objectives else None
        f.write(to_json_line({
            "summary": True,
            "method": config.method,
            "instances": len(predictions),
            "mean_objective": mean_objective,
            "infeasible_count": len(infeasible_ids),
            "infeasible_ids": infeasible_ids,
        }) + "\n")

    if args.dump_lp:
        dump_dir = Path(args.dump_lp)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for instance in instances:
            encoder = essay_ilp if isinstance(instance, EssayInstance) else microtext_ilp
            problem, _ = encoder.encode(instance, config.weights)
            (dump_dir / f"{instance.id}.lp").write_text(format_lp(problem), encoding="utf-8")
        logger.info(f"[IO] Dumped {len(instances)} programs to {dump_dir}")

    banner(f"DECODE ({config.method})")
    print(f"Instances:   {len(predictions)}")
    print(f"Infeasible:  {len(infeasible_ids)}" + (f"  {', '.join(infeasible_ids)}" if infeasible_ids else ""))
    if mean_objective is not None:
        print(f"Mean objective: {mean_objective:.6f}")
    print(f"Predictions: {path}")
    return EXIT_OK


def cmd_evaluate(config: RunConfig, args) -> int:
    instances = load_corpus(config, args.corpus)
    summary = run_evaluation(
        instances, methods=config.methods, weights=config.weights, k=config.k, seed=config.seed,
        tune=args.tune, jobs=config.jobs, progress=not config.quiet,
    )
    out = _out_dir(config)
    _write_frame(summary.to_frame(), out / "report.csv")
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary.to_dict(), f, indent=2)
        f.write("\n")

    banner(f"EVALUATE ({summary.kind}, {summary.k}-fold, seed {summary.seed})")
    print(summary.table().round(3).to_string())
    for report in summary.reports:
        for sig in report.significance:
            print(f"{sig.method} vs {sig.baseline}: t={sig.t:.3f} p={sig.p:.4f} {sig.note}".rstrip())
    print(f"Report: {out / 'report.csv'}")
    return EXIT_OK


def cmd_simulate(config: RunConfig, args) -> int:
    instances = load_corpus(config, args.corpus)
    kind = corpus_kind(instances)
    fractions = args.fractions or list(SIMULATION_FRACTIONS)
    for fraction in fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"fraction {fraction} outside [0, 1]")

    if args.task == "all":
        groups = [list(tasks_for(kind))]
    elif args.task == "each":
        groups = [[task] for task in tasks_for(kind)]
    else:
        groups = [[args.task]]

    frames = [
        run_simulation(instances, config.method, config.weights, tasks, fractions, config.seed,
                       jobs=config.jobs, progress=not config.quiet)
        for tasks in groups
    ]
    frame = pd.concat(frames, ignore_index=True)
    path = _out_dir(config) / "simulation.csv"
    _write_frame(frame, path)

    banner(f"SIMULATE ({config.method})")
    print(frame.pivot_table(index=["overwritten", "fraction"], columns="task", values="f1").round(3).to_string())
    print(f"Curves: {path}")
    return EXIT_OK


def cmd_sweep(config: RunConfig, args) -> int:
    instances = load_corpus(config, args.corpus)
    kind = corpus_kind(instances)
    grid = args.grid or list(SWEEP_GRID)
    if kind == MICROTEXT:
        targets = list(tasks_for(kind)) if args.target in (None, "each") else [args.target]
    else:
        targets = ["beta" if config.method == "mst" else "v"]

    frames = []
    for target in targets:
        curve = weight_sweep(instances, target, grid, config.method, config.weights,
                             jobs=config.jobs, progress=not config.quiet)
        frames.append(sweep_frame(curve, config.method, target))
    frame = pd.concat(frames, ignore_index=True)
    path = _out_dir(config) / "sweep.csv"
    _write_frame(frame, path)

    banner(f"SWEEP ({config.method})")
    print(frame.pivot_table(index=["target", "x"], columns="task", values="f1").round(3).to_string())
    print(f"Curves: {path}")
    return EXIT_OK


def cmd_synth(config: RunConfig, args) -> int:
    if not config.kind:
        raise ValueError("synth needs --kind")
    variant = config.variant or "mod1"
    noise = NoiseSpec(epsilon=args.epsilon, seed=config.seed, flip=args.flip)
    n_max = args.n_max if args.n_max is not None else args.n
    instances = gen_corpus(config.kind, args.count, (args.n, n_max), noise,
                           variant=variant, isolate_rate=args.isolate_rate)
    write_corpus(args.output, instances)

    banner("SYNTH")
    print(f"Kind:      {config.kind}" + (f" ({variant})" if config.kind == ESSAYS else ""))
    print(f"Instances: {len(instances)}")
    print(f"Output:    {args.output}")
    return EXIT_OK


def cmd_validate(config: RunConfig, args) -> int:
    malformed = 0
    audited = 0
    total = 0
    with open(args.corpus, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            total += 1
            try:
                instance = parse_instance(line, line_no)
            except CorpusFormatError as e:
                malformed += 1
                print(f"[INVALID] {e}")
                continue
            violations = validate_instance(instance)
            if violations:
                malformed += 1
                for violation in violations:
                    print(f"[INVALID] line {line_no}, id {instance.id}: {violation}")
                continue
            families = check_gold_constraints(instance)
            if families:
                audited += 1
                print(f"[GOLD] line {line_no}, id {instance.id}: violates {', '.join(families)}")

    banner("VALIDATE")
    print(f"Instances: {total}")
    print(f"Malformed: {malformed}")
    print(f"Gold constraint violations: {audited}")
    return EXIT_DATA if malformed else EXIT_OK


def cmd_stats(config: RunConfig, args) -> int:
    instances = load_corpus(config, args.corpus)
    banner("CORPUS STATISTICS")
    print(json.dumps(corpus_statistics(instances), indent=2))
    return EXIT_OK


COMMANDS = {
    "decode": cmd_decode,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "validate": cmd_validate,
    "stats": cmd_stats,
}


# =============================================================================
# ARGUMENTS
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON config file (see config.example.json)")
    common.add_argument("--kind", choices=KINDS, help="Corpus kind (detected from the corpus when omitted)")
    common.add_argument("--method", choices=METHODS, help="Decoding method (default ilp)")
    common.add_argument("--methods", type=str, help="Comma-separated methods for evaluate")
    common.add_argument("--weights", type=str, help="Microtext weights w1,w2,w3,w4")
    common.add_argument("--v", type=float, help="Essay component/relation balance")
    common.add_argument("--beta", type=float, help="Essay MST premise/support mix")
    common.add_argument("--variant", choices=VARIANTS, help="Essay variant")
    common.add_argument("--k", type=int, help="Cross-validation folds (default 10)")
    common.add_argument("--seed", type=int, help="Random seed (default 0)")
    common.add_argument("--jobs", type=int, help="Worker threads (default 1)")
    common.add_argument("--out", type=str, help="Output directory (default out)")
    common.add_argument("--log-file", dest="log_file", type=str, help="Also log to this file")
    common.add_argument("--log-level", dest="log_level", type=str.upper, choices=LOG_LEVELS)
    common.add_argument("--quiet", action="store_true", default=None, help="No progress bars")

    parser = argparse.ArgumentParser(
        description="Joint argument structure decoding - separate, MST and ILP decoders"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", parents=[common], help="Decode a corpus")
    p.add_argument("corpus")
    p.add_argument("--dump-lp", dest="dump_lp", type=str, help="Write each instance's program to DIR/<id>.lp")

    p = sub.add_parser("evaluate", parents=[common], help="Cross-validated method comparison")
    p.add_argument("corpus")
    p.add_argument("--tune", action="store_true", help="Tune weights on each training fold")

    p = sub.add_parser("simulate", parents=[common], help="Overwrite simulation")
    p.add_argument("corpus")
    p.add_argument("--task", default="each", help="Task to overwrite, 'each' (one at a time) or 'all'")
    p.add_argument("--fractions", type=_float_list, help="Comma-separated fractions (default 0,0.25,0.5,0.75,1)")

    p = sub.add_parser("sweep", parents=[common], help="Combination-weight sweep")
    p.add_argument("corpus")
    p.add_argument("--target", type=str, help="Microtext target task or 'each' (default)")
    p.add_argument("--grid", type=_float_list, help="Comma-separated x values (default 0.1..0.9)")

    p = sub.add_parser("synth", parents=[common], help="Write a synthetic corpus")
    p.add_argument("output")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n", type=int, default=5, help="Instance size (lower bound with --n-max)")
    p.add_argument("--n-max", dest="n_max", type=int, help="Upper size bound")
    p.add_argument("--epsilon", type=float, default=0.4, help="Uniform noise mixing weight")
    p.add_argument("--flip", type=float, default=0.0, help="Per-site wrong-target rate")
    p.add_argument("--isolate-rate", dest="isolate_rate", type=float, default=0.0, help="mod1 isolated premises")

    p = sub.add_parser("validate", parents=[common], help="Check a corpus file")
    p.add_argument("corpus")

    p = sub.add_parser("stats", parents=[common], help="Gold class counts")
    p.add_argument("corpus")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    if sys.platform == "win32" and hasattr(sys.stdout, "buffer"):
        sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", errors="replace")

    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = build_config({key: getattr(args, key, None) for key in CONFIG_KEYS}, args.config or "")
    except (OSError, json.JSONDecodeError) as e:
        print(f"[CONFIG] Error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"[CONFIG] Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(config.log_level, config.log_file)
    logger.debug(f"[CONFIG] {config.to_dict()}")

    try:
        return COMMANDS[args.command](config, args)
    except (CorpusFormatError, IlpError) as e:
        logger.error(f"[IO] {e}")
        return EXIT_DATA
    except OSError as e:
        logger.error(f"[IO] {e}")
        return EXIT_DATA
    except ValueError as e:
        logger.error(f"[CONFIG] {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
