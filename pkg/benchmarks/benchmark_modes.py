#!/usr/bin/env python3
"""Time deterministic rounds against concurrent agent threads on one problem."""

from __future__ import annotations

import argparse
import os
import statistics
import time

from mabfws.bfws_lib import fixtures
from mabfws.bfws_lib.harness import HEURISTICS, resolve_plan, validate
from mabfws.bfws_lib.heuristics import EvalVariant
from mabfws.bfws_lib.ingest import load_problem
from mabfws.bfws_lib.search import MODES, solve


def _load(name: str):
    if os.path.exists(name):
        return load_problem(name)
    return fixtures.problem(name)


def _run_once(problem, variant, mode, seed):
    start = time.perf_counter()
    result = solve(problem, variant, mode=mode, seed=seed if mode == "det" else None)
    elapsed = time.perf_counter() - start
    if result.solved and not validate(problem, resolve_plan(problem, result)):
        raise RuntimeError(f"{mode} run returned an invalid plan")
    messages = sum(s["messages_sent"] for s in result.stats)
    return elapsed, result.solved, len(result.steps), messages


def _summary(values):
    return {
        "mean": statistics.fmean(values),
        "min": min(values),
        "max": max(values),
        "stdev": statistics.stdev(values) if len(values) > 1 else 0.0,
    }


def _run_mode(problem, variant, mode, runs, seed):
    durations = []
    outcomes = set()
    for _ in range(runs):
        elapsed, solved, length, messages = _run_once(problem, variant, mode, seed)
        durations.append(elapsed)
        outcomes.add((solved, length, messages))
    return {"label": mode, "summary": _summary(durations), "outcomes": outcomes}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("problem", nargs="?", default=fixtures.MESSAGE_HEAVY,
                        help="problem file or bundled problem name")
    parser.add_argument("--heuristic", choices=HEURISTICS, default="f6", help="evaluation function")
    parser.add_argument("--runs", type=int, default=5, help="timed runs per mode")
    parser.add_argument("--warmup", type=int, default=1, help="warmup runs per mode")
    parser.add_argument("--seed", type=int, default=0, help="seed for deterministic runs")
    args = parser.parse_args()

    problem = _load(args.problem)
    variant = EvalVariant.parse(args.heuristic)

    for _ in range(args.warmup):
        for mode in MODES:
            _run_once(problem, variant, mode, args.seed)

    results = [_run_mode(problem, variant, mode, args.runs, args.seed) for mode in MODES]

    print(f"Problem: {args.problem} ({problem.num_agents} agents)")
    print(f"Runs per mode: {args.runs}")
    print(f"Warmup runs: {args.warmup}")
    print()

    for result in results:
        s = result["summary"]
        print(
            f"{result['label']:<6} mean={s['mean']:.3f}s "
            f"min={s['min']:.3f}s max={s['max']:.3f}s stdev={s['stdev']:.3f}s"
        )
        print(f"  solved/length/messages: {sorted(result['outcomes'])}")

    ratio = results[1]["summary"]["mean"] / results[0]["summary"]["mean"]
    print()
    print(f"Slowdown (conc / det): {ratio:.2f}x")


if __name__ == "__main__":
    main()
