"""Plan validation, repeated runs, width profiling and suite benchmarks."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from statistics import fmean
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, TextIO, Tuple

from tabulate import tabulate

from .bitset import ids_of, popcount
from .heuristics import EvalVariant
from .ingest import ParseError, SemanticError, load_problem, split_single_goal
from .model import Problem, State, applicable, apply, goal_satisfied
from .search import MODES, SolveResult, ZeroCostWithPruning, k_name, parse_k, solve


class ConfigError(ValueError):
    pass


def _env_float(name: str, default: float) -> float:
    val = os.environ.get(name)
    if val is None or not val.strip():
        return default
    try:
        return float(val)
    except ValueError:
        raise ConfigError(name + " must be a number, got " + repr(val))


def _env_int(name: str, default: int) -> int:
    val = os.environ.get(name)
    if val is None or not val.strip():
        return default
    try:
        return int(val)
    except ValueError:
        raise ConfigError(name + " must be an integer, got " + repr(val))


DEFAULT_TIME_LIMIT = 60.0
DEFAULT_REPEATS = 5
DEFAULT_MODE = "det"
DEFAULT_SEED = 0
DEFAULT_HEURISTIC = "f1"

HEURISTICS = ("hff", "f1", "f2", "f3", "f4", "f5", "f6")


def log_level(verbose: int = 0) -> int:
    """Level for logging.basicConfig: -v/-vv on the command line win over MABFWS_LOG_LEVEL."""
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    name = os.environ.get("MABFWS_LOG_LEVEL", "").strip().upper()
    if not name:
        return logging.WARNING
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError("MABFWS_LOG_LEVEL names no logging level: " + repr(name))
    return level


def default_time_limit() -> float:
    return _env_float("MABFWS_TIME_LIMIT", DEFAULT_TIME_LIMIT)


def default_repeats() -> int:
    return _env_int("MABFWS_REPEATS", DEFAULT_REPEATS)


@dataclass
class RunConfig:
    problem: Optional[str] = None
    heuristic: str = DEFAULT_HEURISTIC
    k: Any = "unbounded"
    mode: str = DEFAULT_MODE
    seed: Optional[int] = DEFAULT_SEED
    time_limit: float = field(default_factory=default_time_limit)
    repeats: int = field(default_factory=default_repeats)

    def __post_init__(self):
        try:
            self.variant = EvalVariant.parse(str(self.heuristic))
        except ValueError as e:
            raise ConfigError(str(e))
        self.heuristic = self.variant.value
        try:
            self.k_value = parse_k(self.k)
        except ValueError as e:
            raise ConfigError(str(e))
        self.k = k_name(self.k_value)
        if self.mode not in MODES:
            raise ConfigError("mode must be one of " + ", ".join(MODES) + ", got " + repr(self.mode))
        if self.mode == "det" and self.seed is None:
            raise ConfigError("deterministic mode requires a seed")
        if isinstance(self.repeats, bool) or not isinstance(self.repeats, int) or self.repeats < 1:
            raise ConfigError("repeats must be a positive integer")
        if not self.time_limit > 0:
            raise ConfigError("time limit must be positive")

    @classmethod
    def from_dict(cls, doc: Dict[str, Any], problem: Optional[str] = None) -> "RunConfig":
        known = ("heuristic", "k", "mode", "seed", "time_limit", "repeats")
        unknown = set(doc) - set(known)
        if unknown:
            raise ConfigError("unknown config fields: " + ", ".join(sorted(unknown)))
        return cls(problem=problem, **doc)

    @property
    def label(self) -> str:
        return self.heuristic + "/k=" + self.k

    @property
    def run_label(self) -> str:
        """label plus the mode and seed, which also change what a run measures."""
        label = self.label + "/" + self.mode
        if self.seed is not None:
            label += "/seed=" + str(self.seed)
        return label


def load_configs(path: str) -> List[RunConfig]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(path + ": " + str(e))
    if not isinstance(doc, list) or not all(isinstance(d, dict) for d in doc):
        raise ConfigError(path + ": expected a JSON list of objects")
    return [RunConfig.from_dict(d) for d in doc]


class ValidationResult(NamedTuple):
    ok: bool
    index: Optional[int]
    reason: str

    def __bool__(self):
        return self.ok


def validate(problem: Problem, steps: Sequence[Tuple[str, str]]) -> ValidationResult:
    """Execute the plan from the initial state with full knowledge of the problem."""
    state = State(problem.init)
    for i, (agent, action_name) in enumerate(steps):
        act = problem.action_index.get(action_name)
        if act is None:
            return ValidationResult(False, i, "unknown action '" + action_name + "'")
        if problem.agents[act.agent] != agent:
            return ValidationResult(False, i, "action '" + action_name + "' does not belong to agent '" + agent + "'")
        if not applicable(state, act):
            missing = problem.fact_names(act.prec & ~state.plain)
            return ValidationResult(False, i, "action '" + action_name + "' not applicable, missing " + ", ".join(missing))
        state = apply(state, act)
    if not goal_satisfied(state, problem.goals):
        missing = problem.fact_names(problem.goals & ~state.plain)
        return ValidationResult(False, len(steps), "goals not reached: " + ", ".join(missing))
    return ValidationResult(True, None, "")


def resolve_plan(problem: Problem, result: SolveResult) -> List[Tuple[str, str]]:
    """Name every step of a solved run using the owners' vaults."""
    steps = []
    for agent, ref in result.steps:
        action = problem.action_list[result.vaults[agent].reveal_step(ref)]
        steps.append((problem.agents[agent], action.name))
    return steps


def plan_cost(problem: Problem, steps: Sequence[Tuple[str, str]]) -> float:
    return sum(problem.action_index[name].cost for _, name in steps)


class RunOutcome(NamedTuple):
    solved: bool
    timed_out: bool
    elapsed: float
    elapsed_unit: str
    plan: List[Tuple[str, str]]
    stats: List[Dict[str, int]]


def run_once(problem: Problem, config: RunConfig, capture: bool = False) -> Tuple[RunOutcome, SolveResult]:
    result = solve(problem, config.variant, config.k_value, config.mode, config.seed,
                   time_limit=config.time_limit, capture=capture)
    plan: List[Tuple[str, str]] = []
    solved = result.solved
    if solved:
        plan = resolve_plan(problem, result)
        check = validate(problem, plan)
        if not check:
            logging.warning("Rejected plan at step %s: %s", check.index, check.reason)
            solved = False
    stats = [dict(s) for s in result.stats]
    outcome = RunOutcome(solved, result.timed_out, result.elapsed, result.elapsed_unit, plan, stats)
    return outcome, result


def median_outcome(outcomes: Sequence[RunOutcome]) -> Tuple[RunOutcome, bool]:
    """Lower-median run by elapsed time, timeouts last; and whether it counts as solved.

    A problem is unsolved when more than half of the runs timed out.
    """
    ranked = sorted(outcomes, key=lambda o: math.inf if o.timed_out else o.elapsed)
    median = ranked[(len(ranked) - 1) // 2]
    timeouts = sum(1 for o in outcomes if o.timed_out)
    solved = timeouts <= len(outcomes) // 2 and median.solved and not median.timed_out
    return median, solved


@dataclass
class RunReport:
    problem: str
    heuristic: str
    k: str
    mode: str
    seed: Optional[int]
    repeats: int
    solved: bool
    timeouts: int
    plan: List[Tuple[str, str]]
    plan_length: int
    plan_cost: float
    elapsed: float
    elapsed_unit: str
    stats: Dict[str, Dict[str, int]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "heuristic": self.heuristic,
            "k": self.k,
            "mode": self.mode,
            "seed": self.seed,
            "repeats": self.repeats,
            "solved": self.solved,
            "timeouts": self.timeouts,
            "plan": [{"agent": a, "action": n} for a, n in self.plan],
            "plan_length": self.plan_length,
            "plan_cost": self.plan_cost,
            "elapsed": self.elapsed,
            "elapsed_unit": self.elapsed_unit,
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def total(self, key: str) -> int:
        return sum(s.get(key, 0) for s in self.stats.values())


def run(config: RunConfig, problem: Optional[Problem] = None) -> RunReport:
    """Repeat the configured run and report the median one."""
    if problem is None:
        if config.problem is None:
            raise ConfigError("no problem given")
        problem = load_problem(config.problem)
    outcomes = []
    for i in range(config.repeats):
        outcome, _ = run_once(problem, config)
        logging.info("Run %d/%d: solved=%s elapsed=%s %s", i + 1, config.repeats,
                     outcome.solved, outcome.elapsed, outcome.elapsed_unit)
        outcomes.append(outcome)
    median, solved = median_outcome(outcomes)
    plan = median.plan if solved else []
    return RunReport(
        problem=os.path.basename(config.problem) if config.problem else "<memory>",
        heuristic=config.heuristic,
        k=config.k,
        mode=config.mode,
        seed=config.seed,
        repeats=config.repeats,
        solved=solved,
        timeouts=sum(1 for o in outcomes if o.timed_out),
        plan=plan,
        plan_length=len(plan),
        plan_cost=plan_cost(problem, plan) if plan else 0.0,
        elapsed=median.elapsed,
        elapsed_unit=median.elapsed_unit,
        stats={problem.agents[i]: s for i, s in enumerate(median.stats)},
    )


def report_table(report: RunReport) -> str:
    keys = ("expanded", "generated", "pruned", "messages_sent", "states_sent", "rpg_builds")
    rows = [[agent] + [s.get(key, 0) for key in keys] for agent, s in report.stats.items()]
    return tabulate(rows, headers=("agent",) + keys)


def expansion_bound(problem: Problem, agent: int, k: int, costs: str = "unit") -> int:
    """Per-agent cap on expansions under novelty pruning with bound k.

    costs is "zero", "unit" or "general" (non-negative costs).
    """
    private = [popcount(m) for m in problem.private_masks]
    n_i = sum(p ** k for j, p in enumerate(private) if j != agent)
    f_i = popcount(problem.public_mask) + private[agent] + n_i
    if costs == "zero":
        return f_i ** k
    if costs == "unit":
        return f_i ** (2 * k)
    if costs == "general":
        return f_i ** (2 * k) * len(problem.action_list)
    raise ValueError("costs must be zero, unit or general")


class WidthRow(NamedTuple):
    goal: str
    solved_k1: bool
    solved_k2: bool


class WidthProfile(NamedTuple):
    rows: List[WidthRow]
    coverage_k1: float
    coverage_k2: float


def width_profile(problem: Problem, mode: str = DEFAULT_MODE, seed: Optional[int] = DEFAULT_SEED,
                  time_limit: Optional[float] = None) -> WidthProfile:
    """Solve each single-goal split at k=1 and k=2 with the blind ranking of novelty then g.

    Novelty pruning is undefined with zero-cost actions; such splits are
    reported unsolved with a warning.
    """
    rows = []
    warned = False
    for single in split_single_goal(problem):
        goal = problem.facts[ids_of(single.goals)[0]].name if single.goals else "<none>"
        solved = []
        for k in (1, 2):
            try:
                result = solve(single, EvalVariant.WG, k, mode, seed, time_limit=time_limit)
            except ZeroCostWithPruning as e:
                if not warned:
                    logging.warning("Width profile not run: %s", e)
                    warned = True
                solved.append(False)
                continue
            ok = result.solved and bool(validate(single, resolve_plan(single, result)))
            solved.append(ok)
        rows.append(WidthRow(goal, solved[0], solved[1]))
    total = len(rows)
    cov1 = 100.0 * sum(r.solved_k1 for r in rows) / total if total else 0.0
    cov2 = 100.0 * sum(r.solved_k2 for r in rows) / total if total else 0.0
    return WidthProfile(rows, cov1, cov2)


def format_width_profile(profile: WidthProfile) -> str:
    rows = [[r.goal, "yes" if r.solved_k1 else "no", "yes" if r.solved_k2 else "no"] for r in profile.rows]
    rows.append(["coverage %", "%.2f" % profile.coverage_k1, "%.2f" % profile.coverage_k2])
    return tabulate(rows, headers=["goal", "1-MA-BFWS", "2-MA-BFWS"])


def coverage_curve(reports: Iterable[RunReport], limits: Sequence[float],
                   unit: str = "seconds") -> List[Tuple[float, int]]:
    """Number of solved problems whose median elapsed fits under each limit.

    limits are in unit; every report must measure elapsed in the same unit.
    """
    reports = list(reports)
    mixed = sorted(set(r.elapsed_unit for r in reports) - {unit})
    if mixed:
        raise ValueError("coverage limits are in " + unit + " but reports measure " + ", ".join(mixed))
    return [(limit, sum(1 for r in reports if r.solved and r.elapsed <= limit)) for limit in limits]


CSV_COLUMNS = (
    "section",
    "problem",
    "config",
    "solved",
    "plan_length",
    "plan_cost",
    "elapsed",
    "elapsed_unit",
    "messages_k",
    "states_k",
    "expanded",
    "generated",
    "pruned",
    "rpg_builds",
    "error",
)


def _fmt(value: float) -> str:
    return "%.3f" % value


def _report_row(name: str, label: str, report: RunReport) -> Dict[str, str]:
    return {
        "section": "run",
        "problem": name,
        "config": label,
        "solved": str(int(report.solved)),
        "plan_length": str(report.plan_length),
        "plan_cost": _fmt(report.plan_cost),
        "elapsed": _fmt(report.elapsed),
        "elapsed_unit": report.elapsed_unit,
        "messages_k": _fmt(report.total("messages_sent") / 1000.0),
        "states_k": _fmt(report.total("generated") / 1000.0),
        "expanded": str(report.total("expanded")),
        "generated": str(report.total("generated")),
        "pruned": str(report.total("pruned")),
        "rpg_builds": str(report.total("rpg_builds")),
        "error": "",
    }


def bench_labels(configs: Sequence[RunConfig]) -> List[str]:
    """One distinct CSV label per config; repeated configs get a #position suffix."""
    labels = [c.run_label for c in configs]
    return [label if labels.count(label) == 1 else label + "#" + str(i) for i, label in enumerate(labels)]


def bench_suite(directory: str, configs: Sequence[RunConfig], out: TextIO) -> List[Dict[str, str]]:
    """Run every config on every problem file in directory and write the CSV to out.

    Aggregate rows average over the problems solved by all configs.
    """
    names = sorted(n for n in os.listdir(directory) if n.endswith(".json"))
    labels = bench_labels(configs)
    rows: List[Dict[str, str]] = []
    reports: Dict[Tuple[str, int], RunReport] = {}
    for name in names:
        path = os.path.join(directory, name)
        try:
            problem = load_problem(path)
        except (OSError, ParseError, SemanticError) as e:
            logging.warning("Skipping %s: %s", name, e)
            for label in labels:
                rows.append(_error_row(name, label, str(e)))
            continue
        for i, config in enumerate(configs):
            try:
                report = run(config, problem)
            except (ValueError, KeyError) as e:
                logging.warning("%s with %s failed: %s", name, labels[i], e)
                rows.append(_error_row(name, labels[i], str(e)))
                continue
            report.problem = name
            reports[(name, i)] = report
            rows.append(_report_row(name, labels[i], report))

    common = [n for n in names if all(
        (n, i) in reports and reports[(n, i)].solved for i in range(len(configs)))]
    for i, label in enumerate(labels):
        if not names:
            break
        solved = [r for (n, j), r in reports.items() if j == i and r.solved]
        chosen = [reports[(n, i)] for n in common]

        def avg(values: List[float]) -> str:
            return _fmt(fmean(values)) if values else ""

        rows.append({
            "section": "aggregate",
            "problem": "*",
            "config": label,
            "solved": str(len(solved)),
            "plan_length": avg([r.plan_length for r in chosen]),
            "plan_cost": avg([r.plan_cost for r in chosen]),
            "elapsed": avg([r.elapsed for r in chosen]),
            "elapsed_unit": chosen[0].elapsed_unit if chosen else "",
            "messages_k": avg([r.total("messages_sent") / 1000.0 for r in chosen]),
            "states_k": avg([r.total("generated") / 1000.0 for r in chosen]),
            "expanded": avg([r.total("expanded") for r in chosen]),
            "generated": avg([r.total("generated") for r in chosen]),
            "pruned": avg([r.total("pruned") for r in chosen]),
            "rpg_builds": avg([r.total("rpg_builds") for r in chosen]),
            "error": "",
        })

    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return rows


def coverage_table(rows: Sequence[Dict[str, str]]) -> str:
    """Problem by config matrix of the run rows of bench_suite, with a solved-count footer."""
    configs: List[str] = []
    matrix: Dict[str, Dict[str, str]] = {}
    for row in rows:
        if row["section"] != "run":
            continue
        if row["config"] not in configs:
            configs.append(row["config"])
        if row["error"]:
            mark = "error"
        else:
            mark = "yes" if row["solved"] == "1" else "no"
        matrix.setdefault(row["problem"], {})[row["config"]] = mark
    table = [[name] + [marks.get(c, "") for c in configs] for name, marks in matrix.items()]
    table.append(["solved"] + [sum(1 for marks in matrix.values() if marks.get(c) == "yes") for c in configs])
    return tabulate(table, headers=["problem"] + configs)


def _error_row(name: str, label: str, error: str) -> Dict[str, str]:
    row = {col: "" for col in CSV_COLUMNS}
    row.update(section="run", problem=name, config=label, solved="0", error=error)
    return row
