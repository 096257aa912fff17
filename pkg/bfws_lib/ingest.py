"""Problem files: parsing, grounding into a Problem and structural checks.

A problem file is a single UTF-8 JSON document:

    {"version": 1,
     "agents": ["truck1", "truck2"],
     "facts": ["pkg1-at-loc1", ...],
     "init": [...], "goals": [...],
     "private_goals": false,
     "actions": [{"name": "...", "agent": "truck1",
                  "prec": [...], "add": [...], "del": [...], "cost": 1}]}

Agent, fact and action ids are assigned in lexicographic order of their
names, so equal documents always give identical problems.
"""

from __future__ import annotations

import json
import logging
import math
from typing import Any, Dict, List, Sequence, Tuple

from .bitset import ids_of, popcount
from .model import PUBLIC, Action, Fact, Problem
from .privacy import classify

FORMAT_VERSION = 1

_TOP_KEYS = ("version", "agents", "facts", "init", "goals", "actions")
_ACTION_KEYS = ("name", "agent", "prec", "add", "del")


class ParseError(ValueError):
    pass


class SemanticError(ValueError):
    pass


def _name_list(value: Any, what: str) -> List[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ParseError(what + " must be a list of strings")
    return value


def _unique(names: Sequence[str], what: str) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise SemanticError("duplicate " + what + " '" + name + "'")
        seen.add(name)


def _check_shape(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise ParseError("problem document must be a JSON object")
    for key in _TOP_KEYS:
        if key not in doc:
            raise ParseError("missing field '" + key + "'")
    version = doc["version"]
    if isinstance(version, bool) or version != FORMAT_VERSION:
        raise ParseError("unsupported format version " + repr(version))
    if not isinstance(doc.get("private_goals", False), bool):
        raise ParseError("private_goals must be a boolean")
    if not isinstance(doc["actions"], list):
        raise ParseError("actions must be a list")
    for rec in doc["actions"]:
        if not isinstance(rec, dict):
            raise ParseError("every action must be a JSON object")
        for key in _ACTION_KEYS:
            if key not in rec:
                raise ParseError("action is missing field '" + key + "'")
        if not isinstance(rec["name"], str) or not isinstance(rec["agent"], str):
            raise ParseError("action name and agent must be strings")
        cost = rec.get("cost", 1)
        if isinstance(cost, bool) or not isinstance(cost, (int, float)):
            raise ParseError("cost of action '" + rec["name"] + "' must be a number")


def problem_from_document(doc: Any) -> Problem:
    """Ground a decoded problem document and assign privacy labels."""
    _check_shape(doc)
    agent_names = _name_list(doc["agents"], "agents")
    fact_names = _name_list(doc["facts"], "facts")
    _unique(agent_names, "agent")
    _unique(fact_names, "fact")
    if not agent_names:
        raise SemanticError("problem has no agents")
    agents = sorted(agent_names)
    agent_index = {name: i for i, name in enumerate(agents)}
    facts = [Fact(i, name, PUBLIC) for i, name in enumerate(sorted(fact_names))]
    fact_index = {f.name: f.id for f in facts}

    def mask(names: Any, where: str) -> int:
        result = 0
        for name in _name_list(names, where):
            if name not in fact_index:
                raise SemanticError("undefined fact '" + name + "' in " + where)
            result |= 1 << fact_index[name]
        return result

    records = doc["actions"]
    _unique([rec["name"] for rec in records], "action")
    per_agent: List[List[Action]] = [[] for _ in agents]
    for aid, rec in enumerate(sorted(records, key=lambda r: r["name"])):
        name = rec["name"]
        if rec["agent"] not in agent_index:
            raise SemanticError("unknown agent '" + rec["agent"] + "' for action '" + name + "'")
        cost = rec.get("cost", 1)
        if not math.isfinite(cost):
            raise SemanticError("cost of action '" + name + "' is not finite")
        if cost < 0:
            raise SemanticError("negative cost for action '" + name + "'")
        where = "action '" + name + "'"
        prec, add, delete = mask(rec["prec"], where), mask(rec["add"], where), mask(rec["del"], where)
        if add & delete:
            raise SemanticError("add and del of action '" + name + "' overlap")
        agent = agent_index[rec["agent"]]
        per_agent[agent].append(Action(aid, name, agent, prec, add, delete, float(cost)))

    problem = Problem(agents, facts, per_agent, mask(doc["init"], "init"), mask(doc["goals"], "goals"))
    problem.check_disjoint_actions()
    labels = classify(problem, private_goals=doc.get("private_goals", False))
    problem = problem.with_labels(labels.fact_owner, labels.action_public)
    logging.info("Loaded problem: %d agents, %d facts, %d actions, %d goals",
                 problem.num_agents, problem.num_facts, len(problem.action_list),
                 popcount(problem.goals))
    return problem


def problem_to_document(problem: Problem) -> Dict[str, Any]:
    names = problem.fact_names
    doc: Dict[str, Any] = {
        "version": FORMAT_VERSION,
        "agents": list(problem.agents),
        "facts": [f.name for f in problem.facts],
        "init": names(problem.init),
        "goals": names(problem.goals),
    }
    if any(not problem.facts[g].is_public for g in ids_of(problem.goals)):
        doc["private_goals"] = True
    doc["actions"] = [{
        "name": a.name,
        "agent": problem.agents[a.agent],
        "prec": names(a.prec),
        "add": names(a.add),
        "del": names(a.delete),
        "cost": a.cost if a.cost != int(a.cost) else int(a.cost),
    } for a in problem.action_list]
    return doc


def load_problem(path: str) -> Problem:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(path + ": " + str(e))
    try:
        return problem_from_document(doc)
    except (ParseError, SemanticError) as e:
        raise type(e)(path + ": " + str(e))


def save_problem(problem: Problem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(problem_to_document(problem), f, indent=1)
        f.write("\n")


def split_single_goal(problem: Problem) -> List[Problem]:
    """One problem per goal, in goal id order."""
    goals = ids_of(problem.goals)
    if len(goals) <= 1:
        return [problem]
    return [problem.with_goals(1 << g) for g in goals]


def load_plan(path: str) -> List[Tuple[str, str]]:
    """Read a plan file: a JSON list of {"agent": ..., "action": ...}."""
    with open(path, "rb") as f:
        raw = f.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(path + ": " + str(e))
    if not isinstance(doc, list):
        raise ParseError(path + ": plan must be a JSON list")
    steps = []
    for rec in doc:
        if (not isinstance(rec, dict) or not isinstance(rec.get("agent"), str)
                or not isinstance(rec.get("action"), str)):
            raise ParseError(path + ": every plan step needs string 'agent' and 'action'")
        steps.append((rec["agent"], rec["action"]))
    return steps


def plan_to_document(steps: Sequence[Tuple[str, str]]) -> List[Dict[str, str]]:
    return [{"agent": agent, "action": action} for agent, action in steps]
