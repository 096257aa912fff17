"""Relaxed planning graphs and the evaluation functions built on them.

Each agent builds its RPGs from its own actions only; foreign tokens are never
preconditions of those actions, so they are ignored. Evaluation keys are plain
tuples compared lexicographically, smaller is better.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .bitset import ids_of, popcount
from .model import Action, Problem, State
from .novelty import PartitionNoveltyTable, partition_novelty

INFINITY = math.inf
UNREACHED = -1


class RPG(object):
    """Delete-relaxed layering from one state with one agent's actions.

    fact_layers are cumulative masks; action_layers[i] holds the actions that
    first become applicable in fact layer i. prec_filter masks action
    preconditions (all bits by default).
    """

    def __init__(self, plain: int, actions: Sequence[Action], prec_filter: int = -1):
        self.prec_filter = prec_filter
        self.fact_layers: List[int] = [plain]
        self.action_layers: List[List[Action]] = []
        self._first: Dict[int, int] = {f: 0 for f in ids_of(plain)}
        self.achiever: Dict[int, Action] = {}
        self.injected = 0
        self._pending = sorted(actions, key=lambda a: a.id)
        self._saturate()
        self.base_fixpoint = self.fixpoint

    def _saturate(self) -> None:
        while True:
            cur = self.fact_layers[-1]
            ready, waiting = [], []
            for act in self._pending:
                if act.prec & self.prec_filter & ~cur:
                    waiting.append(act)
                else:
                    ready.append(act)
            self._pending = waiting
            if len(self.action_layers) < len(self.fact_layers):
                self.action_layers.append(ready)
            else:
                self.action_layers[-1].extend(ready)
            new = 0
            for act in ready:
                fresh = act.add & ~cur & ~new
                for f in ids_of(fresh):
                    self.achiever[f] = act
                new |= fresh
            if not new:
                return
            layer = len(self.fact_layers)
            for f in ids_of(new):
                self._first[f] = layer
            self.fact_layers.append(cur | new)

    def inject(self, facts: int) -> None:
        """Make facts true in the frontier layer and grow to a new fixpoint."""
        facts &= ~self.fixpoint
        if not facts:
            return
        layer = len(self.fact_layers) - 1
        for f in ids_of(facts):
            self._first[f] = layer
        self.injected |= facts
        self.fact_layers[-1] |= facts
        self._saturate()

    @property
    def fixpoint(self) -> int:
        return self.fact_layers[-1]

    @property
    def num_layers(self) -> int:
        return len(self.fact_layers)

    def first_layer_of(self, fact: int) -> int:
        return self._first.get(fact, UNREACHED)


def build_rpg(state: State, actions: Sequence[Action]) -> RPG:
    return RPG(state.plain, actions)


def relaxed_plan(rpg: RPG, goals: int, prec_filter: Optional[int] = None) -> List[Action]:
    """FF backward extraction towards the reachable part of goals.

    Facts of layer 0 and injected facts are free. The achiever of a fact is
    the lowest-id action of the layer right before the fact first appears.
    Only preconditions inside prec_filter (the graph's own filter by default)
    become subgoals.
    """
    if prec_filter is None:
        prec_filter = rpg.prec_filter
    reachable = goals & rpg.fixpoint
    n = rpg.num_layers
    goal_layers = [0] * n
    for g in ids_of(reachable):
        goal_layers[rpg.first_layer_of(g)] |= 1 << g
    true_at = [0] * n
    chosen = set()
    plan = []
    for i in range(n - 1, 0, -1):
        for g in ids_of(goal_layers[i]):
            if true_at[i] >> g & 1:
                continue
            act = rpg.achiever.get(g)
            if act is None or rpg.injected >> g & 1:
                continue
            if act.id not in chosen:
                chosen.add(act.id)
                plan.append(act)
            for p in ids_of(act.prec & prec_filter):
                layer = rpg.first_layer_of(p)
                if layer > 0 and not true_at[i - 1] >> p & 1:
                    goal_layers[layer] |= 1 << p
            true_at[i] |= act.add
            true_at[i - 1] |= act.add
    return plan


def h_ff(state: State, rpg: RPG, goals: int) -> float:
    if goals & ~rpg.fixpoint:
        return INFINITY
    return len(relaxed_plan(rpg, goals))


def count_false_goals(state: State, goals: int) -> int:
    return popcount(goals & ~state.plain)


def count_unreachable_goals(state: State, rpg: RPG, goals: int) -> int:
    return popcount(goals & ~rpg.fixpoint)


def h_ff_plus(state: State, rpg: RPG, goals: int, max_levels_seen: int) -> int:
    unreachable = count_unreachable_goals(state, rpg, goals)
    return len(relaxed_plan(rpg, goals)) + unreachable * max_levels_seen


class RelevantSet(object):
    __slots__ = ("anchor_state_id", "facts")

    def __init__(self, anchor_state_id: int, facts: int):
        self.anchor_state_id = anchor_state_id
        self.facts = facts

    @classmethod
    def from_plan(cls, anchor_state_id: int, plan: Sequence[Action], prec_filter: int = -1) -> "RelevantSet":
        facts = 0
        for act in plan:
            facts |= act.prec & prec_filter
        return cls(anchor_state_id, facts)


def relevant_count(achieved: int, relevant: RelevantSet) -> int:
    return popcount(relevant.facts) - popcount(achieved & relevant.facts)


def missing_preconditions(actions: Sequence[Action], frontier: int) -> int:
    """Preconditions no own action adds and the frontier lacks."""
    prec = add = 0
    for act in actions:
        prec |= act.prec
        add |= act.add
    return prec & ~add & ~frontier


def init_rpg_two_step(init_state: State, own_actions: Sequence[Action]) -> RPG:
    rpg = RPG(init_state.plain, own_actions)
    rpg.inject(missing_preconditions(own_actions, rpg.fixpoint))
    return rpg


def super_relaxed_plan(init_state: State, target_facts: int, own_actions: Sequence[Action],
                       init_rpg: RPG) -> List[Action]:
    """Own actions estimated to lead from the initial state to target_facts.

    Extracted from the two-step graph of the initial state, so no graph is
    built here: preconditions outside the unextended fixpoint are unreachable
    from the initial state and never become subgoals. Targets the two-step
    graph never reaches are skipped.
    """
    return relaxed_plan(init_rpg, target_facts, prec_filter=init_rpg.base_fixpoint)


class EvalVariant(Enum):
    HFF = "hff"
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    F4 = "f4"
    F5 = "f5"
    F6 = "f6"
    WG = "wg"

    @classmethod
    def parse(cls, name: str) -> "EvalVariant":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError("unknown heuristic '" + name + "'")

    @property
    def uses_relevance(self) -> bool:
        return self in (EvalVariant.F5, EvalVariant.F6)


EvalKey = Tuple[float, ...]


class Evaluator(object):
    """Per-agent evaluation state: caches, counters and the partition table.

    Nodes passed in need the attributes state, g, novelty_g, relevant and
    achieved; the relevance bookkeeping is written back onto them.
    """

    def __init__(self, problem: Problem, agent: int, variant: EvalVariant):
        self.agent = agent
        self.variant = variant
        self.actions = problem.actions[agent]
        self.goals = problem.observable_goals(agent)
        self.table = PartitionNoveltyTable()
        self.max_levels_seen = 0
        self.rpg_builds = 0
        self._init_state: Optional[State] = None
        self._init_rpg: Optional[RPG] = None
        self._init_relevant: Optional[RelevantSet] = None

    def build_rpg(self, state: State) -> RPG:
        rpg = build_rpg(state, self.actions)
        self._count(rpg)
        return rpg

    def _count(self, rpg: RPG) -> None:
        self.rpg_builds += 1
        self.max_levels_seen = max(self.max_levels_seen, rpg.num_layers)

    def _anchor_here(self, node) -> None:
        rpg = self.build_rpg(node.state)
        node.relevant = RelevantSet.from_plan(node.id, relaxed_plan(rpg, self.goals))
        node.achieved = 0

    def anchor_root(self, node) -> None:
        if self.variant is EvalVariant.F5:
            self._anchor_here(node)
        elif self.variant is EvalVariant.F6:
            self._init_state = node.state
            rpg = init_rpg_two_step(node.state, self.actions)
            self._count(rpg)
            self._init_rpg = rpg
            self._init_relevant = RelevantSet.from_plan(node.id, relaxed_plan(rpg, self.goals))
            node.relevant = self._init_relevant
            node.achieved = 0

    def anchor_received(self, node) -> None:
        if self.variant is EvalVariant.F5:
            self._anchor_here(node)
        elif self.variant is EvalVariant.F6:
            plan = super_relaxed_plan(self._init_state, node.state.plain, self.actions, self._init_rpg)
            added = 0
            for act in plan:
                added |= act.add
            node.relevant = self._init_relevant
            node.achieved = added & self._init_relevant.facts

    def inherit(self, child, parent) -> None:
        if self.variant.uses_relevance:
            child.relevant = parent.relevant
            new = child.state.plain & ~parent.state.plain
            child.achieved = parent.achieved | (new & parent.relevant.facts)

    def components(self, node) -> EvalKey:
        """Goal-directed components, novelty excluded."""
        v = self.variant
        if v is EvalVariant.WG:
            return (node.g,)
        state = node.state
        if v.uses_relevance:
            return (count_false_goals(state, self.goals), relevant_count(node.achieved, node.relevant))
        rpg = self.build_rpg(state)
        if v is EvalVariant.HFF or v is EvalVariant.F1:
            return (h_ff(state, rpg, self.goals),)
        if v is EvalVariant.F2:
            return (count_false_goals(state, self.goals), h_ff(state, rpg, self.goals))
        unreachable = count_unreachable_goals(state, rpg, self.goals)
        false_goals = count_false_goals(state, self.goals)
        if v is EvalVariant.F3:
            return (unreachable, false_goals, h_ff(state, rpg, self.goals))
        return (unreachable, false_goals, h_ff_plus(state, rpg, self.goals, self.max_levels_seen))

    def evaluate(self, node, facts: Sequence[int]) -> EvalKey:
        comps = self.components(node)
        if self.variant is EvalVariant.HFF:
            return comps
        if self.variant is EvalVariant.WG:
            return (int(node.novelty_g),) + comps
        novelty = partition_novelty(facts, comps, self.table)
        return (int(novelty),) + comps
