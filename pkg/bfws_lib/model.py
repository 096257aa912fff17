"""Grounded MA-STRIPS model.

Facts are dense integer ids and fact-sets are int bit-sets (see bitset.py).
A State holds the facts visible in plain text to one agent plus at most one
opaque token per foreign agent standing in for that agent's private facts.
All objects here are immutable once built and can be shared between agent
threads.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .bitset import ids_of, is_subset

PUBLIC = -1


class InapplicableAction(ValueError):
    pass


class Fact(object):
    __slots__ = ("id", "name", "owner")

    def __init__(self, fid: int, name: str, owner: int = PUBLIC):
        self.id = fid
        self.name = name
        self.owner = owner

    @property
    def is_public(self) -> bool:
        return self.owner == PUBLIC

    def __repr__(self):
        return "Fact(%d, %r, owner=%d)" % (self.id, self.name, self.owner)


class Action(object):
    __slots__ = ("id", "name", "agent", "prec", "add", "delete", "cost", "is_public")

    def __init__(self, aid: int, name: str, agent: int, prec: int, add: int, delete: int,
                 cost: float = 1.0, is_public: bool = True):
        if add & delete:
            raise ValueError("add and del effects of action '" + name + "' overlap")
        if cost < 0:
            raise ValueError("negative cost for action '" + name + "'")
        self.id = aid
        self.name = name
        self.agent = agent
        self.prec = prec
        self.add = add
        self.delete = delete
        self.cost = cost
        self.is_public = is_public

    @property
    def touched(self) -> int:
        return self.prec | self.add | self.delete

    def __repr__(self):
        return "Action(%d, %r, agent=%d)" % (self.id, self.name, self.agent)


class Token(NamedTuple):
    """Opaque stand-in for the private facts of agent `issuer`."""
    issuer: int
    digest: str
    goals_met: bool = True


class State(object):
    __slots__ = ("plain", "tokens", "_hash")

    def __init__(self, plain: int, tokens: Iterable[Token] = ()):
        self.plain = plain
        toks = tuple(sorted(tokens))
        for prev, cur in zip(toks, toks[1:]):
            if prev.issuer == cur.issuer:
                raise ValueError("more than one token for agent " + str(cur.issuer))
        self.tokens = toks
        self._hash = hash((plain, toks))

    def token_of(self, agent: int) -> Optional[Token]:
        for tok in self.tokens:
            if tok.issuer == agent:
                return tok
        return None

    def with_token(self, token: Token) -> "State":
        others = [t for t in self.tokens if t.issuer != token.issuer]
        return State(self.plain, others + [token])

    def without_token(self, agent: int) -> "State":
        return State(self.plain, [t for t in self.tokens if t.issuer != agent])

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.plain == other.plain and self.tokens == other.tokens

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "State(%s, tokens=%r)" % (list(ids_of(self.plain)), list(self.tokens))


class Problem(object):
    """Grounded task: agents, facts, per-agent actions, init and goals."""

    def __init__(self, agents: Sequence[str], facts: Sequence[Fact],
                 actions: Sequence[Sequence[Action]], init: int, goals: int):
        self.agents = tuple(agents)
        self.facts = tuple(facts)
        self.actions = tuple(tuple(acts) for acts in actions)
        self.init = init
        self.goals = goals
        if len(self.actions) != len(self.agents):
            raise ValueError("need one action list per agent")
        self.fact_index: Dict[str, int] = {f.name: f.id for f in self.facts}
        self.action_list: List[Action] = sorted(
            (a for acts in self.actions for a in acts), key=lambda a: a.id)
        self.action_index: Dict[str, Action] = {a.name: a for a in self.action_list}
        self.agent_index: Dict[str, int] = {name: i for i, name in enumerate(self.agents)}
        all_facts = (1 << len(self.facts)) - 1
        if not is_subset(init, all_facts) or not is_subset(goals, all_facts):
            raise ValueError("init and goals must be subsets of the problem facts")
        for act in self.action_list:
            if not is_subset(act.touched, all_facts):
                raise ValueError("action '" + act.name + "' references an unknown fact")
        self.public_mask = 0
        self.private_masks = [0] * len(self.agents)
        for fact in self.facts:
            if fact.is_public:
                self.public_mask |= 1 << fact.id
            else:
                self.private_masks[fact.owner] |= 1 << fact.id

    @property
    def num_facts(self) -> int:
        return len(self.facts)

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    def private_mask(self, agent: int) -> int:
        return self.private_masks[agent]

    def visible_mask(self, agent: int) -> int:
        return self.public_mask | self.private_masks[agent]

    def observable_goals(self, agent: int) -> int:
        """Public goals plus the agent's own private goals."""
        return self.goals & self.visible_mask(agent)

    def private_goals(self, agent: int) -> int:
        return self.goals & self.private_masks[agent]

    def goal_owners(self) -> Tuple[int, ...]:
        """Agents owning at least one private goal."""
        return tuple(i for i in range(len(self.agents)) if self.private_goals(i))

    def fact_names(self, mask: int) -> List[str]:
        return [self.facts[i].name for i in ids_of(mask)]

    def with_goals(self, goals: int) -> "Problem":
        return Problem(self.agents, self.facts, self.actions, self.init, goals)

    def with_labels(self, fact_owner: Sequence[int], action_public: Sequence[bool]) -> "Problem":
        """Rebuild with fact owners and action visibility from a classification."""
        facts = [Fact(f.id, f.name, fact_owner[f.id]) for f in self.facts]
        actions = [[Action(a.id, a.name, a.agent, a.prec, a.add, a.delete, a.cost,
                           action_public[a.id]) for a in acts] for acts in self.actions]
        return Problem(self.agents, facts, actions, self.init, self.goals)

    def initial_state(self, agent: int, foreign_tokens: Iterable[Token] = ()) -> State:
        return State(self.init & self.visible_mask(agent), foreign_tokens)

    def check_disjoint_actions(self) -> None:
        seen = set()
        for agent, acts in enumerate(self.actions):
            for act in acts:
                if act.agent != agent:
                    raise ValueError("action '" + act.name + "' listed under the wrong agent")
                if act.id in seen:
                    raise ValueError("action '" + act.name + "' owned by two agents")
                seen.add(act.id)


def applicable(state: State, action: Action) -> bool:
    return not (action.prec & ~state.plain)


def apply(state: State, action: Action) -> State:
    if not applicable(state, action):
        raise InapplicableAction("action '" + action.name + "' is not applicable")
    return State((state.plain & ~action.delete) | action.add, state.tokens)


def goal_satisfied(state: State, goals: int) -> bool:
    return not (goals & ~state.plain)
