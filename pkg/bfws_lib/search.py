"""Per-agent best-first width search and the solver driving all agents.

Each SearchAgent explores its own state space with its own actions. States
reached by public actions are encrypted and broadcast; states received from
other agents enter the open list like generated ones. With a novelty bound k,
children whose accumulated-cost novelty exceeds k are pruned. Once an agent
pops a goal state it walks parent links back, asking the agents that sent the
received states along the way for the missing segments, and broadcasts the
assembled plan.
"""

from __future__ import annotations

import heapq
import logging
import threading
import time
from collections import Counter, deque
from typing import Deque, Dict, List, NamedTuple, Optional, Sequence, Tuple

from .comm import (ConcurrentBus, DeterministicBus, Endpoint, Message, MessageKind, Segment,
                   TerminationDetector, Verdict, decode_solution, decode_state,
                   decode_traceback_request, decode_traceback_segment, encode_solution,
                   encode_traceback_request, encode_traceback_segment)
from .heuristics import EvalKey, EvalVariant, Evaluator
from .model import Action, Problem, State, applicable, apply, goal_satisfied
from .novelty import CostNoveltyTable, FactSpace, NoveltyLevel, cost_novelty
from .privacy import TokenVault, decrypt_incoming, derive_key, encrypt_outgoing, fresh_key

UNBOUNDED = None

MODES = ("det", "conc")

STAT_KEYS = (
    "expanded",
    "generated",
    "pruned",
    "duplicates",
    "messages_sent",
    "messages_received",
    "states_sent",
    "states_received",
    "received_opened",
    "rpg_builds",
    "max_novelty_expanded",
)


class ZeroCostWithPruning(ValueError):
    pass


class TracebackMiss(KeyError):
    pass


def parse_k(value) -> Optional[int]:
    if value is None or (isinstance(value, str) and value.lower() == "unbounded"):
        return UNBOUNDED
    try:
        k = int(value)
    except (TypeError, ValueError):
        raise ValueError("k must be 1, 2 or unbounded, got " + repr(value))
    if k not in (1, 2):
        raise ValueError("k must be 1, 2 or unbounded, got " + repr(value))
    return k


def k_name(k: Optional[int]) -> str:
    return "unbounded" if k is UNBOUNDED else str(k)


class SearchNode(object):
    __slots__ = ("id", "state", "g", "parent", "via_action", "via_sender", "via_state_id",
                 "eval", "novelty_g", "seq", "relevant", "achieved", "stale")

    def __init__(self, nid: int, state: State, g: float, parent: Optional[int] = None,
                 via_action: Optional[int] = None, via_sender: Optional[int] = None,
                 via_state_id: Optional[int] = None):
        self.id = nid
        self.state = state
        self.g = g
        self.parent = parent
        self.via_action = via_action
        self.via_sender = via_sender
        self.via_state_id = via_state_id
        self.eval: Optional[EvalKey] = None
        self.novelty_g = NoveltyLevel.GT2
        self.seq = -1
        self.relevant = None
        self.achieved = 0
        self.stale = False

    @property
    def received(self) -> bool:
        return self.via_sender is not None

    def __repr__(self):
        return "SearchNode(%d, g=%s, eval=%r)" % (self.id, self.g, self.eval)


class OpenList(object):
    """Min-heap on (eval key, insertion seq) with lazy removal of stale nodes."""

    def __init__(self):
        self._heap: List[Tuple[EvalKey, int, SearchNode]] = []
        self._seq = 0
        self._live = 0

    def push(self, node: SearchNode) -> None:
        node.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (node.eval, node.seq, node))
        self._live += 1

    def discard(self, node: SearchNode) -> None:
        if not node.stale:
            node.stale = True
            self._live -= 1

    def pop(self) -> Optional[SearchNode]:
        while self._heap:
            node = heapq.heappop(self._heap)[2]
            if not node.stale:
                self._live -= 1
                node.stale = True
                return node
        return None

    def __len__(self):
        return self._live


class PlanStep(NamedTuple):
    agent: int
    action: Optional[str]
    ref: str


class Plan(NamedTuple):
    steps: List[PlanStep]
    cost: float

    def __len__(self):
        return len(self.steps)


class AgentResult(NamedTuple):
    solved: bool
    finder: Optional[int]
    cost: float
    steps: List[Tuple[int, str]]
    plan: Optional[Plan]


class _Traceback(object):
    __slots__ = ("goal", "segments", "request_id")

    def __init__(self, goal: SearchNode, request_id: int):
        self.goal = goal
        self.segments: List[List[Tuple[int, str]]] = []
        self.request_id = request_id


class SearchAgent(object):

    def __init__(self, problem: Problem, agent: int, variant: EvalVariant, k: Optional[int],
                 endpoint: Endpoint, vault: TokenVault, root_state: State,
                 zero_cost_ok: bool = False, record_pops: bool = False):
        if k not in (1, 2, UNBOUNDED):
            raise ValueError("k must be 1, 2 or unbounded")
        if k is not UNBOUNDED and not zero_cost_ok and any(a.cost == 0 for a in problem.action_list):
            raise ZeroCostWithPruning("novelty pruning needs strictly positive action costs")
        self.problem = problem
        self.agent = agent
        self.name = problem.agents[agent]
        self.variant = variant
        self.k = k
        self.endpoint = endpoint
        self.vault = vault
        self.actions: Sequence[Action] = problem.actions[agent]
        self.goals = problem.observable_goals(agent)
        self.goal_owners = [j for j in problem.goal_owners() if j != agent]
        self.space = FactSpace(problem.num_facts)
        self.novelty = CostNoveltyTable()
        self.evaluator = Evaluator(problem, agent, variant)
        self.detector = TerminationDetector(endpoint)
        self.open = OpenList()
        self.open_msg: Deque[Tuple[State, float, int, int]] = deque()
        self.open_index: Dict[State, SearchNode] = {}
        self.closed: Dict[State, SearchNode] = {}
        self.nodes: Dict[int, SearchNode] = {}
        self.stats: Counter = Counter({key: 0 for key in STAT_KEYS})
        self.pops: Optional[List[SearchNode]] = [] if record_pops else None
        self.result: Optional[AgentResult] = None
        self._traceback: Optional[_Traceback] = None
        self._next_id = 0
        self._next_request = 0
        root = self._new_node(root_state, 0.0)
        self._insert(root, root=True)
        logging.info("Agent %s starts with %d actions", self.name, len(self.actions))

    @property
    def done(self) -> bool:
        return self.result is not None

    def _new_node(self, state: State, g: float, **via) -> SearchNode:
        node = SearchNode(self._next_id, state, g, **via)
        self._next_id += 1
        return node

    def is_goal(self, state: State) -> bool:
        if not goal_satisfied(state, self.goals):
            return False
        for owner in self.goal_owners:
            tok = state.token_of(owner)
            if tok is None or not tok.goals_met:
                return False
        return True

    def _insert(self, node: SearchNode, root: bool = False, parent: Optional[SearchNode] = None) -> bool:
        """Put node into open unless it is a duplicate or pruned."""
        state = node.state
        existing = self.open_index.get(state) or self.closed.get(state)
        if existing is not None and existing.g <= node.g:
            self.stats["duplicates"] += 1
            return False
        facts = self.space.render(state)
        node.novelty_g = cost_novelty(facts, node.g, self.novelty)
        if self.k is not UNBOUNDED and not root and node.novelty_g > self.k:
            self.stats["pruned"] += 1
            return False
        if existing is not None:
            if self.open_index.get(state) is existing:
                self.open.discard(existing)
                del self.open_index[state]
            else:
                del self.closed[state]
        if root:
            self.evaluator.anchor_root(node)
        elif node.received:
            self.evaluator.anchor_received(node)
        else:
            self.evaluator.inherit(node, parent)
        node.eval = self.evaluator.evaluate(node, facts)
        self.nodes[node.id] = node
        self.open.push(node)
        self.open_index[state] = node
        return True

    def expand(self, node: SearchNode) -> List[SearchNode]:
        children = []
        for act in self.actions:
            if applicable(node.state, act):
                children.append(self._new_node(apply(node.state, act), node.g + act.cost,
                                               parent=node.id, via_action=act.id))
        return children

    def receive_state(self, msg: Message) -> Tuple[State, float, int, int]:
        state, g, state_id = decode_state(msg.payload)
        state = decrypt_incoming(state, self.agent, self.vault)
        return state, g, msg.sender, state_id

    def step(self) -> bool:
        """One iteration of the search loop; False when there was nothing to do."""
        msgs = self.endpoint.drain_incoming()
        for msg in msgs:
            self._dispatch(msg)
        if self.done or self._traceback is not None:
            return bool(msgs)

        while self.open_msg:
            state, g, sender, state_id = self.open_msg.popleft()
            node = self._new_node(state, g, via_sender=sender, via_state_id=state_id)
            if self._insert(node):
                self.stats["received_opened"] += 1

        idle = not self.open
        if self.detector.termination_detect(idle) is Verdict.TERMINATED:
            logging.debug("agent %s detects termination", self.name)
            self.endpoint.broadcast(MessageKind.TERMINATE)
            self._finish(None)
            return True
        if idle:
            return bool(msgs)

        node = self.open.pop()
        del self.open_index[node.state]
        self.closed[node.state] = node
        if self.pops is not None:
            self.pops.append(node)
        if self.is_goal(node.state):
            self._start_traceback(node)
            return True

        self.stats["expanded"] += 1
        self.stats["max_novelty_expanded"] = max(self.stats["max_novelty_expanded"], int(node.novelty_g))
        if node.via_action is not None and self.problem.action_list[node.via_action].is_public:
            self.endpoint.broadcast_state(encrypt_outgoing(node.state, self.agent, self.vault),
                                          node.g, node.id)
        for child in self.expand(node):
            self.stats["generated"] += 1
            self._insert(child, parent=node)
        return True

    def _dispatch(self, msg: Message) -> None:
        kind = msg.kind
        if kind is MessageKind.STATE:
            if not self.done:
                self.open_msg.append(self.receive_state(msg))
        elif kind is MessageKind.IDLE or kind is MessageKind.RESUME:
            self.detector.on_message(msg)
        elif kind is MessageKind.TERMINATE:
            if not self.done and self._traceback is None:
                self._finish(None)
        elif kind is MessageKind.TRACEBACK_REQUEST:
            self._answer_traceback(msg)
        elif kind is MessageKind.TRACEBACK_SEGMENT:
            self._on_segment(decode_traceback_segment(msg.payload))
        elif kind is MessageKind.SOLUTION_FOUND:
            if not self.done:
                cost, steps = decode_solution(msg.payload)
                logging.debug("agent %s adopts the plan of agent %d", self.name, msg.sender)
                self._traceback = None
                self._finish((msg.sender, cost, steps))

    def _walk(self, node: SearchNode) -> Tuple[List[Tuple[int, str]], Optional[Tuple[int, int]]]:
        """Own steps leading to node, and the hop where they start if it was received."""
        steps = []
        while node.via_action is not None:
            steps.append((self.agent, self.vault.step_token(node.via_action)))
            node = self.nodes[node.parent]
        steps.reverse()
        if node.received:
            return steps, (node.via_sender, node.via_state_id)
        return steps, None

    def _lookup(self, state_id: int) -> SearchNode:
        try:
            return self.nodes[state_id]
        except KeyError:
            raise TracebackMiss("agent " + self.name + " has no state " + str(state_id))

    def _answer_traceback(self, msg: Message) -> None:
        request_id, state_id = decode_traceback_request(msg.payload)
        steps, hop = self._walk(self._lookup(state_id))
        logging.debug("agent %s answers traceback %d for state %d", self.name, request_id, state_id)
        if hop is None:
            seg = Segment(request_id, False, 0, 0, steps)
        else:
            seg = Segment(request_id, True, hop[0], hop[1], steps)
        self.endpoint.send(MessageKind.TRACEBACK_SEGMENT, msg.sender, encode_traceback_segment(seg))

    def _start_traceback(self, goal: SearchNode) -> None:
        logging.debug("agent %s reached a goal state at g=%s", self.name, goal.g)
        self._traceback = _Traceback(goal, -1)
        steps, hop = self._walk(goal)
        self._traceback.segments.append(steps)
        self._follow(hop)

    def _follow(self, hop: Optional[Tuple[int, int]]) -> None:
        tb = self._traceback
        while hop is not None and hop[0] == self.agent:
            steps, hop = self._walk(self._lookup(hop[1]))
            tb.segments.append(steps)
        if hop is None:
            steps = [step for seg in reversed(tb.segments) for step in seg]
            self.endpoint.broadcast(MessageKind.SOLUTION_FOUND, encode_solution(tb.goal.g, steps))
            self._traceback = None
            self._finish((self.agent, tb.goal.g, steps))
            return
        tb.request_id = self._next_request
        self._next_request += 1
        logging.debug("agent %s requests traceback of state %d from agent %d", self.name, hop[1], hop[0])
        self.endpoint.send(MessageKind.TRACEBACK_REQUEST, hop[0],
                           encode_traceback_request(tb.request_id, hop[1]))

    def _on_segment(self, seg: Segment) -> None:
        tb = self._traceback
        if self.done:
            return
        if tb is None or seg.request_id != tb.request_id:
            logging.warning("agent %s drops stray traceback segment %d", self.name, seg.request_id)
            return
        tb.segments.append(seg.steps)
        self._follow((seg.next_agent, seg.next_state_id) if seg.has_next else None)

    def plan_view(self, steps: Sequence[Tuple[int, str]], cost: float) -> Plan:
        """The plan as this agent may see it: only own actions are named."""
        view = []
        for agent, ref in steps:
            name = None
            if agent == self.agent:
                name = self.problem.action_list[self.vault.reveal_step(ref)].name
            view.append(PlanStep(agent, name, ref))
        return Plan(view, cost)

    def _finish(self, solution: Optional[Tuple[int, float, List[Tuple[int, str]]]]) -> None:
        self.sync_stats()
        if solution is None:
            self.result = AgentResult(False, None, 0.0, [], None)
        else:
            finder, cost, steps = solution
            self.result = AgentResult(True, finder, cost, steps, self.plan_view(steps, cost))
        logging.info("Agent %s finished: solved=%s expanded=%d generated=%d pruned=%d",
                     self.name, self.result.solved, self.stats["expanded"],
                     self.stats["generated"], self.stats["pruned"])

    def sync_stats(self) -> None:
        """Copy endpoint and evaluator counters into stats."""
        ep = self.endpoint
        self.stats["messages_sent"] = ep.messages_sent
        self.stats["messages_received"] = ep.messages_received
        self.stats["states_sent"] = sum(ep.states_sent)
        self.stats["states_received"] = sum(ep.states_received)
        self.stats["rpg_builds"] = self.evaluator.rpg_builds


class SolveResult(NamedTuple):
    solved: bool
    finder: Optional[int]
    cost: float
    steps: List[Tuple[int, str]]
    plan: Optional[Plan]
    stats: List[Counter]
    results: List[AgentResult]
    vaults: List[TokenVault]
    frames: Optional[list]
    elapsed: float
    elapsed_unit: str
    timed_out: bool


def _make_vaults(problem: Problem, mode: str, seed: Optional[int]) -> List[TokenVault]:
    vaults = []
    for i, name in enumerate(problem.agents):
        key = derive_key(seed, name) if mode == "det" else fresh_key()
        vaults.append(TokenVault.for_agent(problem, i, key))
    return vaults


def initial_states(problem: Problem, vaults: Sequence[TokenVault]) -> List[State]:
    """Each agent's view of the initial state, every foreign part as its token."""
    tokens = [v.token_for(problem.init & v.private_mask) for v in vaults]
    return [problem.initial_state(i, [t for j, t in enumerate(tokens) if j != i])
            for i in range(problem.num_agents)]


def _run_deterministic(agents: List[SearchAgent], time_limit: Optional[float]) -> Tuple[float, bool]:
    rounds = 0
    start = time.perf_counter()
    while not all(a.done for a in agents):
        for a in agents:
            a.step()
        rounds += 1
        if time_limit is not None and time.perf_counter() - start > time_limit:
            return rounds, True
    return rounds, False


def _run_concurrent(agents: List[SearchAgent], time_limit: Optional[float]) -> Tuple[float, bool]:
    stop = threading.Event()
    errors: List[BaseException] = []

    def loop(agent: SearchAgent) -> None:
        try:
            while not stop.is_set():
                if not agent.step():
                    stop.wait(0.0005)
        except BaseException as e:
            errors.append(e)
            stop.set()

    threads = [threading.Thread(target=loop, args=(a,), name="agent-" + a.name, daemon=True)
               for a in agents]
    start = time.perf_counter()
    for t in threads:
        t.start()
    timed_out = False
    while not stop.is_set():
        if all(a.done for a in agents):
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            timed_out = True
            break
        time.sleep(0.001)
    stop.set()
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - start
    if errors:
        raise errors[0]
    return elapsed, timed_out


def solve(problem: Problem, variant: EvalVariant, k: Optional[int] = UNBOUNDED, mode: str = "det",
          seed: Optional[int] = 0, time_limit: Optional[float] = None, capture: bool = False,
          zero_cost_ok: bool = False, record_pops: bool = False,
          agents_out: Optional[list] = None) -> SolveResult:
    """Run every agent of problem until a plan is agreed on or the search space is exhausted."""
    if mode not in MODES:
        raise ValueError("unknown mode '" + mode + "'")
    if mode == "det" and seed is None:
        raise ValueError("deterministic mode needs a seed")
    n = problem.num_agents
    vaults = _make_vaults(problem, mode, seed)
    roots = initial_states(problem, vaults)
    bus = DeterministicBus(n, capture) if mode == "det" else ConcurrentBus(n, capture)
    agents = [SearchAgent(problem, i, variant, k, Endpoint(bus, i), vaults[i], roots[i],
                          zero_cost_ok=zero_cost_ok, record_pops=record_pops)
              for i in range(n)]
    if agents_out is not None:
        agents_out.extend(agents)
    if mode == "det":
        elapsed, timed_out = _run_deterministic(agents, time_limit)
        unit = "rounds"
    else:
        elapsed, timed_out = _run_concurrent(agents, time_limit)
        unit = "seconds"
    for a in agents:
        a.sync_stats()
    finders = sorted((a.result.finder, a.result) for a in agents
                     if a.done and a.result.solved and a.result.finder == a.agent)
    if timed_out or not finders:
        winner = None
    else:
        winner = finders[0][1]
    results = [a.result if a.done else AgentResult(False, None, 0.0, [], None) for a in agents]
    stats = [a.stats for a in agents]
    frames = bus.frames
    if winner is None:
        return SolveResult(False, None, 0.0, [], None, stats, results, vaults, frames,
                           elapsed, unit, timed_out)
    return SolveResult(True, winner.finder, winner.cost, winner.steps, winner.plan, stats,
                       results, vaults, frames, elapsed, unit, timed_out)
