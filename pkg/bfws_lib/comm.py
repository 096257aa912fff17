"""Message bus between agents.

Every message crosses the bus as a length-prefixed binary frame

    >IBHQ   payload length, kind, sender, seq
    payload kind-specific, see the encode_* helpers

so the byte form that other agents see can be inspected in tests. Two delivery
regimes share one interface: DeterministicBus for a single-threaded round
robin scheduler and ConcurrentBus for one thread per agent.
"""

from __future__ import annotations

import logging
import queue
import struct
import threading
from collections import deque
from enum import IntEnum
from typing import Deque, List, NamedTuple, Optional, Sequence, Tuple

from .bitset import ids_of, mask_of
from .model import State, Token
from .privacy import TOKEN_HEX_LEN

_HEADER = struct.Struct(">IBHQ")
_STATE_HEAD = struct.Struct(">dQH")
_FACT = struct.Struct(">I")
_COUNT = struct.Struct(">H")
_TOKEN_HEAD = struct.Struct(">HB")
_TB_REQUEST = struct.Struct(">IQ")
_TB_SEGMENT = struct.Struct(">IBHQ")
_STEP_AGENT = struct.Struct(">H")
_COST = struct.Struct(">d")
_COUNTER = struct.Struct(">Q")


class FrameError(ValueError):
    pass


class MessageKind(IntEnum):
    STATE = 1
    TRACEBACK_REQUEST = 2
    TRACEBACK_SEGMENT = 3
    IDLE = 4
    RESUME = 5
    TERMINATE = 6
    SOLUTION_FOUND = 7


class Message(object):
    __slots__ = ("kind", "sender", "seq", "payload")

    def __init__(self, kind: MessageKind, sender: int, seq: int, payload: bytes = b""):
        self.kind = kind
        self.sender = sender
        self.seq = seq
        self.payload = payload

    def encode(self) -> bytes:
        return _HEADER.pack(len(self.payload), int(self.kind), self.sender, self.seq) + self.payload

    @classmethod
    def decode(cls, frame: bytes) -> "Message":
        if len(frame) < _HEADER.size:
            raise FrameError("frame shorter than its header")
        length, kind, sender, seq = _HEADER.unpack_from(frame)
        if len(frame) != _HEADER.size + length:
            raise FrameError("frame length does not match its header")
        try:
            kind = MessageKind(kind)
        except ValueError:
            raise FrameError("unknown message kind " + str(kind))
        return cls(kind, sender, seq, frame[_HEADER.size:])

    def __repr__(self):
        return "Message(%s, sender=%d, seq=%d, %d bytes)" % (
            self.kind.name, self.sender, self.seq, len(self.payload))


class _Reader(object):
    """Cursor over a payload; every short read is a FrameError."""

    def __init__(self, payload: bytes):
        self.buf = payload
        self.pos = 0

    def take(self, fmt: struct.Struct) -> tuple:
        if self.pos + fmt.size > len(self.buf):
            raise FrameError("truncated payload")
        values = fmt.unpack_from(self.buf, self.pos)
        self.pos += fmt.size
        return values

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.buf):
            raise FrameError("truncated payload")
        data = self.buf[self.pos:self.pos + size]
        self.pos += size
        return data

    def hex_str(self) -> str:
        data = self.raw(TOKEN_HEX_LEN)
        try:
            return data.decode("ascii")
        except UnicodeDecodeError:
            raise FrameError("token is not ascii")

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise FrameError("trailing bytes in payload")


def _hex_bytes(value: str) -> bytes:
    data = value.encode("ascii")
    if len(data) != TOKEN_HEX_LEN:
        raise FrameError("token must be " + str(TOKEN_HEX_LEN) + " hex characters")
    return data


def encode_state(state: State, g: float, state_id: int) -> bytes:
    facts = ids_of(state.plain)
    parts = [_STATE_HEAD.pack(g, state_id, len(facts))]
    parts.extend(_FACT.pack(f) for f in facts)
    parts.append(_COUNT.pack(len(state.tokens)))
    for tok in state.tokens:
        parts.append(_TOKEN_HEAD.pack(tok.issuer, int(tok.goals_met)))
        parts.append(_hex_bytes(tok.digest))
    return b"".join(parts)


def decode_state(payload: bytes) -> Tuple[State, float, int]:
    r = _Reader(payload)
    g, state_id, n_facts = r.take(_STATE_HEAD)
    facts = [r.take(_FACT)[0] for _ in range(n_facts)]
    (n_tokens,) = r.take(_COUNT)
    tokens = []
    for _ in range(n_tokens):
        issuer, met = r.take(_TOKEN_HEAD)
        tokens.append(Token(issuer, r.hex_str(), bool(met)))
    r.done()
    try:
        state = State(mask_of(facts), tokens)
    except ValueError as e:
        raise FrameError(str(e))
    return state, g, state_id


def encode_traceback_request(request_id: int, state_id: int) -> bytes:
    return _TB_REQUEST.pack(request_id, state_id)


def decode_traceback_request(payload: bytes) -> Tuple[int, int]:
    r = _Reader(payload)
    request_id, state_id = r.take(_TB_REQUEST)
    r.done()
    return request_id, state_id


def _encode_steps(steps: Sequence[Tuple[int, str]]) -> List[bytes]:
    parts = [_COUNT.pack(len(steps))]
    for agent, ref in steps:
        parts.append(_STEP_AGENT.pack(agent))
        parts.append(_hex_bytes(ref))
    return parts


def _decode_steps(r: _Reader) -> List[Tuple[int, str]]:
    (n,) = r.take(_COUNT)
    steps = []
    for _ in range(n):
        (agent,) = r.take(_STEP_AGENT)
        steps.append((agent, r.hex_str()))
    return steps


class Segment(NamedTuple):
    request_id: int
    has_next: bool
    next_agent: int
    next_state_id: int
    steps: List[Tuple[int, str]]


def encode_traceback_segment(seg: Segment) -> bytes:
    head = _TB_SEGMENT.pack(seg.request_id, int(seg.has_next), seg.next_agent, seg.next_state_id)
    return b"".join([head] + _encode_steps(seg.steps))


def decode_traceback_segment(payload: bytes) -> Segment:
    r = _Reader(payload)
    request_id, has_next, next_agent, next_state_id = r.take(_TB_SEGMENT)
    steps = _decode_steps(r)
    r.done()
    return Segment(request_id, bool(has_next), next_agent, next_state_id, steps)


def encode_solution(cost: float, steps: Sequence[Tuple[int, str]]) -> bytes:
    return b"".join([_COST.pack(cost)] + _encode_steps(steps))


def decode_solution(payload: bytes) -> Tuple[float, List[Tuple[int, str]]]:
    r = _Reader(payload)
    (cost,) = r.take(_COST)
    steps = _decode_steps(r)
    r.done()
    return cost, steps


def encode_idle(sent: Sequence[int], received: Sequence[int]) -> bytes:
    parts = [_COUNT.pack(len(sent))]
    parts.extend(_COUNTER.pack(v) for v in sent)
    parts.extend(_COUNTER.pack(v) for v in received)
    return b"".join(parts)


def decode_idle(payload: bytes) -> Tuple[List[int], List[int]]:
    r = _Reader(payload)
    (n,) = r.take(_COUNT)
    sent = [r.take(_COUNTER)[0] for _ in range(n)]
    received = [r.take(_COUNTER)[0] for _ in range(n)]
    r.done()
    return sent, received


class CapturedFrame(NamedTuple):
    sender: int
    recipient: int
    kind: MessageKind
    frame: bytes


class _Bus(object):

    def __init__(self, num_agents: int, capture: bool = False):
        self.num_agents = num_agents
        self.sent = [[0] * num_agents for _ in range(num_agents)]
        self.received = [[0] * num_agents for _ in range(num_agents)]
        self.frames: Optional[List[CapturedFrame]] = [] if capture else None

    def _record_send(self, msg: Message, recipient: int, frame: bytes) -> None:
        self.sent[msg.sender][recipient] += 1
        if self.frames is not None:
            self.frames.append(CapturedFrame(msg.sender, recipient, msg.kind, frame))

    def send(self, msg: Message, recipient: int) -> None:
        raise NotImplementedError

    def drain_incoming(self, agent: int) -> List[Message]:
        raise NotImplementedError

    def in_flight(self) -> int:
        return sum(self.sent[i][j] - self.received[i][j]
                   for i in range(self.num_agents) for j in range(self.num_agents))


class DeterministicBus(_Bus):
    """Per-recipient FIFO deques, for a single scheduler thread."""

    def __init__(self, num_agents: int, capture: bool = False):
        super().__init__(num_agents, capture)
        self._queues: List[Deque[bytes]] = [deque() for _ in range(num_agents)]

    def send(self, msg: Message, recipient: int) -> None:
        frame = msg.encode()
        self._record_send(msg, recipient, frame)
        self._queues[recipient].append(frame)

    def drain_incoming(self, agent: int) -> List[Message]:
        q = self._queues[agent]
        out = []
        while q:
            msg = Message.decode(q.popleft())
            self.received[msg.sender][agent] += 1
            out.append(msg)
        return out

    def pending(self, agent: int) -> bool:
        return bool(self._queues[agent])


class ConcurrentBus(_Bus):
    """Multi-producer single-consumer queues, one per agent thread."""

    def __init__(self, num_agents: int, capture: bool = False):
        super().__init__(num_agents, capture)
        self._queues = [queue.SimpleQueue() for _ in range(num_agents)]
        self._lock = threading.Lock()

    def send(self, msg: Message, recipient: int) -> None:
        frame = msg.encode()
        with self._lock:
            self._record_send(msg, recipient, frame)
        self._queues[recipient].put(frame)

    def drain_incoming(self, agent: int) -> List[Message]:
        q = self._queues[agent]
        out = []
        while True:
            try:
                frame = q.get_nowait()
            except queue.Empty:
                break
            msg = Message.decode(frame)
            with self._lock:
                self.received[msg.sender][agent] += 1
            out.append(msg)
        return out

    def pending(self, agent: int) -> bool:
        return not self._queues[agent].empty()


class Endpoint(object):
    """One agent's handle on the bus; owns the agent's sequence counter."""

    def __init__(self, bus: _Bus, agent: int):
        self.bus = bus
        self.agent = agent
        self.seq = 0
        self.messages_sent = 0
        self.messages_received = 0
        self.states_sent = [0] * bus.num_agents
        self.states_received = [0] * bus.num_agents

    def _next(self, kind: MessageKind, payload: bytes) -> Message:
        self.seq += 1
        return Message(kind, self.agent, self.seq, payload)

    def send(self, kind: MessageKind, recipient: int, payload: bytes = b"") -> None:
        if recipient == self.agent:
            raise ValueError("agent " + str(self.agent) + " cannot message itself")
        self.bus.send(self._next(kind, payload), recipient)
        self.messages_sent += 1
        if kind is MessageKind.STATE:
            self.states_sent[recipient] += 1

    def broadcast(self, kind: MessageKind, payload: bytes = b"") -> None:
        for other in range(self.bus.num_agents):
            if other != self.agent:
                self.send(kind, other, payload)

    def broadcast_state(self, state: State, g: float, state_id: int) -> None:
        self.broadcast(MessageKind.STATE, encode_state(state, g, state_id))

    def drain_incoming(self) -> List[Message]:
        msgs = self.bus.drain_incoming(self.agent)
        self.messages_received += len(msgs)
        for msg in msgs:
            if msg.kind is MessageKind.STATE:
                self.states_received[msg.sender] += 1
        return msgs


class Verdict(IntEnum):
    CONTINUE = 0
    TERMINATED = 1


class TerminationDetector(object):
    """Idle/resume announcements strengthened with STATE message counters.

    Every idle report carries the reporter's per-peer sent and received STATE
    counts. Termination is declared when the local agent is idle, every other
    agent's latest report is idle, and for each ordered pair the reported sent
    count equals the reported received count.
    """

    def __init__(self, endpoint: Endpoint):
        self.endpoint = endpoint
        n = endpoint.bus.num_agents
        me = endpoint.agent
        self.idle_reported = False
        self._last_report: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]] = None
        self.peer_idle = [i == me for i in range(n)]
        self.peer_sent: List[List[int]] = [[0] * n for _ in range(n)]
        self.peer_received: List[List[int]] = [[0] * n for _ in range(n)]

    def on_message(self, msg: Message) -> None:
        if msg.kind is MessageKind.IDLE:
            sent, received = decode_idle(msg.payload)
            if len(sent) != self.endpoint.bus.num_agents:
                raise FrameError("idle report for a different agent count")
            self.peer_idle[msg.sender] = True
            self.peer_sent[msg.sender] = sent
            self.peer_received[msg.sender] = received
        elif msg.kind is MessageKind.RESUME:
            self.peer_idle[msg.sender] = False

    def termination_detect(self, local_idle: bool) -> Verdict:
        ep = self.endpoint
        me = ep.agent
        if not local_idle:
            if self.idle_reported:
                logging.debug("agent %d resumes", me)
                ep.broadcast(MessageKind.RESUME)
                self.idle_reported = False
                self._last_report = None
            return Verdict.CONTINUE
        counts = (tuple(ep.states_sent), tuple(ep.states_received))
        if counts != self._last_report:
            if ep.bus.num_agents > 1:
                logging.debug("agent %d idle, sent %s received %s", me, counts[0], counts[1])
                ep.broadcast(MessageKind.IDLE, encode_idle(*counts))
            self.idle_reported = True
            self._last_report = counts
        if not all(self.peer_idle):
            return Verdict.CONTINUE
        sent = list(self.peer_sent)
        received = list(self.peer_received)
        sent[me] = list(ep.states_sent)
        received[me] = list(ep.states_received)
        n = ep.bus.num_agents
        for i in range(n):
            for j in range(n):
                if i != j and sent[i][j] != received[j][i]:
                    return Verdict.CONTINUE
        return Verdict.TERMINATED
