"""Public/private classification and the token vault.

An agent never shows its private facts to others. Before a state leaves the
agent, the whole private subset is replaced by one token derived from it with
a keyed PRF (HMAC-SHA256, truncated). Receivers treat the token as an opaque
fact; only the issuer can map it back through its vault.
"""

from __future__ import annotations

from typing import Dict, NamedTuple, Tuple

from Crypto.Hash import HMAC, SHA256
from Crypto.Random import get_random_bytes

from .bitset import ids_of, is_subset
from .model import PUBLIC, Problem, State, Token

TOKEN_HEX_LEN = 32
KEY_BYTES = 32

_EMPTY_MARKER = b"\x00empty"


class UnknownToken(KeyError):
    pass


class PrivacyLabels(NamedTuple):
    fact_owner: Tuple[int, ...]
    action_public: Tuple[bool, ...]


def classify(problem: Problem, private_goals: bool = False) -> PrivacyLabels:
    """Label facts by the agents whose actions touch them.

    A fact touched by the actions of exactly one agent belongs to that agent,
    any other fact is PUBLIC. Goal facts are kept PUBLIC unless private_goals
    is set. An action is public iff it touches a public fact.
    """
    touched_by = [set() for _ in problem.facts]
    for act in problem.action_list:
        for fid in ids_of(act.touched):
            touched_by[fid].add(act.agent)
    owner = []
    for fid, agents in enumerate(touched_by):
        if len(agents) != 1:
            owner.append(PUBLIC)
        elif not private_goals and problem.goals & (1 << fid):
            owner.append(PUBLIC)
        else:
            owner.append(next(iter(agents)))
    public_mask = 0
    for fid, who in enumerate(owner):
        if who == PUBLIC:
            public_mask |= 1 << fid
    action_public = [False] * len(problem.action_list)
    for act in problem.action_list:
        action_public[act.id] = bool(act.touched & public_mask)
    return PrivacyLabels(tuple(owner), tuple(action_public))


def derive_key(seed: int, agent_name: str) -> bytes:
    """Per-agent key for reproducible runs."""
    mac = HMAC.new(str(seed).encode("ascii"), digestmod=SHA256)
    mac.update(agent_name.encode("utf-8"))
    return mac.digest()


def fresh_key() -> bytes:
    return get_random_bytes(KEY_BYTES)


class TokenVault(object):
    """Bijection between one agent's private subsets and their tokens."""

    def __init__(self, agent: int, private_mask: int, goal_mask: int, key: bytes):
        self.agent = agent
        self.private_mask = private_mask
        self.goal_mask = goal_mask
        self._key = key
        self.forward: Dict[int, str] = {}
        self.backward: Dict[str, int] = {}
        self._steps: Dict[str, int] = {}

    @classmethod
    def for_agent(cls, problem: Problem, agent: int, key: bytes) -> "TokenVault":
        return cls(agent, problem.private_mask(agent), problem.private_goals(agent), key)

    def _prf(self, data: bytes) -> str:
        mac = HMAC.new(self._key, digestmod=SHA256)
        mac.update(data)
        return mac.hexdigest()[:TOKEN_HEX_LEN]

    def token_for(self, subset: int) -> Token:
        subset &= self.private_mask
        digest = self.forward.get(subset)
        if digest is None:
            if subset:
                digest = self._prf(b"facts:" + ",".join(str(i) for i in ids_of(subset)).encode("ascii"))
            else:
                digest = self._prf(_EMPTY_MARKER)
            other = self.backward.get(digest)
            if other is not None and other != subset:
                raise ValueError("token collision in vault of agent " + str(self.agent))
            self.forward[subset] = digest
            self.backward[digest] = subset
        return Token(self.agent, digest, is_subset(self.goal_mask, subset))

    def subset_of(self, digest: str) -> int:
        try:
            return self.backward[digest]
        except KeyError:
            raise UnknownToken("agent " + str(self.agent) + " never issued token " + digest)

    def step_token(self, action_id: int) -> str:
        """Opaque reference to one of this agent's actions in a shared plan."""
        ref = self._prf(b"step:" + str(action_id).encode("ascii"))
        self._steps[ref] = action_id
        return ref

    def reveal_step(self, ref: str) -> int:
        try:
            return self._steps[ref]
        except KeyError:
            raise UnknownToken("agent " + str(self.agent) + " never issued step " + ref)


def encrypt_outgoing(state: State, agent: int, vault: TokenVault) -> State:
    if vault.agent != agent:
        raise ValueError("vault belongs to agent " + str(vault.agent))
    token = vault.token_for(state.plain & vault.private_mask)
    others = [t for t in state.tokens if t.issuer != agent]
    return State(state.plain & ~vault.private_mask, others + [token])


def decrypt_incoming(state: State, agent: int, vault: TokenVault) -> State:
    token = state.token_of(agent)
    if token is None:
        return state
    subset = vault.subset_of(token.digest)
    return State(state.plain | subset, [t for t in state.tokens if t.issuer != agent])
