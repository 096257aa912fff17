"""Incremental novelty tables, capped at three levels (1, 2, more than 2).

States enter these tables as sorted tuples of fact ids as the evaluating agent
sees them. FactSpace does that rendering; every distinct foreign token gets a
fresh synthetic id after the real fact ids, so the tables never need to know
about tokens.
"""

from __future__ import annotations

from enum import IntEnum
from itertools import combinations
from typing import Dict, Hashable, Iterable, List, Sequence, Tuple

from .bitset import ids_of
from .model import State


class NoveltyLevel(IntEnum):
    ONE = 1
    TWO = 2
    GT2 = 3


class FactSpace(object):

    def __init__(self, num_facts: int):
        self.num_facts = num_facts
        self._synthetic: Dict[Tuple[int, str], int] = {}

    def token_id(self, issuer: int, digest: str) -> int:
        key = (issuer, digest)
        fid = self._synthetic.get(key)
        if fid is None:
            fid = self.num_facts + len(self._synthetic)
            self._synthetic[key] = fid
        return fid

    def render(self, state: State) -> Tuple[int, ...]:
        ids = list(ids_of(state.plain))
        ids.extend(self.token_id(t.issuer, t.digest) for t in state.tokens)
        return tuple(sorted(ids))


class CostNoveltyTable(object):
    """Lowest accumulated cost seen per fact and per fact pair."""

    def __init__(self):
        self.best_g_1: Dict[int, float] = {}
        self.best_g_2: Dict[Tuple[int, int], float] = {}

    def __len__(self):
        return len(self.best_g_1)


def cost_novelty(facts: Sequence[int], g: float, table: CostNoveltyTable) -> NoveltyLevel:
    """Accumulated-cost novelty of a generated state; updates the table.

    A tuple counts as new when no earlier state held it, or every earlier one
    held it at a strictly higher cost.
    """
    level = NoveltyLevel.GT2
    best1 = table.best_g_1
    for f in facts:
        old = best1.get(f)
        if old is None or old > g:
            level = NoveltyLevel.ONE
            best1[f] = g
    best2 = table.best_g_2
    ordered = sorted(facts)
    for pair in combinations(ordered, 2):
        old = best2.get(pair)
        if old is None or old > g:
            if level > NoveltyLevel.TWO:
                level = NoveltyLevel.TWO
            best2[pair] = g
    return level


class PartitionNoveltyTable(object):
    """Facts and pairs seen so far, kept apart per heuristic-value key."""

    def __init__(self):
        self.partitions: Dict[Hashable, List] = {}

    def __len__(self):
        return len(self.partitions)


def partition_novelty(facts: Sequence[int], key: Hashable, table: PartitionNoveltyTable) -> NoveltyLevel:
    entry = table.partitions.get(key)
    if entry is None:
        entry = table.partitions[key] = [0, set()]
    seen, pairs = entry
    level = NoveltyLevel.GT2
    for f in facts:
        if not seen >> f & 1:
            level = NoveltyLevel.ONE
            seen |= 1 << f
    entry[0] = seen
    for pair in combinations(sorted(facts), 2):
        if pair not in pairs:
            if level > NoveltyLevel.TWO:
                level = NoveltyLevel.TWO
            pairs.add(pair)
    return level


def brute_force_novelty(history: Iterable[Tuple[Sequence[int], float]],
                        query: Tuple[Sequence[int], float],
                        use_cost: bool = True) -> NoveltyLevel:
    """Novelty by enumerating every tuple of size 1 and 2 against the history.

    With use_cost=False earlier states count regardless of their cost, which
    is plain novelty.
    """
    facts, g = query
    past = [(frozenset(s), pg) for s, pg in history]
    for size in (1, 2):
        for tup in combinations(sorted(facts), size):
            holders = [pg for s, pg in past if s.issuperset(tup)]
            if not holders:
                return NoveltyLevel(size)
            if use_cost and all(pg > g for pg in holders):
                return NoveltyLevel(size)
    return NoveltyLevel.GT2
