"""Bundled micro problem suite.

Four mini-domains (trucks logistics, two-arm blocks, factory lines with
private goals, rovers), constructed width-1 and width-2 single-goal
instances, unsolvable instances and single-agent instances. Every generator
returns a problem document; problem(name) grounds it.
"""

from __future__ import annotations

import os
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .ingest import problem_from_document, save_problem
from .model import Problem


class _Builder(object):

    def __init__(self, agents: Sequence[str]):
        self.agents = list(agents)
        self.facts = set()
        self.actions: List[dict] = []
        self.init: List[str] = []
        self.goals: List[str] = []
        self.private_goals = False

    def act(self, name: str, agent: str, prec: Iterable[str], add: Iterable[str],
            delete: Iterable[str] = (), cost: float = 1) -> None:
        prec, add, delete = list(prec), list(add), list(delete)
        self.facts.update(prec, add, delete)
        self.actions.append({"name": name, "agent": agent, "prec": prec, "add": add,
                             "del": delete, "cost": cost})

    def doc(self) -> dict:
        self.facts.update(self.init, self.goals)
        doc = {
            "version": 1,
            "agents": self.agents,
            "facts": sorted(self.facts),
            "init": sorted(self.init),
            "goals": sorted(self.goals),
            "actions": self.actions,
        }
        if self.private_goals:
            doc["private_goals"] = True
        return doc


def trucks(segments: Dict[str, Sequence[int]], starts: Dict[str, int],
           packages: Sequence[Tuple[int, int]], fuel: Optional[Dict[str, int]] = None) -> dict:
    """Trucks shuttling packages along a line of locations.

    Each truck drives only inside its own segment; a location shared by two
    segments is where packages change hands.
    """
    b = _Builder(sorted(segments))
    for truck, locs in sorted(segments.items()):
        b.init.append("%s-at-loc%d" % (truck, starts[truck]))
        levels = fuel.get(truck) if fuel else None
        if levels is not None:
            b.init.append("%s-fuel-lv%d" % (truck, levels))
        for here, there in zip(locs, locs[1:]):
            for src, dst in ((here, there), (there, here)):
                at_src, at_dst = "%s-at-loc%d" % (truck, src), "%s-at-loc%d" % (truck, dst)
                if levels is None:
                    b.act("drive-%s-loc%d-loc%d" % (truck, src, dst), truck, [at_src], [at_dst], [at_src])
                    continue
                for lv in range(1, levels + 1):
                    have, left = "%s-fuel-lv%d" % (truck, lv), "%s-fuel-lv%d" % (truck, lv - 1)
                    b.act("drive-%s-loc%d-loc%d-lv%d" % (truck, src, dst, lv), truck,
                          [at_src, have], [at_dst, left], [at_src, have])
        for p in range(1, len(packages) + 1):
            inside = "pkg%d-in-%s" % (p, truck)
            for loc in locs:
                at_truck, at_pkg = "%s-at-loc%d" % (truck, loc), "pkg%d-at-loc%d" % (p, loc)
                b.act("load-%s-pkg%d-loc%d" % (truck, p, loc), truck, [at_truck, at_pkg], [inside], [at_pkg])
                b.act("unload-%s-pkg%d-loc%d" % (truck, p, loc), truck, [at_truck, inside], [at_pkg], [inside])
    for p, (src, dst) in enumerate(packages, 1):
        b.init.append("pkg%d-at-loc%d" % (p, src))
        b.goals.append("pkg%d-at-loc%d" % (p, dst))
    return b.doc()


def blocks(arms: Sequence[str], towers: Sequence[Sequence[int]], goal: Sequence[str]) -> dict:
    """Blocks world shared by several arms; towers are listed bottom first."""
    names = sorted("block%d" % n for tower in towers for n in tower)
    b = _Builder(arms)
    for tower in towers:
        bottom = "block%d" % tower[0]
        b.init.append(bottom + "-ontable")
        for lower, upper in zip(tower, tower[1:]):
            b.init.append("block%d-on-block%d" % (upper, lower))
        b.init.append("block%d-clear" % tower[-1])
    for arm in arms:
        empty = arm + "-handempty"
        b.init.append(empty)
        for x in names:
            hold = "%s-holding-%s" % (arm, x)
            b.act("%s-pickup-%s" % (arm, x), arm, [x + "-clear", x + "-ontable", empty], [hold],
                  [x + "-clear", x + "-ontable", empty])
            b.act("%s-putdown-%s" % (arm, x), arm, [hold], [x + "-ontable", x + "-clear", empty], [hold])
            for y in names:
                if x == y:
                    continue
                on = "%s-on-%s" % (x, y)
                b.act("%s-stack-%s-%s" % (arm, x, y), arm, [hold, y + "-clear"],
                      [on, x + "-clear", empty], [hold, y + "-clear"])
                b.act("%s-unstack-%s-%s" % (arm, x, y), arm, [on, x + "-clear", empty],
                      [hold, y + "-clear"], [on, x + "-clear", empty])
    b.goals.extend(goal)
    return b.doc()


def factory(stations: int = 2, with_paint: bool = True, public_goal: bool = False) -> dict:
    """Production line: mill -> dock -> paint -> shelf -> pack.

    Every station has a private chore whose result is a private goal and
    must be done before the station hands the part on.
    """
    agents = ["mill", "paint", "pack"][:stations]
    b = _Builder(agents)
    b.private_goals = True
    b.init += ["mill-raw-stock", "mill-broom-ready", "dock-is-empty"]
    b.act("mill-cut-stock", "mill", ["mill-raw-stock"], ["mill-part-cut"], ["mill-raw-stock"])
    b.act("mill-tidy-shop", "mill", ["mill-broom-ready"], ["mill-shop-clean"], ["mill-broom-ready"])
    b.act("mill-ship-part", "mill", ["mill-part-cut", "dock-is-empty"], ["dock-has-part"],
          ["mill-part-cut", "dock-is-empty"])
    b.goals.append("mill-shop-clean")
    if with_paint:
        b.init.append("paint-can-full")
    b.act("paint-fetch-part", "paint", ["dock-has-part"], ["paint-part-raw", "dock-is-empty"], ["dock-has-part"])
    b.act("paint-coat-part", "paint", ["paint-part-raw", "paint-can-full"], ["paint-part-done"],
          ["paint-part-raw", "paint-can-full"])
    if stations == 2:
        b.goals.append("paint-part-done")
    else:
        b.init += ["paint-pen-ready", "shelf-is-empty"]
        b.act("paint-sign-log", "paint", ["paint-pen-ready", "paint-part-done"], ["paint-log-signed"],
              ["paint-pen-ready"])
        b.act("paint-place-part", "paint", ["paint-part-done", "shelf-is-empty"], ["shelf-has-part"],
              ["paint-part-done", "shelf-is-empty"])
        b.act("pack-take-part", "pack", ["shelf-has-part"], ["pack-part-held", "shelf-is-empty"],
              ["shelf-has-part"])
        b.act("pack-seal-box", "pack", ["pack-part-held"], ["pack-box-sealed"], ["pack-part-held"])
        b.goals += ["paint-log-signed", "pack-box-sealed"]
    if public_goal:
        b.goals.append("dock-is-empty")
    return b.doc()


def rovers(paths: Dict[str, Sequence[int]], soil: Sequence[int], goals: Sequence[int], lander: int,
           blocked: Optional[Tuple[str, int, int]] = None) -> dict:
    """Rovers sampling soil and sending the data from the lander waypoint.

    blocked=(rover, a, b) makes the move a->b need a bridge that never exists.
    """
    b = _Builder(sorted(paths))
    for rover, path in sorted(paths.items()):
        store = rover + "-store-empty"
        b.init += ["%s-at-wp%d" % (rover, path[0]), store]
        for here, there in zip(path, path[1:]):
            for src, dst in ((here, there), (there, here)):
                prec = ["%s-at-wp%d" % (rover, src)]
                if blocked == (rover, src, dst):
                    prec.append("wp%d-bridge-intact" % dst)
                b.act("%s-move-wp%d-wp%d" % (rover, src, dst), rover, prec,
                      ["%s-at-wp%d" % (rover, dst)], ["%s-at-wp%d" % (rover, src)])
        for wp in sorted(set(path) & set(soil)):
            held = "%s-has-soil-wp%d" % (rover, wp)
            b.act("%s-sample-wp%d" % (rover, wp), rover,
                  ["%s-at-wp%d" % (rover, wp), "wp%d-has-soil" % wp, store], [held],
                  ["wp%d-has-soil" % wp, store])
            if lander in path:
                b.act("%s-send-wp%d" % (rover, wp), rover, [held, "%s-at-wp%d" % (rover, lander)],
                      ["soil-data-wp%d" % wp, store], [held])
    b.init += ["wp%d-has-soil" % wp for wp in soil]
    b.goals += ["soil-data-wp%d" % wp for wp in goals]
    return b.doc()


def chain(agents: int = 2) -> dict:
    """Width-1 chain: every step adds a fact no earlier state had."""
    names = ["chainer", "sleeper"][:agents]
    b = _Builder(names)
    b.init.append("chain-start")
    steps = ["chain-start", "chain-mid-a", "chain-mid-b", "chain-goal-done"]
    for i, (src, dst) in enumerate(zip(steps, steps[1:]), 1):
        b.act("chain-step-%d" % i, "chainer", [src], [dst], [src])
    if agents > 1:
        b.init.append("sleeper-idle-flag")
        b.act("sleeper-rest", "sleeper", ["sleeper-idle-flag"], ["sleeper-busy-flag"], ["sleeper-idle-flag"])
    b.goals.append("chain-goal-done")
    return b.doc()


def relay() -> dict:
    """Width-1 hand-over between two agents."""
    b = _Builder(["sender", "receiver"])
    b.init.append("relay-start")
    b.act("relay-send", "sender", ["relay-start"], ["relay-handoff"], ["relay-start"])
    b.act("relay-finish", "receiver", ["relay-handoff"], ["relay-goal-done"], ["relay-handoff"])
    b.goals.append("relay-goal-done")
    return b.doc()


def pair(handover: bool = False) -> dict:
    """Width-2: the goal needs two facts that no single-step state holds together.

    Both facts are first reached at cost 1 in separate states; the state with
    both is reached at cost 2, so it holds no fact new at its cost and only the
    pair makes it novel.
    """
    b = _Builder(["pairer", "watcher"])
    b.init += ["pair-start", "watcher-idle-flag"]
    b.act("pair-go-left", "pairer", ["pair-start"], ["pair-left"], ["pair-start"])
    b.act("pair-go-right", "pairer", ["pair-start"], ["pair-right"], ["pair-start"])
    b.act("pair-add-right", "pairer", ["pair-left"], ["pair-right"])
    b.act("pair-add-left", "pairer", ["pair-right"], ["pair-left"])
    b.act("watcher-rest", "watcher", ["watcher-idle-flag"], ["watcher-busy-flag"], ["watcher-idle-flag"])
    if handover:
        b.act("pair-join", "pairer", ["pair-left", "pair-right"], ["pair-joined"])
        b.act("watcher-finish", "watcher", ["pair-joined"], ["pair-goal-done"])
    else:
        b.act("pair-join", "pairer", ["pair-left", "pair-right"], ["pair-goal-done"])
    b.goals.append("pair-goal-done")
    return b.doc()


SUITE: Dict[str, Callable[[], dict]] = {
    "log-relay": lambda: trucks({"truck1": [1, 2], "truck2": [2, 3]}, {"truck1": 1, "truck2": 3}, [(1, 3)]),
    "log-two-pkgs": lambda: trucks({"truck1": [1, 2], "truck2": [2, 3]}, {"truck1": 2, "truck2": 2},
                                   [(1, 3), (3, 2)]),
    "log-three-trucks": lambda: trucks({"truck1": [1, 2], "truck2": [2, 3], "truck3": [3, 4]},
                                       {"truck1": 1, "truck2": 2, "truck3": 4}, [(1, 4)]),
    "log-local": lambda: trucks({"truck1": [1, 2, 3], "truck2": [3, 4]}, {"truck1": 1, "truck2": 4}, [(1, 2)]),
    "blocks-swap": lambda: blocks(["armA", "armB"], [[1, 2]], ["block2-ontable", "block1-on-block2"]),
    "blocks-tower": lambda: blocks(["armA", "armB"], [[1], [2], [3]],
                                   ["block1-on-block2", "block2-on-block3"]),
    "blocks-unstack": lambda: blocks(["armA", "armB"], [[1, 2, 3]], ["block3-ontable", "block2-ontable"]),
    "factory-two": lambda: factory(2),
    "factory-three": lambda: factory(3),
    "factory-public": lambda: factory(2, public_goal=True),
    "rovers-two": lambda: rovers({"rover1": [1, 2], "rover2": [3, 2]}, [1, 3], [1, 3], lander=2),
    "rovers-shared": lambda: rovers({"rover1": [1, 2], "rover2": [2, 3]}, [2], [2], lander=3),
    "width1-chain": lambda: chain(2),
    "width1-relay": relay,
    "width2-pair": lambda: pair(False),
    "width2-handover": lambda: pair(True),
    "solo-chain": lambda: chain(1),
    "solo-trucks": lambda: trucks({"truck1": [1, 2, 3]}, {"truck1": 2}, [(1, 3), (3, 1)]),
    "solo-blocks": lambda: blocks(["armA"], [[1, 2, 3]], ["block1-on-block2", "block2-on-block3"]),
    "unsolvable-no-route": lambda: trucks({"truck1": [1, 2], "truck2": [2, 3]}, {"truck1": 1, "truck2": 2},
                                          [(1, 4)]),
    "unsolvable-blocks-cycle": lambda: blocks(["armA", "armB"], [[1], [2]],
                                              ["block1-on-block2", "block2-on-block1"]),
    "unsolvable-no-paint": lambda: factory(2, with_paint=False),
    "unsolvable-broken-bridge": lambda: rovers({"rover1": [1, 2, 4], "rover2": [3, 2]}, [1, 4], [1, 4],
                                               lander=2, blocked=("rover1", 2, 4)),
    "unsolvable-no-fuel": lambda: trucks({"truck1": [1, 2, 3], "truck2": [3, 4]},
                                         {"truck1": 1, "truck2": 4}, [(1, 4)], fuel={"truck1": 1}),
}

UNSOLVABLE = tuple(name for name in SUITE if name.startswith("unsolvable-"))
SOLVABLE = tuple(name for name in SUITE if name not in UNSOLVABLE)
WIDTH1 = ("width1-chain", "width1-relay", "solo-chain")
WIDTH2 = ("width2-pair", "width2-handover")
SINGLE_AGENT = ("solo-chain", "solo-trucks", "solo-blocks")
MESSAGE_HEAVY = "log-three-trucks"


def document(name: str) -> dict:
    try:
        return SUITE[name]()
    except KeyError:
        raise KeyError("no bundled problem named '" + name + "'")


def problem(name: str) -> Problem:
    return problem_from_document(document(name))


def write_suite(directory: str, names: Optional[Iterable[str]] = None) -> List[str]:
    """Dump bundled problems as <name>.json files; returns the written paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in (names if names is not None else SUITE):
        path = os.path.join(directory, name + ".json")
        save_problem(problem(name), path)
        paths.append(path)
    return paths
