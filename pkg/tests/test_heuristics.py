import random
import unittest
from types import SimpleNamespace
from unittest import mock

from mabfws.bfws_lib import heuristics
from mabfws.bfws_lib.bitset import ids_of
from mabfws.bfws_lib.fixtures import SINGLE_AGENT, SUITE, problem
from mabfws.bfws_lib.heuristics import (INFINITY, EvalVariant, Evaluator, RelevantSet, build_rpg, count_false_goals,
                                        count_unreachable_goals, h_ff, h_ff_plus, init_rpg_two_step,
                                        missing_preconditions, relaxed_plan, relevant_count, super_relaxed_plan)
from mabfws.bfws_lib.model import State, applicable, apply
from mabfws.bfws_lib.novelty import NoveltyLevel
from oracles import centralized_ff


def node(state, nid=0, g=0):
    return SimpleNamespace(id=nid, state=state, g=g, novelty_g=NoveltyLevel.ONE, relevant=None, achieved=0)


class HeuristicsTest(unittest.TestCase):
    def setUp(self):
        self.rng = random.Random(0xC0FFEE)

    def test_chain_layers(self):
        p = problem("width1-chain")
        chainer = p.agent_index["chainer"]
        s = p.initial_state(chainer)
        rpg = build_rpg(s, p.actions[chainer])
        self.assertEqual(rpg.num_layers, 4)
        self.assertEqual(rpg.first_layer_of(p.fact_index["chain-goal-done"]), 3)
        self.assertEqual(rpg.first_layer_of(p.fact_index["sleeper-busy-flag"]), -1)
        self.assertEqual(h_ff(s, rpg, p.goals), 3)
        self.assertEqual([a.name for a in relaxed_plan(rpg, p.goals)],
                         ["chain-step-3", "chain-step-2", "chain-step-1"])
        self.assertEqual(count_false_goals(s, p.goals), 1)
        self.assertEqual(count_unreachable_goals(s, rpg, p.goals), 0)

    def test_unreachable_goals(self):
        p = problem("width1-chain")
        sleeper = p.agent_index["sleeper"]
        s = p.initial_state(sleeper)
        rpg = build_rpg(s, p.actions[sleeper])
        self.assertEqual(h_ff(s, rpg, p.goals), INFINITY)
        self.assertEqual(count_unreachable_goals(s, rpg, p.goals), 1)
        self.assertEqual(h_ff_plus(s, rpg, p.goals, 5), 5)

    def test_two_step_and_super_relaxed(self):
        p = problem("width1-relay")
        receiver = p.agent_index["receiver"]
        acts = p.actions[receiver]
        s = p.initial_state(receiver)
        handoff = 1 << p.fact_index["relay-handoff"]
        done = 1 << p.fact_index["relay-goal-done"]
        self.assertEqual(missing_preconditions(acts, s.plain), handoff)
        self.assertEqual(build_rpg(s, acts).fixpoint & done, 0)
        rpg = init_rpg_two_step(s, acts)
        self.assertTrue(rpg.fixpoint & done)
        # injected facts are free
        self.assertEqual([a.name for a in relaxed_plan(rpg, done)], ["relay-finish"])
        self.assertEqual([a.name for a in super_relaxed_plan(s, done, acts, rpg)], ["relay-finish"])
        self.assertEqual(super_relaxed_plan(s, s.plain, acts, rpg), [])

    def test_relevant_set(self):
        p = problem("width1-chain")
        chainer = p.agent_index["chainer"]
        s = p.initial_state(chainer)
        plan = relaxed_plan(build_rpg(s, p.actions[chainer]), p.goals)
        rel = RelevantSet.from_plan(0, plan)
        names = ["chain-start", "chain-mid-a", "chain-mid-b"]
        self.assertEqual(sorted(p.fact_names(rel.facts)), sorted(names))
        self.assertEqual(relevant_count(0, rel), 3)
        self.assertEqual(relevant_count(1 << p.fact_index["chain-mid-a"], rel), 2)

    def test_variant_parse(self):
        self.assertIs(EvalVariant.parse("F3"), EvalVariant.F3)
        self.assertTrue(EvalVariant.F6.uses_relevance)
        self.assertFalse(EvalVariant.F4.uses_relevance)
        with self.assertRaises(ValueError):
            EvalVariant.parse("f9")

    def test_evaluator_keys(self):
        p = problem("width1-chain")
        chainer = p.agent_index["chainer"]
        s = p.initial_state(chainer)
        facts = ids_of(s.plain)
        expected = {
            EvalVariant.HFF: (3,),
            EvalVariant.F1: (1, 3),
            EvalVariant.F2: (1, 1, 3),
            EvalVariant.F3: (1, 0, 1, 3),
            EvalVariant.F4: (1, 0, 1, 3),
            EvalVariant.F5: (1, 1, 3),
            EvalVariant.F6: (1, 1, 3),
            EvalVariant.WG: (1, 0),
        }
        for variant, key in expected.items():
            ev = Evaluator(p, chainer, variant)
            n = node(s)
            ev.anchor_root(n)
            self.assertEqual(ev.evaluate(n, facts), key, variant)

    def test_f6_builds_one_graph(self):
        p = problem("width1-relay")
        receiver = p.agent_index["receiver"]
        ev = Evaluator(p, receiver, EvalVariant.F6)
        root = node(p.initial_state(receiver))
        ev.anchor_root(root)
        got = node(State(1 << p.fact_index["relay-handoff"]), nid=1, g=1)
        ev.anchor_received(got)
        ev.evaluate(got, ids_of(got.state.plain))
        self.assertEqual(ev.rpg_builds, 1)
        self.assertIs(got.relevant, root.relevant)
        # the hand-over was achieved by the other agent, not by own actions
        self.assertEqual(got.achieved, 0)

    def test_f6_constructs_one_graph_per_agent(self):
        for name in ("width1-relay", "log-two-pkgs"):
            p = problem(name)
            for agent in range(p.num_agents):
                ev = Evaluator(p, agent, EvalVariant.F6)
                with mock.patch.object(heuristics, "RPG", wraps=heuristics.RPG) as spy:
                    ev.anchor_root(node(p.initial_state(agent)))
                    for nid in range(1, 4):
                        ev.anchor_received(node(State(p.initial_state(agent).plain | p.goals), nid=nid, g=nid))
                self.assertEqual(spy.call_count, 1, name)
                self.assertEqual(ev.rpg_builds, spy.call_count, name)

    def test_f5_rebuilds_on_received(self):
        p = problem("width1-relay")
        receiver = p.agent_index["receiver"]
        ev = Evaluator(p, receiver, EvalVariant.F5)
        ev.anchor_root(node(p.initial_state(receiver)))
        got = node(State(1 << p.fact_index["relay-handoff"]), nid=1, g=1)
        ev.anchor_received(got)
        self.assertEqual(ev.rpg_builds, 2)
        self.assertEqual(got.achieved, 0)
        self.assertEqual(p.fact_names(got.relevant.facts), ["relay-handoff"])

    def test_injected_facts_are_never_own_effects(self):
        for name in SUITE:
            p = problem(name)
            for agent in range(p.num_agents):
                acts = p.actions[agent]
                own_adds = 0
                for act in acts:
                    own_adds |= act.add
                rpg = init_rpg_two_step(p.initial_state(agent), acts)
                self.assertEqual(rpg.injected & own_adds, 0, name)

    def test_h_ff_matches_centralized_ff(self):
        sampled = 0
        for name in SINGLE_AGENT:
            p = problem(name)
            acts = p.actions[0]
            for _ in range(40):
                state = p.initial_state(0)
                for _ in range(self.rng.randrange(0, 12)):
                    options = [a for a in acts if applicable(state, a)]
                    if not options:
                        break
                    state = apply(state, self.rng.choice(options))
                for goals in (p.goals, 1 << self.rng.randrange(p.num_facts)):
                    want = centralized_ff(set(ids_of(state.plain)), acts, set(ids_of(goals)))
                    self.assertEqual(h_ff(state, build_rpg(state, acts), goals), want)
                    sampled += 1
        self.assertGreaterEqual(sampled, 200)


if __name__ == "__main__":
    unittest.main()
