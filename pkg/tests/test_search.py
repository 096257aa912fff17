import unittest

from mabfws.bfws_lib.fixtures import SINGLE_AGENT, document, problem
from mabfws.bfws_lib.harness import resolve_plan, validate
from mabfws.bfws_lib.heuristics import EvalVariant
from mabfws.bfws_lib.ingest import problem_from_document
from mabfws.bfws_lib.model import State, applicable, apply
from mabfws.bfws_lib.search import (UNBOUNDED, OpenList, SearchNode, TracebackMiss, ZeroCostWithPruning, k_name,
                                    parse_k, solve)
from oracles import centralized_bfws_pops


def zero_cost(name):
    doc = document(name)
    for act in doc["actions"]:
        act["cost"] = 0
    return problem_from_document(doc)


class SearchPartsTest(unittest.TestCase):
    def test_parse_k(self):
        self.assertEqual(parse_k("1"), 1)
        self.assertEqual(parse_k(2), 2)
        self.assertIs(parse_k("unbounded"), UNBOUNDED)
        self.assertIs(parse_k(None), UNBOUNDED)
        for bad in ("3", 0, "many"):
            with self.assertRaises(ValueError):
                parse_k(bad)
        self.assertEqual(k_name(UNBOUNDED), "unbounded")
        self.assertEqual(k_name(2), "2")

    def test_open_list_order_and_discard(self):
        ol = OpenList()
        nodes = []
        for i, key in enumerate([(2, 1), (1, 5), (1, 5), (0, 9)]):
            n = SearchNode(i, State(1 << i), 0)
            n.eval = key
            ol.push(n)
            nodes.append(n)
        ol.discard(nodes[3])
        ol.discard(nodes[3])
        self.assertEqual(len(ol), 3)
        self.assertEqual([ol.pop().id for _ in range(3)], [1, 2, 0])
        self.assertIsNone(ol.pop())
        self.assertEqual(len(ol), 0)


class SolveTest(unittest.TestCase):
    def assert_valid(self, p, result):
        self.assertTrue(result.solved)
        check = validate(p, resolve_plan(p, result))
        self.assertTrue(check, check.reason)

    def test_single_agent_chain(self):
        p = problem("solo-chain")
        result = solve(p, EvalVariant.F1)
        self.assert_valid(p, result)
        self.assertEqual([s.action for s in result.plan.steps], ["chain-step-1", "chain-step-2", "chain-step-3"])
        self.assertEqual(result.cost, 3.0)
        self.assertEqual(result.elapsed_unit, "rounds")

    def test_relay_plan_and_views(self):
        p = problem("log-relay")
        agents = []
        result = solve(p, EvalVariant.F1, agents_out=agents)
        self.assert_valid(p, result)
        self.assertEqual(len(result.plan), len(result.steps))
        for step in result.plan.steps:
            if step.agent == result.finder:
                self.assertIsNotNone(step.action)
            else:
                self.assertIsNone(step.action)
        for res in result.results:
            self.assertTrue(res.solved)
            self.assertEqual(res.steps, result.steps)
        for agent in agents:
            for step in agent.result.plan.steps:
                self.assertEqual(step.action is not None, step.agent == agent.agent)
        self.assertGreater(sum(s["received_opened"] for s in result.stats), 0)
        self.assertGreater(sum(s["states_sent"] for s in result.stats), 0)
        with self.assertRaises(TracebackMiss):
            agents[0]._lookup(10 ** 9)

    def test_private_goals_need_every_owner(self):
        p = problem("factory-three")
        self.assertEqual(len(p.goal_owners()), 3)
        self.assert_valid(p, solve(p, EvalVariant.F2))

    def test_unsolvable_terminates(self):
        for name in ("unsolvable-no-route", "unsolvable-no-fuel"):
            result = solve(problem(name), EvalVariant.F3, time_limit=60)
            self.assertFalse(result.solved)
            self.assertFalse(result.timed_out)
            for res in result.results:
                self.assertFalse(res.solved)

    def test_concurrent_mode(self):
        p = problem("log-relay")
        result = solve(p, EvalVariant.F1, mode="conc", seed=None, time_limit=60)
        self.assertFalse(result.timed_out)
        self.assert_valid(p, result)
        self.assertEqual(result.elapsed_unit, "seconds")
        result = solve(problem("unsolvable-no-route"), EvalVariant.F1, mode="conc", seed=None, time_limit=60)
        self.assertFalse(result.solved)
        self.assertFalse(result.timed_out)

    def test_bad_arguments(self):
        p = problem("solo-chain")
        with self.assertRaises(ValueError):
            solve(p, EvalVariant.F1, mode="threads")
        with self.assertRaises(ValueError):
            solve(p, EvalVariant.F1, seed=None)

    def test_zero_cost_needs_opt_in(self):
        p = zero_cost("solo-chain")
        with self.assertRaises(ZeroCostWithPruning):
            solve(p, EvalVariant.WG, k=1)
        self.assert_valid(p, solve(p, EvalVariant.WG, k=1, zero_cost_ok=True))
        self.assert_valid(p, solve(p, EvalVariant.WG))

    def test_f1_pops_like_centralized_bfws(self):
        for name in SINGLE_AGENT:
            p = problem(name)
            agents = []
            result = solve(p, EvalVariant.F1, record_pops=True, agents_out=agents)
            self.assertTrue(result.solved, name)
            self.assertEqual([n.state.plain for n in agents[0].pops], centralized_bfws_pops(p), name)

    def test_expand_matches_applicable_actions(self):
        p = problem("log-two-pkgs")
        agents = []
        solve(p, EvalVariant.F1, agents_out=agents)
        for agent in agents:
            for node in list(agent.closed.values())[:25]:
                want = {a.id: (apply(node.state, a), node.g + a.cost)
                        for a in p.actions[agent.agent] if applicable(node.state, a)}
                children = agent.expand(node)
                self.assertEqual({c.via_action: (c.state, c.g) for c in children}, want)
                for child in children:
                    self.assertEqual(child.parent, node.id)

    def test_rpg_counters_on_message_heavy_problem(self):
        p = problem("log-three-trucks")
        result = solve(p, EvalVariant.F6)
        self.assert_valid(p, result)
        for s in result.stats:
            self.assertEqual(s["rpg_builds"], 1)
        result = solve(p, EvalVariant.F5)
        self.assert_valid(p, result)
        self.assertGreater(sum(s["received_opened"] for s in result.stats), 0)
        for s in result.stats:
            self.assertEqual(s["rpg_builds"], 1 + s["received_opened"])


if __name__ == "__main__":
    unittest.main()
