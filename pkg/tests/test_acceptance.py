"""Whole-planner properties checked over the bundled suite and random problems."""

import io
import os
import random
import tempfile
import unittest

from mabfws.bfws_lib import fixtures
from mabfws.bfws_lib.bitset import ids_of, popcount
from mabfws.bfws_lib.comm import Message, MessageKind, decode_state
from mabfws.bfws_lib.harness import HEURISTICS, RunConfig, bench_suite, expansion_bound, resolve_plan, run, validate
from mabfws.bfws_lib.heuristics import EvalVariant
from mabfws.bfws_lib.ingest import problem_from_document
from mabfws.bfws_lib.novelty import CostNoveltyTable, FactSpace, cost_novelty
from mabfws.bfws_lib.search import UNBOUNDED, solve

K_VALUES = (1, 2, UNBOUNDED)
SWEEP_TIME_LIMIT = 10.0


def small_enough(problem):
    return all(popcount(problem.visible_mask(i)) <= 12 for i in range(problem.num_agents))


def zero_cost(name):
    doc = fixtures.document(name)
    for act in doc["actions"]:
        act["cost"] = 0
    return problem_from_document(doc)


def random_two_agent_doc(rng):
    facts = ["rand-fact-%02d" % i for i in range(9)]
    pools = {"alpha-agent": facts[0:3] + facts[6:9], "beta-agent": facts[3:6] + facts[6:9]}
    actions = []
    for agent, pool in sorted(pools.items()):
        for n in range(4):
            prec = rng.sample(pool, rng.randint(1, 2))
            add = rng.sample([f for f in pool if f not in prec], rng.randint(1, 2))
            delete = rng.sample(prec, rng.randint(0, len(prec)))
            actions.append({"name": "%s-act-%d" % (agent, n), "agent": agent, "prec": prec, "add": add,
                            "del": delete})
    return {
        "version": 1,
        "agents": sorted(pools),
        "facts": facts,
        "init": rng.sample(facts, 4),
        "goals": rng.sample(facts, 2),
        "actions": actions,
    }


class SuiteSweepTest(unittest.TestCase):
    """Every fixture under every heuristic and novelty bound."""

    @classmethod
    def setUpClass(cls):
        cls.outcomes = {}
        for name in fixtures.SUITE:
            p = fixtures.problem(name)
            for h in HEURISTICS:
                for k in K_VALUES:
                    result = solve(p, EvalVariant.parse(h), k, time_limit=SWEEP_TIME_LIMIT)
                    valid = result.solved and bool(validate(p, resolve_plan(p, result)))
                    cls.outcomes[(name, h, k)] = (result, valid)

    def test_every_plan_is_valid(self):
        for key, (result, valid) in self.outcomes.items():
            if result.solved:
                self.assertTrue(valid, key)

    def test_unbounded_search_is_complete(self):
        for name in fixtures.SUITE:
            for h in HEURISTICS:
                result, _ = self.outcomes[(name, h, UNBOUNDED)]
                self.assertFalse(result.timed_out, (name, h))
                self.assertEqual(result.solved, name not in fixtures.UNSOLVABLE, (name, h))

    def test_pruned_search_never_hangs(self):
        for key, (result, _) in self.outcomes.items():
            self.assertFalse(result.timed_out, key)

    def test_width_bounds(self):
        for h in HEURISTICS:
            for name in fixtures.WIDTH1:
                self.assertTrue(self.outcomes[(name, h, 1)][0].solved, (name, h))
            for name in fixtures.WIDTH2:
                self.assertTrue(self.outcomes[(name, h, 2)][0].solved, (name, h))
            self.assertFalse(self.outcomes[("width2-pair", h, 1)][0].solved, h)

    def test_expansions_stay_under_bound(self):
        checked = 0
        for (name, h, k), (result, _) in self.outcomes.items():
            p = fixtures.problem(name)
            if k is UNBOUNDED or not small_enough(p):
                continue
            for agent, stats in enumerate(result.stats):
                self.assertLessEqual(stats["expanded"], expansion_bound(p, agent, k), (name, h, k))
                checked += 1
        self.assertGreater(checked, 0)


class ZeroCostBoundTest(unittest.TestCase):
    def test_expansions_stay_under_zero_cost_bound(self):
        for name in fixtures.SINGLE_AGENT + fixtures.WIDTH1 + fixtures.WIDTH2:
            p = zero_cost(name)
            for k in (1, 2):
                for h in ("f1", "f5", "wg"):
                    result = solve(p, EvalVariant.parse(h), k, zero_cost_ok=True, time_limit=SWEEP_TIME_LIMIT)
                    for agent, stats in enumerate(result.stats):
                        self.assertLessEqual(stats["expanded"], expansion_bound(p, agent, k, "zero"),
                                             (name, k, h))


class EncryptedNoveltyTest(unittest.TestCase):
    """Novelty over tokens never exceeds novelty over the facts they hide."""

    def setUp(self):
        self.rng = random.Random(0xC0FFEE)

    def test_random_two_agent_problems(self):
        variants = list(EvalVariant)
        processed = 0
        for trial in range(100):
            p = problem_from_document(random_two_agent_doc(self.rng))
            agents = []
            result = solve(p, variants[trial % len(variants)], UNBOUNDED, seed=trial,
                           time_limit=SWEEP_TIME_LIMIT, agents_out=agents)
            self.assertFalse(result.timed_out)
            for agent in agents:
                space = FactSpace(p.num_facts)
                encrypted, plain = CostNoveltyTable(), CostNoveltyTable()
                for node in agent.nodes.values():
                    enc = cost_novelty(space.render(node.state), node.g, encrypted)
                    full = node.state.plain
                    for tok in node.state.tokens:
                        full |= result.vaults[tok.issuer].subset_of(tok.digest)
                    clear = cost_novelty(ids_of(full), node.g, plain)
                    self.assertEqual(enc, node.novelty_g)
                    self.assertLessEqual(enc, clear, (trial, agent.name, node.id))
                    processed += 1
        self.assertGreater(processed, 200)


class PrivacyScanTest(unittest.TestCase):
    def test_frames_leak_no_private_names(self):
        frames_seen = 0
        for name in fixtures.SUITE:
            p = fixtures.problem(name)
            action_names = [a.name.encode() for a in p.action_list]
            for h in (EvalVariant.F1, EvalVariant.F6):
                result = solve(p, h, capture=True, time_limit=SWEEP_TIME_LIMIT)
                for frame in result.frames:
                    frames_seen += 1
                    private = p.fact_names(p.private_masks[frame.sender])
                    for fact in private:
                        self.assertNotIn(fact.encode(), frame.frame, name)
                    for action in action_names:
                        self.assertNotIn(action, frame.frame, name)
                    if frame.kind is not MessageKind.STATE:
                        continue
                    state, _, _ = decode_state(Message.decode(frame.frame).payload)
                    self.assertEqual(state.plain & ~p.public_mask, 0, name)
                    tok = state.token_of(frame.sender)
                    vault = result.vaults[frame.sender]
                    self.assertEqual(vault.token_for(vault.subset_of(tok.digest)), tok)
        self.assertGreater(frames_seen, 0)


class DeterminismTest(unittest.TestCase):
    def test_reports_repeat_byte_for_byte(self):
        for name in ("log-relay", "factory-two", "rovers-two"):
            p = fixtures.problem(name)
            for h in ("f1", "f4", "f6"):
                config = RunConfig(heuristic=h, repeats=1, time_limit=60, seed=7)
                reports = {run(config, p).to_json() for _ in range(5)}
                self.assertEqual(len(reports), 1, (name, h))

    def test_csv_repeats_byte_for_byte(self):
        with tempfile.TemporaryDirectory() as tmp:
            fixtures.write_suite(tmp, ["log-relay", "blocks-swap", "unsolvable-no-paint"])
            configs = [RunConfig(heuristic=h, repeats=1, time_limit=60) for h in ("f2", "f5")]
            outputs = set()
            for _ in range(5):
                out = io.StringIO()
                bench_suite(tmp, configs, out)
                outputs.add(out.getvalue())
            self.assertEqual(len(outputs), 1)
            self.assertTrue(os.path.exists(os.path.join(tmp, "blocks-swap.json")))


if __name__ == "__main__":
    unittest.main()
