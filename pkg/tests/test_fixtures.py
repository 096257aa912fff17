import os
import tempfile
import unittest

from mabfws.bfws_lib import fixtures
from mabfws.bfws_lib.ingest import load_problem, problem_to_document
from oracles import solvable


class FixturesTest(unittest.TestCase):
    def test_suite_shape(self):
        self.assertGreaterEqual(len(fixtures.SUITE) - len(fixtures.SINGLE_AGENT), 20)
        self.assertEqual(len(fixtures.UNSOLVABLE), 5)
        for name in fixtures.SUITE:
            p = fixtures.problem(name)
            if name in fixtures.SINGLE_AGENT:
                self.assertEqual(p.num_agents, 1, name)
            else:
                self.assertIn(p.num_agents, (2, 3), name)

    def test_solvability_matches_exhaustive_search(self):
        for name in fixtures.SUITE:
            self.assertEqual(solvable(fixtures.problem(name)), name not in fixtures.UNSOLVABLE, name)

    def test_fact_names_are_long_enough_to_scan_for(self):
        for name in fixtures.SUITE:
            for fact in fixtures.document(name)["facts"]:
                self.assertGreaterEqual(len(fact), 8, fact)

    def test_width_fixtures_have_one_goal(self):
        for name in fixtures.WIDTH1 + fixtures.WIDTH2:
            self.assertEqual(bin(fixtures.problem(name).goals).count("1"), 1, name)

    def test_factory_goals_are_private(self):
        p = fixtures.problem("factory-two")
        self.assertEqual(sorted(p.agents[i] for i in p.goal_owners()), ["mill", "paint"])
        p = fixtures.problem("factory-public")
        self.assertTrue(p.goals & p.public_mask)

    def test_write_suite(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = fixtures.write_suite(tmp)
            self.assertEqual(sorted(os.listdir(tmp)), sorted(n + ".json" for n in fixtures.SUITE))
            for path in paths:
                name = os.path.basename(path)[:-len(".json")]
                self.assertEqual(problem_to_document(load_problem(path)),
                                 problem_to_document(fixtures.problem(name)))

    def test_unknown_name(self):
        with self.assertRaises(KeyError):
            fixtures.problem("no-such-fixture")


if __name__ == "__main__":
    unittest.main()
