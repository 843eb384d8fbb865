# Filename: tests/test_problem.py
# How to run:
#   python -m unittest -v tests/test_problem.py

import math
import unittest

import numpy as np

from manifold_reach_package.errors import ConfigError
from manifold_reach_package.geometry import Circle
from manifold_reach_package.hamiltonian import ControlBounds, HamiltonianMode
from manifold_reach_package.problem import (
    GoalDistance,
    PairwiseSeparation,
    ReachabilityProblem,
    circle_avoid_game,
    circle_reach_problem,
    problem_from_dict,
    terminal_from_dict,
)


class TestTerminalConditions(unittest.TestCase):

    def test_goal_distance(self):
        terminal = GoalDistance(goal=(0.5, 0.0))
        np.testing.assert_allclose(terminal.evaluate([[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5]]),
                                   [0.0, 1.0, math.sqrt(0.5)])

    def test_pairwise_separation(self):
        terminal = PairwiseSeparation(agent_radius=0.05)
        np.testing.assert_allclose(terminal.evaluate([[0.0, 0.0, 0.3, 0.4], [0.0, 0.0, 0.05, 0.0]]),
                                   [0.4, -0.05])
        with self.assertRaises(ValueError):
            PairwiseSeparation(agent_radius=0.0)

    def test_from_dict_errors(self):
        with self.assertRaises(ConfigError) as ctx:
            terminal_from_dict({"kind": "goal_distance"})
        self.assertEqual(ctx.exception.field, "problem.terminal.goal")
        with self.assertRaises(ConfigError) as ctx:
            terminal_from_dict({"kind": "box"})
        self.assertEqual(ctx.exception.field, "problem.terminal.kind")


class TestReachabilityProblem(unittest.TestCase):
    """Reference problems, projectors and the dict form."""

    def test_reference_reach_problem(self):
        problem = circle_reach_problem()
        self.assertEqual(problem.mode, HamiltonianMode.REACH_MIN)
        self.assertAlmostEqual(problem.horizon, math.pi / 2)
        self.assertFalse(problem.is_game)
        self.assertEqual(problem.state_dim, 2)

    def test_reference_game(self):
        game = circle_avoid_game()
        self.assertTrue(game.is_game)
        self.assertEqual(game.state_dim, 4)
        self.assertEqual(game.bounds.d_max, 1.0)

    def test_game_needs_adversary(self):
        with self.assertRaises(ValueError):
            ReachabilityProblem(mode="avoid_game", constraint=Circle(radius=0.5),
                                bounds=ControlBounds(u_max=1.0, d_max=1.0), horizon=1.0,
                                terminal=PairwiseSeparation(agent_radius=0.05))

    def test_horizon_must_be_positive(self):
        with self.assertRaises(ValueError):
            circle_reach_problem(horizon=0.0)

    def test_projections(self):
        X = np.array([[0.5, 0.0, 0.0, 0.5]])
        P_ego, P_adv = circle_avoid_game().projections(X)
        np.testing.assert_allclose(P_ego[0], [[0.0, 0.0], [0.0, 1.0]], atol=1e-12)
        np.testing.assert_allclose(P_adv[0], [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)

    def test_unconstrained_ablation_uses_identity(self):
        P_ego, P_adv = circle_reach_problem(constrained=False).projections([[0.5, 0.0]])
        np.testing.assert_array_equal(P_ego[0], np.eye(2))
        self.assertIsNone(P_adv)

    def test_dict_round_trip(self):
        for problem in (circle_reach_problem(horizon=1.0), circle_avoid_game(agent_radius=0.1)):
            restored = problem_from_dict(problem.to_dict())
            self.assertEqual(restored.to_dict(), problem.to_dict())

    def test_from_dict_names_missing_key(self):
        data = circle_reach_problem().to_dict()
        del data["horizon"]
        with self.assertRaises(ConfigError) as ctx:
            problem_from_dict(data)
        self.assertEqual(ctx.exception.field, "problem.horizon")
        data = circle_reach_problem().to_dict()
        data["drift"] = 1.0
        with self.assertRaises(ConfigError) as ctx:
            problem_from_dict(data, "model.problem")
        self.assertEqual(ctx.exception.field, "model.problem.drift")


if __name__ == "__main__":
    unittest.main(verbosity=2)
