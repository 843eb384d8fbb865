# Filename: tests/test_oracle.py
# How to run:
#   python -m unittest -v tests/test_oracle.py

import math
import unittest

import numpy as np

from manifold_reach_package.errors import ConfigError, InvalidInputError, PreconditionError
from manifold_reach_package.oracle import (
    CircleReachSpec,
    ConfusionReport,
    brs_profile,
    calibrate_threshold,
    classify_brs,
    evaluate_slices,
    geodesic_value,
    geodesic_value_batch,
    grid_solve_circle,
    ground_truth_brs_member,
    ground_truth_brs_member_batch,
    optimal_travel_distance,
    standard_time_slices,
    table_rows,
)
from manifold_reach_package.problem import circle_avoid_game, circle_reach_problem


class TestClosedForm(unittest.TestCase):
    """Membership and value of the exact reachable set."""

    def setUp(self):
        self.spec = CircleReachSpec()
        self.T = self.spec.horizon

    # ----------------------------------
    # Membership
    # ----------------------------------

    def test_goal_is_always_member(self):
        for t in np.linspace(0.0, self.T, 7):
            self.assertTrue(ground_truth_brs_member(self.spec, t, (0.5, 0.0)))

    def test_antipode_outside_at_three_eighths(self):
        self.assertFalse(ground_truth_brs_member(self.spec, self.T - 3 * math.pi / 8, (-0.5, 0.0)))

    def test_quarter_point_on_boundary(self):
        self.assertTrue(ground_truth_brs_member(self.spec, self.T - math.pi / 4, (0.0, 0.5)))

    def test_off_circle_rejected(self):
        with self.assertRaises(PreconditionError):
            ground_truth_brs_member(self.spec, 0.0, (0.4, 0.0))

    # ----------------------------------
    # Value
    # ----------------------------------

    def test_value_examples(self):
        self.assertEqual(geodesic_value(self.spec, 0.3, (0.5, 0.0)), 0.0)
        self.assertAlmostEqual(geodesic_value(self.spec, self.T, (-0.5, 0.0)), 1.0)
        self.assertAlmostEqual(geodesic_value(self.spec, self.T - math.pi / 4, (-0.5, 0.0)),
                               math.sin(math.pi / 4))

    def test_value_matches_simulated_travel(self):
        for x in [(-0.5, 0.0), (0.0, -0.5), (0.5 * math.cos(2.5), 0.5 * math.sin(2.5))]:
            for t in (0.0, self.T - math.pi / 4, self.T - 0.1):
                self.assertAlmostEqual(optimal_travel_distance(self.spec, t, x),
                                       geodesic_value(self.spec, t, x), delta=1e-9)

    def test_terminal_slice_is_goal_distance(self):
        X = self.spec.point_at(np.linspace(0.0, 2 * math.pi, 100, endpoint=False))
        np.testing.assert_allclose(geodesic_value_batch(self.spec, self.T, X),
                                   np.linalg.norm(X - np.array([0.5, 0.0]), axis=1), atol=1e-12)

    def test_zero_value_iff_member(self):
        X = self.spec.point_at(np.random.default_rng(0).uniform(0, 2 * math.pi, 1000))
        for t in np.linspace(0.0, self.T, 9):
            zero = geodesic_value_batch(self.spec, t, X) == 0.0
            np.testing.assert_array_equal(zero, ground_truth_brs_member_batch(self.spec, t, X))

    def test_value_nondecreasing_in_time(self):
        X = self.spec.point_at(np.linspace(0.0, 2 * math.pi, 200, endpoint=False))
        times = np.linspace(0.0, self.T, 11)
        values = np.stack([geodesic_value_batch(self.spec, t, X) for t in times])
        self.assertTrue(np.all(np.diff(values, axis=0) >= -1e-15))

    def test_general_circle(self):
        spec = CircleReachSpec(radius=1.0, center=(1.0, 1.0), goal=(1.0, 2.0), u_max=2.0, horizon=2.0)
        self.assertAlmostEqual(spec.angular_speed, 2.0)
        self.assertTrue(ground_truth_brs_member(spec, 2.0 - math.pi / 2, (1.0, 0.0)))
        self.assertFalse(ground_truth_brs_member(spec, 2.0 - math.pi / 4, (1.0, 0.0)))
        self.assertAlmostEqual(geodesic_value(spec, 2.0, (2.0, 1.0)), math.sqrt(2.0))

    def test_spec_from_problem(self):
        spec = CircleReachSpec.from_problem(circle_reach_problem(horizon=1.0))
        self.assertEqual(spec.horizon, 1.0)
        self.assertEqual(spec.goal, (0.5, 0.0))
        with self.assertRaises(InvalidInputError):
            CircleReachSpec.from_problem(circle_avoid_game())

    def test_goal_must_lie_on_circle(self):
        with self.assertRaises(ValueError):
            CircleReachSpec(goal=(0.6, 0.0))


class TestGridSolver(unittest.TestCase):
    """Lax-Friedrichs solve on the angle grid against the closed form."""

    @classmethod
    def setUpClass(cls):
        cls.spec = CircleReachSpec()
        cls.solutions = {n: grid_solve_circle(cls.spec, n_theta=n) for n in (128, 256, 512)}

    def _max_error(self, solution, count=1000, seed=0):
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.0, self.spec.horizon, count)
        X = self.spec.point_at(rng.uniform(0.0, 2 * math.pi, count))
        errors = [abs(solution.value(t[i], X[i:i + 1])[0] - geodesic_value(self.spec, t[i], X[i]))
                  for i in range(count)]
        return max(errors)

    def test_error_at_512(self):
        self.assertLessEqual(self._max_error(self.solutions[512]), 0.02)

    def test_refinement_reduces_error(self):
        errors = [self._max_error(self.solutions[n], seed=1) for n in (128, 256, 512)]
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_terminal_slice_is_exact(self):
        solution = self.solutions[128]
        expected = np.linalg.norm(self.spec.point_at(solution.thetas) - np.array([0.5, 0.0]), axis=1)
        np.testing.assert_array_equal(solution.values[-1], expected)

    def test_cfl_violation(self):
        with self.assertRaises(ConfigError) as ctx:
            grid_solve_circle(self.spec, n_theta=512, n_time=10)
        self.assertEqual(ctx.exception.field, "evaluation.n_time")

    def test_coarse_grid_rejected(self):
        with self.assertRaises(ConfigError):
            grid_solve_circle(self.spec, n_theta=32)

    def test_grid_classifies_well(self):
        report = classify_brs(self.solutions[512], self.spec, self.spec.horizon - math.pi / 4, threshold=0.02)
        self.assertGreaterEqual(report.accuracy, 95.0)
        self.assertEqual(report.source, "grid")


class TestClassification(unittest.TestCase):
    """Confusion counts, calibration and the results-table layout."""

    def setUp(self):
        self.spec = CircleReachSpec()

    def test_analytic_source_is_perfect(self):
        for t in standard_time_slices(self.spec):
            report = classify_brs("analytic", self.spec, t, n_theta=720, threshold=1e-9)
            self.assertEqual(report.accuracy, 100.0)
            self.assertEqual(report.f1, 100.0)
            self.assertEqual(report.total, 720)

    def test_always_member_source(self):
        t = self.spec.horizon - math.pi / 4
        report = classify_brs(lambda t, X: np.zeros(len(X)), self.spec, t)
        self.assertEqual(report.recall, 100.0)
        self.assertEqual(report.fn, 0)
        self.assertEqual(report.tn, 0)
        self.assertAlmostEqual(report.precision, 100.0 * report.tp / 720)
        self.assertEqual(report.source, "callable")

    def test_metrics_follow_counts(self):
        report = ConfusionReport(tp=30, fp=10, tn=50, fn=10, t=0.5, horizon=1.0, n_theta=100, threshold=0.02)
        self.assertAlmostEqual(report.accuracy, 80.0)
        self.assertAlmostEqual(report.recall, 75.0)
        self.assertAlmostEqual(report.precision, 75.0)
        self.assertAlmostEqual(report.f1, 75.0)
        empty = ConfusionReport(tp=0, fp=0, tn=5, fn=0, t=0.5, horizon=1.0, n_theta=5, threshold=0.02)
        self.assertEqual(empty.precision, 0.0)
        self.assertEqual(empty.f1, 0.0)

    def test_too_few_points(self):
        with self.assertRaises(InvalidInputError):
            classify_brs("analytic", self.spec, 0.5, n_theta=100)

    def test_unknown_source(self):
        with self.assertRaises(InvalidInputError):
            classify_brs("network", self.spec, 0.5)

    def test_calibration_on_analytic_source(self):
        delta, f1 = calibrate_threshold("analytic", self.spec, self.spec.horizon - math.pi / 8)
        self.assertEqual(delta, 0.0)
        self.assertEqual(f1, 100.0)

    def test_calibration_recovers_shift(self):
        shifted = lambda t, X: geodesic_value_batch(self.spec, t, X) + 0.05
        delta, f1 = calibrate_threshold(shifted, self.spec, self.spec.horizon - math.pi / 4)
        self.assertAlmostEqual(delta, 0.05, delta=2e-3)
        self.assertEqual(f1, 100.0)

    def test_profile_columns(self):
        profile = brs_profile("analytic", self.spec, self.spec.horizon - math.pi / 4, n_theta=360, threshold=1e-9)
        self.assertEqual(list(profile.columns), ["angle", "x1", "x2", "value", "truth", "prediction"])
        self.assertEqual(len(profile), 360)
        self.assertTrue((profile["truth"] == profile["prediction"]).all())

    def test_table_layout(self):
        reports = evaluate_slices("analytic", self.spec, show_progress=False)
        table = table_rows(reports)
        self.assertEqual(len(table), 3)
        self.assertEqual(table["time_slice"].tolist(), ["T-pi/8", "T-pi/4", "T-3pi/8"])
        for column in ("manifold", "Acc", "Rec", "Prec", "F1", "TP", "FP", "TN", "FN"):
            self.assertIn(column, table.columns)
        self.assertEqual(set(table["manifold"]), {"n/a"})

    def test_time_labels(self):
        T = self.spec.horizon
        labels = [classify_brs("analytic", self.spec, t).time_label for t in (T, 0.0, T - 0.5)]
        self.assertEqual(labels, ["T", "T-pi/2", "T-0.5000"])

    def test_standard_slices_inside_horizon(self):
        self.assertEqual(len(standard_time_slices(CircleReachSpec(horizon=0.5))), 1)


if __name__ == "__main__":
    unittest.main(verbosity=2)
