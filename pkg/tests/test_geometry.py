import math
import unittest

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from manifold_reach_package.errors import (
    ConfigError,
    InvalidInputError,
    PreconditionError,
    SingularityError,
)
from manifold_reach_package.geometry import (
    AffinePlane,
    Circle,
    Product,
    Sphere,
    ambient_bounds,
    assert_on_manifold,
    constraint_from_config,
    constraint_jacobian,
    constraint_to_config,
    evaluate_constraint,
    finite_difference_jacobian,
    geodesic_distance,
    pair_manifold,
    retract,
    sample_on_manifold,
    tangent_projection,
    tangent_projection_batch,
)


BUILT_IN = [
    Circle(radius=0.5),
    Circle(radius=1.3, center=(0.2, -0.4)),
    Sphere(radius=0.7),
    Sphere(radius=2.0, center=(1.0, 0.0, 0.0, -1.0)),
    AffinePlane(normals=[[1.0, 1.0, 0.0]], offsets=[0.5]),
    Product(blocks=[(Circle(radius=0.5), (0, 2)), (Circle(radius=0.5), (2, 4))]),
    Product(blocks=[(Sphere(radius=1.0), (1, 4))], ambient_dim=5),
]


class TestConstraintEvaluation(unittest.TestCase):
    """
    Residuals and Jacobians of the built-in constraint kinds.

    Covers the hand-checked circle values, dimension errors, the singular
    sphere/circle center and agreement between analytic and finite-difference
    Jacobians.
    """

    def setUp(self):
        self.circle = Circle(radius=0.5)

    # ----------------------------------
    # Residuals
    # ----------------------------------

    def test_circle_residual_values(self):
        self.assertAlmostEqual(evaluate_constraint(self.circle, [0.5, 0.0])[0], 0.0)
        self.assertAlmostEqual(evaluate_constraint(self.circle, [0.0, 0.0])[0], -0.5)
        self.assertAlmostEqual(evaluate_constraint(self.circle, [1.0, 0.0])[0], 0.5)

    def test_residual_length_is_n_c(self):
        for c in BUILT_IN:
            x = np.ones(c.n_d)
            self.assertEqual(evaluate_constraint(c, x).shape, (c.n_c,))

    def test_wrong_dimension_raises(self):
        with self.assertRaises(InvalidInputError):
            evaluate_constraint(self.circle, [0.5, 0.0, 0.0])
        with self.assertRaises(InvalidInputError):
            evaluate_constraint(self.circle, [np.nan, 0.0])

    # ----------------------------------
    # Jacobians
    # ----------------------------------

    def test_circle_jacobian_values(self):
        np.testing.assert_allclose(constraint_jacobian(self.circle, [0.5, 0.0]), [[1.0, 0.0]])
        np.testing.assert_allclose(constraint_jacobian(self.circle, [0.0, 0.5]), [[0.0, 1.0]], atol=1e-15)
        s = 0.5 / math.sqrt(2)
        np.testing.assert_allclose(constraint_jacobian(self.circle, [s, s]),
                                   [[1 / math.sqrt(2), 1 / math.sqrt(2)]])

    def test_jacobian_at_center_is_singular(self):
        with self.assertRaises(SingularityError):
            constraint_jacobian(self.circle, [0.0, 0.0])
        with self.assertRaises(SingularityError):
            constraint_jacobian(Sphere(radius=1.0), [0.0, 0.0, 0.0])

    def test_analytic_matches_finite_differences(self):
        for k, c in enumerate(BUILT_IN):
            seed = 10 + k
            for x in sample_on_manifold(c, 100, seed):
                J = constraint_jacobian(c, x)
                J_fd = finite_difference_jacobian(c, x)
                scale = max(1.0, np.abs(J).max())
                self.assertLessEqual(np.abs(J - J_fd).max() / scale, 1e-6, msg=f"{c.kind} seed {seed}")

    def test_product_jacobian_is_block_diagonal(self):
        c = pair_manifold(Circle(radius=0.5), Circle(radius=0.5))
        x = [0.5, 0.0, 0.0, 0.5]
        J = constraint_jacobian(c, x)
        np.testing.assert_allclose(J, [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]], atol=1e-15)


class TestTangentProjection(unittest.TestCase):
    """Projector values on the circle and algebraic invariants on every built-in kind."""

    def setUp(self):
        self.circle = Circle(radius=0.5)

    def test_circle_projection_values(self):
        np.testing.assert_allclose(tangent_projection(self.circle, [0.5, 0.0]).matrix,
                                   [[0.0, 0.0], [0.0, 1.0]], atol=1e-15)
        np.testing.assert_allclose(tangent_projection(self.circle, [0.0, 0.5]).matrix,
                                   [[1.0, 0.0], [0.0, 0.0]], atol=1e-15)
        s = 0.5 / math.sqrt(2)
        np.testing.assert_allclose(tangent_projection(self.circle, [s, s]).matrix,
                                   [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)

    def test_projection_invariants_on_all_kinds(self):
        for k, c in enumerate(BUILT_IN):
            X = sample_on_manifold(c, 1000, 100 + k)
            P, deficient = tangent_projection_batch(c, X)
            self.assertFalse(deficient.any())
            PT = np.transpose(P, (0, 2, 1))
            J = np.stack([constraint_jacobian(c, x) for x in X[:50]])
            self.assertLessEqual(np.abs(P - PT).max(), 1e-10)
            self.assertLessEqual(np.abs(P @ P - P).max(), 1e-9)
            self.assertLessEqual(np.abs(P[:50] @ np.transpose(J, (0, 2, 1))).max(), 1e-8)
            np.testing.assert_allclose(np.trace(P, axis1=1, axis2=2), c.n_d - c.n_c, atol=1e-6)

    def test_off_manifold_point_rejected(self):
        with self.assertRaises(PreconditionError) as ctx:
            tangent_projection(self.circle, [0.9, 0.0])
        self.assertIn("0.9", str(ctx.exception))

    @settings(max_examples=50, deadline=None)
    @given(
        angle=st.floats(0.0, 2 * math.pi),
        v=st.lists(st.floats(-10.0, 10.0), min_size=2, max_size=2),
    )
    def test_projected_vectors_are_tangent(self, angle, v):
        x = [0.5 * math.cos(angle), 0.5 * math.sin(angle)]
        P = tangent_projection(self.circle, x)
        Jv = constraint_jacobian(self.circle, x) @ P.apply(v)
        self.assertLessEqual(abs(Jv[0]), 1e-8 * max(1.0, float(np.linalg.norm(v))))

    def test_rank_deficient_plane_is_flagged(self):
        plane = AffinePlane(normals=[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], offsets=[0.0, 0.0])
        P = tangent_projection(plane, [0.0, 0.3, 0.4])
        self.assertTrue(P.rank_deficient)
        self.assertLessEqual(np.abs(P.matrix - P.matrix.T).max(), 1e-10)


class TestRetraction(unittest.TestCase):
    """Gauss-Newton retraction: circle cases, idempotence and basin handling."""

    def setUp(self):
        self.circle = Circle(radius=0.5)

    def test_circle_cases(self):
        np.testing.assert_allclose(retract(self.circle, [0.6, 0.0]), [0.5, 0.0], atol=1e-10)
        np.testing.assert_allclose(retract(self.circle, [0.5, 0.0]), [0.5, 0.0])
        s = 0.5 / math.sqrt(2)
        y = retract(self.circle, [0.3, 0.3])
        np.testing.assert_allclose(y, [s, s], atol=1e-10)
        self.assertLessEqual(abs(evaluate_constraint(self.circle, y)[0]), 1e-10)

    @settings(max_examples=50, deadline=None)
    @given(
        x=st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
    )
    def test_retract_is_idempotent(self, x):
        sphere = Sphere(radius=0.8)
        assume(abs(np.linalg.norm(x) - 0.8) <= 0.25)
        once = retract(sphere, x)
        twice = retract(sphere, once)
        self.assertLessEqual(np.abs(once - twice).max(), 1e-9)

    def test_outside_basin(self):
        with self.assertRaises(PreconditionError):
            retract(self.circle, [2.0, 0.0])
        np.testing.assert_allclose(retract(self.circle, [2.0, 0.0], basin=None), [0.5, 0.0], atol=1e-10)

    def test_affine_plane_is_one_step(self):
        plane = AffinePlane(normals=[[0.0, 0.0, 1.0]], offsets=[1.0])
        np.testing.assert_allclose(retract(plane, [0.3, -0.2, 1.1]), [0.3, -0.2, 1.0], atol=1e-12)


class TestSampling(unittest.TestCase):
    """On-manifold sampling: invariants, determinism and circle uniformity."""

    def test_circle_points_on_manifold(self):
        X = sample_on_manifold(Circle(radius=0.5), 4, 0)
        self.assertEqual(X.shape, (4, 2))
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 0.5, atol=1e-8)

    def test_circle_angular_histogram(self):
        X = sample_on_manifold(Circle(radius=0.5), 10_000, 1)
        angles = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2 * math.pi)
        counts, _ = np.histogram(angles, bins=8, range=(0.0, 2 * math.pi))
        sigma = math.sqrt(10_000 * (1 / 8) * (7 / 8))
        self.assertTrue(np.all(np.abs(counts - 1250) <= 5 * sigma), msg=str(counts))

    def test_product_blocks_on_their_circles(self):
        c = pair_manifold(Circle(radius=0.5), Circle(radius=0.5))
        X = sample_on_manifold(c, 3, 2)
        self.assertEqual(X.shape, (3, 4))
        np.testing.assert_allclose(np.linalg.norm(X[:, :2], axis=1), 0.5, atol=1e-8)
        np.testing.assert_allclose(np.linalg.norm(X[:, 2:], axis=1), 0.5, atol=1e-8)

    def test_general_kind_is_retracted(self):
        plane = AffinePlane(normals=[[1.0, 1.0, 1.0]], offsets=[0.5])
        X = sample_on_manifold(plane, 20, 3)
        assert_on_manifold(plane, X, 1e-8)

    def test_same_seed_same_points(self):
        c = Sphere(radius=1.0)
        np.testing.assert_array_equal(sample_on_manifold(c, 10, 7), sample_on_manifold(c, 10, 7))
        self.assertFalse(np.array_equal(sample_on_manifold(c, 10, 7), sample_on_manifold(c, 10, 8)))

    def test_count_must_be_positive(self):
        with self.assertRaises(InvalidInputError):
            sample_on_manifold(Circle(radius=0.5), 0, 0)


class TestDistancesAndConfig(unittest.TestCase):
    """Geodesic distances, ambient bounds and the config round trip."""

    def test_circle_geodesic(self):
        c = Circle(radius=0.5)
        self.assertAlmostEqual(geodesic_distance(c, [0.5, 0.0], [-0.5, 0.0]), 0.5 * math.pi)
        self.assertAlmostEqual(geodesic_distance(c, [0.5, 0.0], [0.0, 0.5]), 0.25 * math.pi)
        self.assertEqual(geodesic_distance(c, [0.5, 0.0], [0.5, 0.0]), 0.0)

    def test_product_geodesic_is_root_sum_square(self):
        c = pair_manifold(Circle(radius=0.5), Circle(radius=0.5))
        d = geodesic_distance(c, [0.5, 0.0, 0.5, 0.0], [0.0, 0.5, -0.5, 0.0])
        self.assertAlmostEqual(d, math.hypot(0.25 * math.pi, 0.5 * math.pi))

    def test_ambient_bounds(self):
        low, high = ambient_bounds(Circle(radius=0.5, center=(1.0, 2.0)))
        np.testing.assert_allclose(low, [0.5, 1.5])
        np.testing.assert_allclose(high, [1.5, 2.5])

    def test_config_round_trip(self):
        for c in BUILT_IN:
            rebuilt = constraint_from_config(constraint_to_config(c))
            x = sample_on_manifold(c, 1, 0)[0]
            np.testing.assert_allclose(evaluate_constraint(rebuilt, x), evaluate_constraint(c, x))

    def test_config_errors_name_the_field(self):
        with self.assertRaises(ConfigError) as ctx:
            constraint_from_config({"kind": "circle", "radius": 0.5, "colour": "red"}, "problem.constraint")
        self.assertEqual(ctx.exception.field, "problem.constraint.colour")
        with self.assertRaises(ConfigError):
            constraint_from_config({"kind": "torus"})
        with self.assertRaises(ConfigError):
            constraint_from_config({"kind": "circle", "radius": -1.0})

    def test_invalid_product(self):
        with self.assertRaises(ValueError):
            Product(blocks=[(Circle(radius=0.5), (0, 2)), (Circle(radius=0.5), (1, 3))])


if __name__ == "__main__":
    unittest.main(verbosity=2)
