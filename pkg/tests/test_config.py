# Filename: tests/test_config.py
# How to run:
#   python -m unittest -v tests/test_config.py

import os
import tempfile
import unittest

import simplejson

from manifold_reach_package import __version__
from manifold_reach_package.config import (
    CONFIG_VERSION,
    build_manifest,
    load_config,
    parse_config,
    write_manifest,
)
from manifold_reach_package.errors import ConfigError
from manifold_reach_package.trainer import default_architecture


class TestParseConfig(unittest.TestCase):
    """Section building and field-named validation errors."""

    def assert_field(self, data, field):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.field, field)

    def test_empty_config_uses_defaults(self):
        config = parse_config({})
        self.assertIsNone(config.problem)
        self.assertEqual(config.training.steps, 50_000)
        self.assertEqual(config.evaluation.n_theta, 720)
        self.assertEqual(config.planning.t_plan, 0.3)
        self.assertEqual(config.benchmark.methods, ("hjr", "no_safety"))
        self.assertEqual(config.output.directory, "runs/latest")

    def test_sections_are_applied(self):
        config = parse_config({
            "version": 1,
            "problem": {"preset": "circle_avoid", "agent_radius": 0.1},
            "architecture": {"hidden_layers": 2, "hidden_width": 32},
            "training": {"steps": 10, "seed": 4},
            "planning": {"epsilon": 0.1, "stage_cost": "geodesic"},
            "scenario": {"n_agents": 3},
            "benchmark": {"n_trials": 5, "seed": 1, "methods": ["hjr", "constant_velocity"]},
        })
        self.assertTrue(config.problem.is_game)
        self.assertEqual(config.problem.terminal.agent_radius, 0.1)
        self.assertEqual(config.architecture["hidden_width"], 32)
        self.assertEqual(config.training.steps, 10)
        self.assertEqual(config.planning.stage_cost, "geodesic")
        self.assertEqual(config.scenario.n_agents, 3)
        self.assertEqual(config.benchmark.methods, ("hjr", "constant_velocity"))

    def test_exact_terminal_flag(self):
        config = parse_config({"problem": {"preset": "circle_reach"}, "architecture": {"exact_terminal": True}})
        arch = default_architecture(config.problem, **config.architecture)
        self.assertTrue(arch.exact_terminal)
        self.assertEqual(arch.terminal, config.problem.terminal.to_dict())

    def test_full_problem_form(self):
        config = parse_config({"problem": parse_config({"problem": {"preset": "circle_reach"}}).problem.to_dict()})
        self.assertFalse(config.problem.is_game)

    def test_seed_override(self):
        config = parse_config({"training": {"seed": 1}}).with_seed(9)
        self.assertEqual(config.training.seed, 9)
        self.assertEqual(config.benchmark.seed, 9)
        self.assertIs(config.with_seed(None), config)

    # ----------------------------------
    # Errors
    # ----------------------------------

    def test_invalid_values_name_field(self):
        self.assert_field({"training": {"lambda_max": -1.0}}, "training.lambda_max")
        self.assert_field({"planning": {"epsilon": -0.5}}, "planning.epsilon")
        self.assert_field({"evaluation": {"n_theta": 100}}, "evaluation.n_theta")
        self.assert_field({"scenario": {"swap_probability": 2.0}}, "scenario.swap_probability")

    def test_unknown_keys(self):
        self.assert_field({"trainer": {}}, "trainer")
        self.assert_field({"training": {"epochs": 3}}, "training.epochs")
        self.assert_field({"architecture": {"depth": 3}}, "architecture.depth")
        self.assert_field({"problem": {"preset": "torus"}}, "problem.preset")
        self.assert_field({"problem": {"preset": "circle_reach", "mass": 1.0}}, "problem.mass")

    def test_version_and_shape(self):
        self.assert_field({"version": 2}, "version")
        self.assert_field({"planning": [1, 2]}, "planning")
        with self.assertRaises(ConfigError):
            parse_config([1, 2])

    def test_unknown_method(self):
        self.assert_field({"benchmark": {"methods": ["laser"]}}, "benchmark")

    def test_explicit_agents(self):
        config = parse_config({"scenario": {"agents": [
            {"start": [0.5, 0.0], "goal": [0.0, 0.5], "controller": "scripted"},
        ]}})
        specs = config.scenario.agent_specs()
        self.assertEqual(len(specs), 1)
        self.assertEqual(specs[0].controller.value, "scripted")
        bad = parse_config({"scenario": {"agents": [{"start": [0.5, 0.0]}]}})
        with self.assertRaises(ConfigError) as ctx:
            bad.scenario.agent_specs()
        self.assertEqual(ctx.exception.field, "scenario.agents[0].goal")


class TestConfigFiles(unittest.TestCase):
    """Reading config files and writing manifests."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text):
        path = os.path.join(self.tmp.name, "run.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path

    def test_load(self):
        path = self.write(simplejson.dumps({"version": 1, "training": {"steps": 7}}))
        config = load_config(path)
        self.assertEqual(config.training.steps, 7)
        self.assertEqual(config.source, os.path.abspath(path))

    def test_decode_error_reports_line(self):
        path = self.write('{\n  "version": 1,\n  oops\n}\n')
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.tmp.name, "absent.json"))

    def test_round_trip_through_to_dict(self):
        original = parse_config({"problem": {"preset": "circle_avoid"}, "planning": {"epsilon": 0.2}})
        restored = parse_config(simplejson.loads(simplejson.dumps(original.to_dict())))
        self.assertEqual(restored.to_dict(), original.to_dict())

    def test_manifest(self):
        config = parse_config({"training": {"seed": 3}})
        manifest = build_manifest("train", config, {"training": 3}, extra={"note": "x"})
        self.assertEqual(manifest["command"], "train")
        self.assertEqual(manifest["package_version"], __version__)
        self.assertEqual(manifest["config"]["version"], CONFIG_VERSION)
        self.assertEqual(manifest["seeds"], {"training": 3})
        path = write_manifest(self.tmp.name, manifest)
        with open(path, encoding="utf-8") as fh:
            self.assertEqual(simplejson.load(fh), manifest)


if __name__ == "__main__":
    unittest.main(verbosity=2)
