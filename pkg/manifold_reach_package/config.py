# -*- coding: utf-8 -*-
"""
Run configuration files for the command-line interface.

A run config is a JSON object with ``"version": 1`` and optional sections:

  problem       {"preset": "circle_reach" | "circle_avoid", ...overrides}
                or the full problem form (mode, constraint, bounds, ...)
  architecture  hidden_layers, hidden_width, first_omega, hidden_omega,
                exact_terminal (off by default)
  training      TrainConfig fields
  evaluation    n_theta, threshold, time_slices, grid_n_theta, calibrate
  planning      PlanConfig fields
  scenario      n_agents, agent_radius, dt, max_steps, min_goal_distance,
                clearance, swap_probability, agents (explicit list)
  benchmark     n_trials, seed, methods, n_workers, write_logs
  output        directory
  model         path of a trained model file

Unknown keys raise ConfigError naming ``section.key``; so do invalid values.
Decode errors report the line and column of the offending text.

Public API:
  - RunConfig, EvalConfig, ScenarioConfig, BenchmarkConfig
  - load_config(path) / parse_config(data)
  - build_manifest(command, config, seeds, extra=None)

"""

from __future__ import annotations

import inspect
import math
import os
from typing import Dict, List, Optional, Tuple

import attrs
import simplejson
from attrs import field, frozen

from manifold_reach_package import __version__
from manifold_reach_package.errors import ConfigError
from manifold_reach_package.planner import PlanConfig
from manifold_reach_package.problem import (
    ReachabilityProblem,
    circle_avoid_game,
    circle_reach_problem,
    problem_from_dict,
)
from manifold_reach_package.simulator import AgentSpec, ControllerKind
from manifold_reach_package.trainer import TrainConfig


CONFIG_VERSION = 1
TOP_LEVEL_KEYS = {
    "version", "problem", "architecture", "training", "evaluation",
    "planning", "scenario", "benchmark", "output", "model",
}
ARCHITECTURE_KEYS = {"hidden_layers", "hidden_width", "first_omega", "hidden_omega", "exact_terminal"}
PRESETS = {
    "circle_reach": circle_reach_problem,
    "circle_avoid": circle_avoid_game,
}


# ---------------------------------------------------------------------------
# Section records
# ---------------------------------------------------------------------------

def _positive(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be > 0, got {value!r}")


@frozen
class EvalConfig:
    """BRS evaluation settings (``time_slices`` None selects T - pi/8, T - pi/4, T - 3 pi/8)."""

    n_theta: int = field(default=720, converter=int)
    threshold: float = field(default=0.02, converter=float)
    time_slices: Optional[Tuple[float, ...]] = field(
        default=None, converter=lambda v: None if v is None else tuple(float(t) for t in v)
    )
    grid_n_theta: int = field(default=512, converter=int)
    calibrate: bool = False

    @n_theta.validator
    def _check_n_theta(self, attribute, value) -> None:
        if value < 360:
            raise ValueError(f"n_theta must be >= 360, got {value!r}")


@frozen
class ScenarioConfig:
    n_agents: int = field(default=2, converter=int)
    agent_radius: float = field(default=0.05, converter=float, validator=_positive)
    dt: float = field(default=0.05, converter=float, validator=_positive)
    max_steps: int = field(default=200, converter=int)
    min_goal_distance: float = field(default=0.5, converter=float)
    clearance: float = field(default=2.0, converter=float, validator=_positive)
    swap_probability: float = field(default=0.5, converter=float)
    agents: Optional[Tuple[Dict, ...]] = field(
        default=None, converter=lambda v: None if v is None else tuple(v)
    )

    @n_agents.validator
    def _check_agents(self, attribute, value) -> None:
        if value < 1:
            raise ValueError(f"n_agents must be >= 1, got {value!r}")

    @swap_probability.validator
    def _check_swap(self, attribute, value) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"swap_probability must lie in [0, 1], got {value!r}")

    def generator_kwargs(self) -> Dict:
        return {
            "min_goal_distance": self.min_goal_distance,
            "clearance": self.clearance,
            "swap_probability": self.swap_probability,
        }

    def agent_specs(self, default_controller: ControllerKind = ControllerKind.HJR) -> Optional[List[AgentSpec]]:
        if self.agents is None:
            return None
        specs = []
        for i, entry in enumerate(self.agents):
            unknown = sorted(set(entry) - {"start", "goal", "radius", "controller", "velocity", "script"})
            if unknown:
                raise ConfigError(f"unknown key(s) in scenario.agents[{i}]: {unknown}",
                                  field=f"scenario.agents[{i}].{unknown[0]}")
            try:
                specs.append(AgentSpec(
                    start=entry["start"],
                    goal=entry["goal"],
                    radius=entry.get("radius", self.agent_radius),
                    controller=entry.get("controller", default_controller),
                    velocity=entry.get("velocity"),
                    script=entry.get("script"),
                ))
            except KeyError as e:
                raise ConfigError(f"scenario.agents[{i}] is missing key {e}",
                                  field=f"scenario.agents[{i}].{e.args[0]}") from e
            except ValueError as e:
                raise ConfigError(f"scenario.agents[{i}]: {e}", field=f"scenario.agents[{i}]") from e
        return specs


@frozen
class BenchmarkConfig:
    n_trials: int = field(default=100, converter=int)
    seed: Optional[int] = field(default=None, converter=lambda v: None if v is None else int(v))
    methods: Tuple[str, ...] = field(default=("hjr", "no_safety"), converter=tuple)
    n_workers: int = field(default=1, converter=int)
    write_logs: bool = True

    @n_trials.validator
    def _check_trials(self, attribute, value) -> None:
        if value < 1:
            raise ValueError(f"n_trials must be >= 1, got {value!r}")

    @methods.validator
    def _check_methods(self, attribute, value) -> None:
        for m in value:
            ControllerKind(m)


@frozen
class OutputConfig:
    directory: str = "runs/latest"


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------

def _validate_section(data, section: str) -> Dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be an object", field=section)
    return data


def _build_record(cls, data, section: str):
    """Instantiate an attrs record from a section, naming the offending field on errors."""
    data = _validate_section(data, section)
    names = {a.name for a in attrs.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {unknown}", field=f"{section}.{unknown[0]}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        first = str(e).split(" ", 1)[0]
        name = first if first in names else None
        raise ConfigError(
            f"{section}.{name}: {e}" if name else f"{section}: {e}",
            field=f"{section}.{name}" if name else section,
        ) from e


def _build_problem(data) -> Optional[ReachabilityProblem]:
    data = _validate_section(data, "problem")
    if not data:
        return None
    if "preset" not in data:
        return problem_from_dict(data, "problem")
    preset = data["preset"]
    if preset not in PRESETS:
        raise ConfigError(f"problem.preset must be one of {sorted(PRESETS)}, got {preset!r}",
                          field="problem.preset")
    builder = PRESETS[preset]
    overrides = {k: v for k, v in data.items() if k != "preset"}
    allowed = set(inspect.signature(builder).parameters)
    unknown = sorted(set(overrides) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in problem: {unknown}", field=f"problem.{unknown[0]}")
    try:
        return builder(**overrides)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"problem: {e}", field="problem") from e


def _build_architecture(data) -> Dict:
    data = _validate_section(data, "architecture")
    unknown = sorted(set(data) - ARCHITECTURE_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) in architecture: {unknown}", field=f"architecture.{unknown[0]}")
    return dict(data)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

@frozen(eq=False)
class RunConfig:
    """Fully resolved run configuration."""

    problem: Optional[ReachabilityProblem] = None
    architecture: Dict = field(factory=dict)
    training: TrainConfig = field(factory=TrainConfig)
    evaluation: EvalConfig = field(factory=EvalConfig)
    planning: PlanConfig = field(factory=PlanConfig)
    scenario: ScenarioConfig = field(factory=ScenarioConfig)
    benchmark: BenchmarkConfig = field(factory=BenchmarkConfig)
    output: OutputConfig = field(factory=OutputConfig)
    model: Optional[str] = None
    source: Optional[str] = None

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        """Override the training and benchmark seeds (CLI ``--seed``)."""
        if seed is None:
            return self
        return attrs.evolve(
            self,
            training=attrs.evolve(self.training, seed=seed),
            benchmark=attrs.evolve(self.benchmark, seed=seed),
        )

    def to_dict(self) -> Dict:
        return {
            "version": CONFIG_VERSION,
            "problem": self.problem.to_dict() if self.problem is not None else None,
            "architecture": dict(self.architecture),
            "training": self.training.to_dict(),
            "evaluation": attrs.asdict(self.evaluation),
            "planning": self.planning.to_dict(),
            "scenario": attrs.asdict(self.scenario),
            "benchmark": attrs.asdict(self.benchmark),
            "output": attrs.asdict(self.output),
            "model": self.model,
        }


def parse_config(data: Dict, source: Optional[str] = None) -> RunConfig:
    """
    Validate a decoded config object and build every section.

    Raises
    ------
    ConfigError
        Unknown section or key, unsupported version, or invalid value.
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {unknown}", field=unknown[0])
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})", field="version")
    return RunConfig(
        problem=_build_problem(data.get("problem")),
        architecture=_build_architecture(data.get("architecture")),
        training=_build_record(TrainConfig, data.get("training"), "training"),
        evaluation=_build_record(EvalConfig, data.get("evaluation"), "evaluation"),
        planning=_build_record(PlanConfig, data.get("planning"), "planning"),
        scenario=_build_record(ScenarioConfig, data.get("scenario"), "scenario"),
        benchmark=_build_record(BenchmarkConfig, data.get("benchmark"), "benchmark"),
        output=_build_record(OutputConfig, data.get("output"), "output"),
        model=data.get("model"),
        source=source,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON run config.

    Raises
    ------
    ConfigError
        Unreadable file or decode error (with line and column), or any
        validation error from :func:`parse_config`.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = simplejson.loads(text)
    except simplejson.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}", line=e.lineno) from e
    return parse_config(data, source=os.path.abspath(path))


def build_manifest(command: str, config: RunConfig, seeds: Dict[str, Optional[int]],
                   extra: Optional[Dict] = None) -> Dict:
    """Machine-readable record that reproduces a run."""
    manifest = {
        "command": command,
        "package_version": __version__,
        "config": config.to_dict(),
        "seeds": dict(seeds),
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(out_dir: str, manifest: Dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        simplejson.dump(manifest, fh, sort_keys=True, indent=2)
    return path
