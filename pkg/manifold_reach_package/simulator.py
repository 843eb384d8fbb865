# -*- coding: utf-8 -*-
"""
Closed-loop multi-agent simulation of velocity-controlled particles on manifolds.

Agents step in lockstep: every agent observes the current states of all
others, computes its control (planner or scripted policy), applies it for one
``dt`` and is retracted onto its manifold. A trial ends when every agent is
within tolerance of its goal, when two agents collide, or at the step cap.
Agents that reached their goal hold position and remain obstacles.

Benchmarks run the same randomized scenarios for each compared controller
(paired seeds) and aggregate success rate, collision rate, planning time and
path length.

Public API:
  - ControllerKind, AgentSpec, Scenario, TrialRecord, BenchmarkReport
  - detect_collision(states, radii, previous_states=None)
  - run_trial(scenario, net=None, planners=None, log_path=None) -> TrialRecord
  - generate_scenario(base, rng, ...) -> Scenario
  - template_scenario(problem, n_agents, ...) -> Scenario
  - run_benchmark(base_scenario, n_trials, seed, net=None, ...) -> BenchmarkReport

"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import simplejson
from attrs import evolve, field, frozen
from tqdm import tqdm

from manifold_reach_package.errors import InvalidInputError, ManifoldReachError, SamplingError
from manifold_reach_package.geometry import (
    ManifoldConstraint,
    assert_on_manifold,
    evaluate_constraint,
    geodesic_distance,
    retract,
    sample_on_manifold,
    tangent_projection,
)
from manifold_reach_package.planner import PlanConfig, PlanStatus, plan_step, shift_plan
from manifold_reach_package.problem import ReachabilityProblem


ON_MANIFOLD_TOLERANCE = 1e-6
SUMMARY_COLUMNS = ["Method", "SR%", "CR%", "Time mean", "Time std", "PL mean", "PL std"]
FAILURE_REASONS = ("none", "collision", "timeout", "planner_error")


class ControllerKind(str, Enum):
    HJR = "hjr"
    NO_SAFETY = "no_safety"
    CONSTANT_VELOCITY = "constant_velocity"
    SCRIPTED = "scripted"

    @property
    def label(self) -> str:
        return {
            "hjr": "HJR",
            "no_safety": "NoSafety",
            "constant_velocity": "ConstantVelocity",
            "scripted": "Scripted",
        }[self.value]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def _vector(values) -> np.ndarray:
    return np.asarray(values, dtype=float).ravel()


def _optional_matrix(values) -> Optional[np.ndarray]:
    return None if values is None else np.atleast_2d(np.asarray(values, dtype=float))


@frozen(eq=False)
class AgentSpec:
    """One agent: start, goal, disc radius and controller.

    ``velocity`` is the ambient velocity of a constant-velocity agent (default:
    full speed toward the goal along the manifold at the start state);
    ``script`` holds per-step controls of a scripted agent (zero once exhausted).
    """

    start: np.ndarray = field(converter=_vector)
    goal: np.ndarray = field(converter=_vector)
    radius: float = field(default=0.05, converter=float)
    controller: ControllerKind = field(default=ControllerKind.HJR, converter=ControllerKind)
    velocity: Optional[np.ndarray] = field(default=None, converter=lambda v: None if v is None else _vector(v))
    script: Optional[np.ndarray] = field(default=None, converter=_optional_matrix)
    constraint: Optional[ManifoldConstraint] = None

    @radius.validator
    def _check_radius(self, attribute, value) -> None:
        if not value > 0:
            raise ValueError(f"radius must be > 0, got {value!r}")

    def to_dict(self) -> Dict:
        return {
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "radius": self.radius,
            "controller": self.controller.value,
            "velocity": None if self.velocity is None else self.velocity.tolist(),
            "script": None if self.script is None else self.script.tolist(),
        }


@frozen(eq=False)
class Scenario:
    """
    Multi-agent trial setup.

    Attributes
    ----------
    agents : tuple of AgentSpec
    problem : ReachabilityProblem
        Pairwise game of the safety model; supplies the shared manifold and bounds.
    dt : float, default 0.05
    max_steps : int, default 200
    seed : int, default 0
    plan : PlanConfig
    """

    agents: Tuple[AgentSpec, ...] = field(converter=tuple)
    problem: ReachabilityProblem
    dt: float = field(default=0.05, converter=float)
    max_steps: int = field(default=200, converter=int)
    seed: int = field(default=0, converter=int)
    plan: PlanConfig = field(factory=PlanConfig)

    def __attrs_post_init__(self) -> None:
        if len(self.agents) < 1:
            raise ValueError("a scenario needs at least one agent")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        for i, agent in enumerate(self.agents):
            c = self.constraint_of(i)
            assert_on_manifold(c, agent.start, ON_MANIFOLD_TOLERANCE, f"agent {i} start")
            assert_on_manifold(c, agent.goal, ON_MANIFOLD_TOLERANCE, f"agent {i} goal")
        starts = [a.start for a in self.agents]
        radii = [a.radius for a in self.agents]
        hit = detect_collision(starts, radii)
        if hit is not None:
            raise ValueError(f"agents {hit[0]} collide at their start states (distance {hit[1]:.4f})")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def constraint_of(self, i: int) -> ManifoldConstraint:
        return self.agents[i].constraint or self.problem.constraint

    def with_controller(self, kind: ControllerKind) -> "Scenario":
        return evolve(self, agents=tuple(evolve(a, controller=kind) for a in self.agents))

    def to_dict(self) -> Dict:
        return {
            "agents": [a.to_dict() for a in self.agents],
            "dt": self.dt,
            "max_steps": self.max_steps,
            "seed": self.seed,
            "plan": self.plan.to_dict(),
        }


@frozen
class TrialRecord:
    """Outcome of one closed-loop trial.

    ``failure_reason`` is one of none, collision, timeout, planner_error;
    ``success`` holds exactly when it is none.
    """

    trial_index: int
    method: str
    success: bool
    collision: bool
    failure_reason: str
    steps: int
    path_lengths: Tuple[float, ...]
    final_goal_distances: Tuple[float, ...]
    start_goal_distances: Tuple[float, ...]
    mean_plan_time: float
    max_plan_time: float
    max_constraint_violation: float
    failsafe_steps: int = 0
    collision_pair: Optional[Tuple[int, int]] = None
    log_path: Optional[str] = None

    @property
    def mean_path_length(self) -> float:
        return float(np.mean(self.path_lengths))

    def to_dict(self) -> Dict:
        return {
            "trial": self.trial_index,
            "method": self.method,
            "success": self.success,
            "collision": self.collision,
            "failure_reason": self.failure_reason,
            "steps": self.steps,
            "path_length": self.mean_path_length,
            "mean_plan_time": self.mean_plan_time,
            "max_plan_time": self.max_plan_time,
            "max_constraint_violation": self.max_constraint_violation,
            "failsafe_steps": self.failsafe_steps,
        }


@frozen(eq=False)
class BenchmarkReport:
    """Summary table (one row per method) and the per-trial frame."""

    summary: pd.DataFrame
    trials: pd.DataFrame

    def to_csv(self, path: str) -> None:
        self.summary.to_csv(path, index=False, float_format="%.6g")


# ---------------------------------------------------------------------------
# Collision detection
# ---------------------------------------------------------------------------

def _first_overlap(points: np.ndarray, radii: np.ndarray) -> Optional[Tuple[Tuple[int, int], float]]:
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.linalg.norm(points[i] - points[j]))
            if d < radii[i] + radii[j]:
                return (i, j), d
    return None


def detect_collision(
    states: Sequence,
    radii: Sequence[float],
    previous_states: Optional[Sequence] = None,
) -> Optional[Tuple[Tuple[int, int], float]]:
    """
    First pair of discs closer than the sum of their radii.

    Parameters
    ----------
    states : sequence of array-like
        Agent positions.
    radii : sequence of float
    previous_states : sequence of array-like, optional
        Positions one step earlier; the midpoints of each step are checked too.

    Returns
    -------
    ((i, j), distance) or None
        Contact at exactly r_i + r_j does not count.

    Examples
    --------
    >>> detect_collision([[0.0, 0.0], [0.1, 0.0]], [0.05, 0.05]) is None
    True
    """
    points = np.asarray([np.asarray(s, dtype=float).ravel() for s in states])
    r = np.asarray(radii, dtype=float)
    if len(points) != len(r):
        raise InvalidInputError(f"{len(points)} states but {len(r)} radii")
    hit = _first_overlap(points, r)
    if hit is not None or previous_states is None:
        return hit
    previous = np.asarray([np.asarray(s, dtype=float).ravel() for s in previous_states])
    if previous.shape != points.shape:
        raise InvalidInputError("previous_states must match states")
    return _first_overlap(0.5 * (previous + points), r)


# ---------------------------------------------------------------------------
# Controllers
# ---------------------------------------------------------------------------

def _clip(u: np.ndarray, u_max: float) -> np.ndarray:
    norm = float(np.linalg.norm(u))
    return u if norm <= u_max else u * (u_max / norm)


def _constant_velocity_control(agent: AgentSpec, x: np.ndarray, c: ManifoldConstraint,
                               u_max: float) -> np.ndarray:
    """Hold the commanded speed along the tangent projection of the fixed heading."""
    v = agent.velocity
    if v is None:
        P = tangent_projection(c, agent.start).matrix
        v = P @ (agent.goal - agent.start)
        norm = float(np.linalg.norm(v))
        v = np.zeros_like(v) if norm < 1e-12 else v * (u_max / norm)
    u = tangent_projection(c, x).matrix @ v
    norm = float(np.linalg.norm(u))
    if norm < 1e-12:
        return np.zeros_like(u)
    return _clip(u * (float(np.linalg.norm(v)) / norm), u_max)


def _scripted_control(agent: AgentSpec, step: int, n: int, u_max: float) -> np.ndarray:
    if agent.script is None or step >= len(agent.script):
        return np.zeros(n)
    return _clip(agent.script[step], u_max)


def _min_pairwise_value(states: np.ndarray, problem: ReachabilityProblem, net, plan: PlanConfig) -> Optional[float]:
    if net is None or len(states) < 2:
        return None
    pairs = [np.concatenate([states[i], states[j]]) for i in range(len(states)) for j in range(len(states)) if i != j]
    return float(np.min(net.value(problem.horizon - plan.t_safe, np.asarray(pairs))))


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def run_trial(
    scenario: Scenario,
    net=None,
    planners: Optional[Sequence[ControllerKind]] = None,
    log_path: Optional[str] = None,
    trial_index: int = 0,
) -> TrialRecord:
    """
    Simulate one scenario in lockstep until success, collision or the step cap.

    Parameters
    ----------
    scenario : Scenario
    net : safety value model, optional
        Required by HJR agents when other agents are present.
    planners : sequence of ControllerKind, optional
        Per-agent override of the scenario controllers.
    log_path : str, optional
        JSON-lines step log (t, states, controls, plan statuses, per-agent plan
        results with margins and wall time, min pairwise value).
    trial_index : int, default 0

    Returns
    -------
    TrialRecord
        Planner exceptions end the trial with failure_reason "planner_error";
        collision is reported only when the geometry says so.
    """
    n_agents = scenario.n_agents
    kinds = [ControllerKind(k) for k in planners] if planners is not None else [a.controller for a in scenario.agents]
    if len(kinds) != n_agents:
        raise InvalidInputError(f"{len(kinds)} planners for {n_agents} agents")
    method = kinds[0].label if len(set(kinds)) == 1 else "Mixed"
    u_max = scenario.problem.bounds.u_max
    tol = scenario.plan.goal_tolerance
    radii = [a.radius for a in scenario.agents]
    problems = [
        scenario.problem if a.constraint is None else evolve(scenario.problem, constraint=a.constraint)
        for a in scenario.agents
    ]

    states = np.asarray([a.start for a in scenario.agents], dtype=float)
    goals = np.asarray([a.goal for a in scenario.agents], dtype=float)
    warm: List[Optional[np.ndarray]] = [None] * n_agents
    path = np.zeros(n_agents)
    plan_times: List[float] = []
    failsafe_steps = 0
    max_violation = 0.0
    failure = "timeout"
    collision_pair = None
    steps = 0

    def reached(x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x - goals, axis=1) <= tol

    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(scenario.max_steps):
            at_goal = reached(states)
            if at_goal.all():
                failure = "none"
                break

            controls = np.zeros_like(states)
            statuses: List[Optional[str]] = [None] * n_agents
            plans: List[Optional[Dict]] = [None] * n_agents
            try:
                for i, agent in enumerate(scenario.agents):
                    if at_goal[i]:
                        continue
                    c = scenario.constraint_of(i)
                    if kinds[i] in (ControllerKind.HJR, ControllerKind.NO_SAFETY):
                        config = evolve(scenario.plan, enforce_safety=kinds[i] is ControllerKind.HJR)
                        others = np.delete(states, i, axis=0)
                        result = plan_step(states[i], others, goals[i], problems[i], net, config, warm[i])
                        controls[i] = _clip(result.first_control, u_max)
                        warm[i] = shift_plan(result.controls)
                        plan_times.append(result.wall_time)
                        statuses[i] = result.status.value
                        plans[i] = result.to_log()
                        if result.status is PlanStatus.FAILSAFE:
                            failsafe_steps += 1
                    elif kinds[i] is ControllerKind.CONSTANT_VELOCITY:
                        controls[i] = _constant_velocity_control(agent, states[i], c, u_max)
                    else:
                        controls[i] = _scripted_control(agent, step, states.shape[1], u_max)
            except (ManifoldReachError, ArithmeticError, np.linalg.LinAlgError) as e:
                logging.warning(f"trial {trial_index}: planner error at step {step}: {e}")
                failure = "planner_error"
                break

            previous = states.copy()
            for i in range(n_agents):
                c = scenario.constraint_of(i)
                states[i] = retract(c, previous[i] + controls[i] * scenario.dt)
                path[i] += geodesic_distance(c, previous[i], states[i])
                max_violation = max(max_violation, float(np.linalg.norm(evaluate_constraint(c, states[i]))))
            steps = step + 1

            if log_fh is not None:
                log_fh.write(simplejson.dumps({
                    "t": steps * scenario.dt,
                    "states": states.tolist(),
                    "controls": controls.tolist(),
                    "status": statuses,
                    "plans": plans,
                    "min_pairwise_value": _min_pairwise_value(states, scenario.problem, net, scenario.plan),
                }) + "\n")

            hit = detect_collision(states, radii, previous_states=previous)
            if hit is not None:
                failure = "collision"
                collision_pair = hit[0]
                break
        else:
            if reached(states).all():
                failure = "none"
    finally:
        if log_fh is not None:
            log_fh.close()

    final_dist = tuple(
        geodesic_distance(scenario.constraint_of(i), states[i], goals[i]) for i in range(n_agents)
    )
    start_dist = tuple(
        geodesic_distance(scenario.constraint_of(i), scenario.agents[i].start, goals[i]) for i in range(n_agents)
    )
    return TrialRecord(
        trial_index=trial_index,
        method=method,
        success=failure == "none",
        collision=failure == "collision",
        failure_reason=failure,
        steps=steps,
        path_lengths=tuple(float(p) for p in path),
        final_goal_distances=final_dist,
        start_goal_distances=start_dist,
        mean_plan_time=float(np.mean(plan_times)) if plan_times else 0.0,
        max_plan_time=float(np.max(plan_times)) if plan_times else 0.0,
        max_constraint_violation=max_violation,
        failsafe_steps=failsafe_steps,
        collision_pair=collision_pair,
        log_path=log_path,
    )


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------

def _clear(points: List[np.ndarray], candidate: np.ndarray, radii: List[float], radius: float,
           clearance: float) -> bool:
    return all(np.linalg.norm(candidate - p) >= clearance * (r + radius) for p, r in zip(points, radii))


def _random_placements(
    constraints: Sequence[ManifoldConstraint],
    radii: Sequence[float],
    rng: np.random.Generator,
    min_goal_distance: float = 0.5,
    clearance: float = 2.0,
    swap_probability: float = 0.5,
    max_attempts: int = 1000,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    starts: List[np.ndarray] = []
    goals: List[np.ndarray] = []
    placed: List[float] = []
    swap = len(constraints) >= 2 and rng.uniform() < swap_probability
    for i, (c, radius) in enumerate(zip(constraints, radii)):
        if swap and i == 1:
            start, goal = goals[0].copy(), starts[0].copy()
            if not (_clear(starts, start, placed, radius, clearance)
                    and _clear(goals, goal, placed, radius, clearance)):
                raise SamplingError("swapped start/goal of agent 1 overlaps agent 0")
        else:
            for _ in range(max_attempts):
                start, goal = sample_on_manifold(c, 2, int(rng.integers(0, 2**63 - 1)))
                if (geodesic_distance(c, start, goal) >= min_goal_distance
                        and _clear(starts, start, placed, radius, clearance)
                        and _clear(goals, goal, placed, radius, clearance)):
                    break
            else:
                raise SamplingError(f"could not place agent {i} after {max_attempts} attempts")
        starts.append(start)
        goals.append(goal)
        placed.append(radius)
    return starts, goals


def generate_scenario(
    base: Scenario,
    rng: np.random.Generator,
    min_goal_distance: float = 0.5,
    clearance: float = 2.0,
    swap_probability: float = 0.5,
    max_attempts: int = 1000,
) -> Scenario:
    """
    Randomize starts and goals of ``base`` (controllers and radii are kept).

    Starts (and goals) are kept ``clearance`` times the radius sum apart, and
    every goal lies at least ``min_goal_distance`` geodesic units from its
    start. With probability ``swap_probability`` the first two agents trade
    places (head-on conflict).

    Raises
    ------
    SamplingError
        If no admissible configuration is found within ``max_attempts`` draws per agent.
    """
    starts, goals = _random_placements(
        [base.constraint_of(i) for i in range(base.n_agents)],
        [a.radius for a in base.agents],
        rng, min_goal_distance, clearance, swap_probability, max_attempts,
    )
    agents = tuple(evolve(a, start=s, goal=g) for a, s, g in zip(base.agents, starts, goals))
    return evolve(base, agents=agents)


def template_scenario(
    problem: ReachabilityProblem,
    n_agents: int,
    agent_radius: float = 0.05,
    controller: ControllerKind = ControllerKind.HJR,
    dt: float = 0.05,
    max_steps: int = 200,
    plan: Optional[PlanConfig] = None,
    seed: int = 0,
) -> Scenario:
    """Scenario with ``n_agents`` identical agents placed at random on the problem manifold."""
    if int(n_agents) < 1:
        raise InvalidInputError(f"n_agents must be >= 1, got {n_agents}")
    starts, goals = _random_placements(
        [problem.constraint] * int(n_agents), [agent_radius] * int(n_agents),
        np.random.default_rng(seed), swap_probability=0.0,
    )
    agents = tuple(
        AgentSpec(start=s, goal=g, radius=agent_radius, controller=controller) for s, g in zip(starts, goals)
    )
    return Scenario(agents=agents, problem=problem, dt=dt, max_steps=max_steps, seed=seed,
                    plan=plan or PlanConfig())


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

def _chunk_indices(n_items: int, n_workers: int) -> List[Tuple[int, int]]:
    """Contiguous (start, end) ranges partitioning [0, n_items) into about n_workers chunks."""
    n_workers = max(1, int(n_workers))
    if n_items == 0:
        return []
    n_workers = min(n_workers, n_items)
    chunk_size = math.ceil(n_items / n_workers)
    return [(s, min(s + chunk_size, n_items)) for s in range(0, n_items, chunk_size)]


def _run_trial_chunk(
    jobs: List[Tuple[int, Scenario]],
    net,
    log_dir: Optional[str],
) -> List[TrialRecord]:
    records = []
    for index, scenario in jobs:
        method = scenario.agents[0].controller.value
        log_path = os.path.join(log_dir, f"trial_{method}_{index:04d}.jsonl") if log_dir else None
        records.append(run_trial(scenario, net=net, log_path=log_path, trial_index=index))
    return records


def summarize_trials(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """One summary row per method in the benchmark table layout.

    Time is the per-step planning time in milliseconds averaged per trial;
    PL is the mean per-agent path length over successful trials.
    """
    frame = pd.DataFrame([r.to_dict() for r in records])
    rows = []
    for method, group in frame.groupby("method", sort=False):
        ok = group[group["success"]]
        rows.append({
            "Method": method,
            "SR%": 100.0 * group["success"].mean(),
            "CR%": 100.0 * group["collision"].mean(),
            "Time mean": 1000.0 * group["mean_plan_time"].mean(),
            "Time std": 1000.0 * group["mean_plan_time"].std(ddof=0),
            "PL mean": ok["path_length"].mean() if len(ok) else float("nan"),
            "PL std": ok["path_length"].std(ddof=0) if len(ok) else float("nan"),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def run_benchmark(
    base_scenario: Scenario,
    n_trials: int,
    seed: int,
    net=None,
    methods: Sequence[ControllerKind] = (ControllerKind.HJR, ControllerKind.NO_SAFETY),
    n_workers: int = 1,
    log_dir: Optional[str] = None,
    show_progress: bool = True,
    **generator_kwargs,
) -> BenchmarkReport:
    """
    Paired benchmark: every method runs on the same ``n_trials`` randomized scenarios.

    Parameters
    ----------
    base_scenario : Scenario
        Template whose agents fix count, radii and manifolds.
    n_trials : int
        Number of randomized scenarios (>= 1).
    seed : int
        Scenario k is drawn from ``default_rng([seed, k])``.
    net : safety value model, optional
    methods : sequence of ControllerKind
    n_workers : int, default 1
        Worker processes; trials are split in contiguous chunks and results
        re-sorted by (method, trial), so output does not depend on it.
    log_dir : str, optional
        Directory for per-trial JSON-lines logs.
    show_progress : bool, default True
    **generator_kwargs
        Forwarded to :func:`generate_scenario`.

    Returns
    -------
    BenchmarkReport
    """
    if int(n_trials) < 1:
        raise InvalidInputError(f"n_trials must be >= 1, got {n_trials}")
    t0 = time.perf_counter()
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)

    scenarios = [
        generate_scenario(base_scenario, np.random.default_rng([int(seed), k]), **generator_kwargs)
        for k in range(int(n_trials))
    ]
    jobs = [
        (k, evolve(scenarios[k].with_controller(ControllerKind(m)), seed=int(seed)))
        for m in methods for k in range(int(n_trials))
    ]
    print(f"🔍 Benchmark: {n_trials} trial(s) x {len(methods)} method(s), "
          f"{base_scenario.n_agents} agent(s)")

    records: List[TrialRecord] = []
    if int(n_workers) <= 1:
        iterator = tqdm(jobs, desc="Trials", unit="trial") if show_progress else jobs
        for job in iterator:
            records.extend(_run_trial_chunk([job], net, log_dir))
    else:
        chunks = _chunk_indices(len(jobs), n_workers)
        with ProcessPoolExecutor(max_workers=int(n_workers)) as ex:
            futures = [ex.submit(_run_trial_chunk, jobs[s:e], net, log_dir) for s, e in chunks]
            done = as_completed(futures)
            if show_progress:
                done = tqdm(done, total=len(futures), desc="Trial chunks")
            for fut in done:
                records.extend(fut.result())

    order = {ControllerKind(m).label: i for i, m in enumerate(methods)}
    records.sort(key=lambda r: (order.get(r.method, len(order)), r.trial_index))
    summary = summarize_trials(records)
    trials = pd.DataFrame([r.to_dict() for r in records])

    elapsed = time.perf_counter() - t0
    print(f"✅ Benchmark finished in {elapsed:.2f}s")
    for row in summary.itertuples(index=False):
        print(f"   📊 {row[0]}: SR {row[1]:.1f}%  CR {row[2]:.1f}%")
    return BenchmarkReport(summary=summary, trials=trials)
