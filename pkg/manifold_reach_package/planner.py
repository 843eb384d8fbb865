# -*- coding: utf-8 -*-
"""
Decentralized receding-horizon planner for one agent on its constraint manifold.

Each call optimizes the ego control sequence over ``t_plan`` seconds:

  minimize   sum_k stage_cost(x_k, goal) * dt
  subject to x_{k+1} = retract(x_k + u_k dt),  ||u_k|| <= u_max,
             V(T - t_safe, x_N, y_N^i) > eps   for every other agent i,

where every other agent y^i is rolled out with the worst-case disturbance of
the pairwise game, recomputed at each step from the safety value at
tau = T - t_plan. The safety constraints enter through an exact penalty
mu * max(0, eps - V)^2 whose weight grows x10 while they stay violated.
The program is solved by projected gradient descent with backtracking; the
retraction keeps every predicted state on the manifold.

Gradients use the adjoint of the rollout with the retraction Jacobian
approximated by the tangent projector at the retracted point. Adversary
rollouts depend on the ego trajectory; that dependence is left out of the
gradient (the adversary is treated as fixed during each line search step).

Any model exposing ``value(t, X)`` and ``value_and_gradients(t, X)`` over
the joint (ego, other) state can serve as the safety value.

Public API:
  - PlanConfig, PlanStatus, PlanResult
  - rollout(ego_state, controls, other_states, problem, net, config)
  - plan_step(ego_state, other_states, goal, problem, net, config, warm_start=None)
  - failsafe_control(ego_state, other_states, net, problem, config) -> (u, flag)
  - shift_plan(controls) -> controls

"""

from __future__ import annotations

import logging
import math
import time
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from attrs import field, frozen

from manifold_reach_package.errors import ConfigError, InvalidInputError
from manifold_reach_package.geometry import (
    assert_on_manifold,
    geodesic_distance,
    retract,
    tangent_projection,
    tangent_projection_batch,
)
from manifold_reach_package.hamiltonian import optimal_control_reach, worst_case_disturbance
from manifold_reach_package.problem import ReachabilityProblem


ON_MANIFOLD_TOLERANCE = 1e-6
ARMIJO = 1e-4
MIN_STEP = 1e-10


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def _positive(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be > 0, got {value!r}")


def _nonnegative(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"{attribute.name} must be >= 0, got {value!r}")


@frozen
class PlanConfig:
    """
    Planner settings.

    Attributes
    ----------
    t_plan : float, default 0.3
        Control horizon in seconds.
    dt : float, default 0.05
        Discretization step; ``t_plan / dt`` controls are optimized.
    t_safe : float, default 0.5
        Safety lookahead; the constraint reads V at T - t_safe.
    epsilon : float, default 0.05
        Required margin on the safety value.
    max_iter : int, default 60
        Gradient iterations per penalty round.
    goal_tolerance : float, default 0.05
    enforce_safety : bool, default True
        False drops the safety constraints (no-safety ablation).
    stage_cost : {"ambient", "geodesic"}, default "ambient"
        Squared ambient or squared geodesic distance to the goal.
    penalty_weight : float, default 100.0
        Initial exact-penalty weight mu.
    penalty_growth : float, default 10.0
    penalty_rounds : int, default 3
        Escalations allowed after the first round.
    margin_slack : float, default 0.01
        The penalty targets eps + slack so that a satisfied plan is strictly above eps.
    step_size : float, default 1.0
        Initial line-search step.
    tolerance : float, default 1e-8
        Convergence threshold on the control update.
    """

    t_plan: float = field(default=0.3, converter=float, validator=_positive)
    dt: float = field(default=0.05, converter=float, validator=_positive)
    t_safe: float = field(default=0.5, converter=float, validator=_positive)
    epsilon: float = field(default=0.05, converter=float, validator=_nonnegative)
    max_iter: int = field(default=60, converter=int)
    goal_tolerance: float = field(default=0.05, converter=float, validator=_positive)
    enforce_safety: bool = field(default=True, converter=bool)
    stage_cost: str = field(default="ambient")
    penalty_weight: float = field(default=100.0, converter=float, validator=_positive)
    penalty_growth: float = field(default=10.0, converter=float, validator=_positive)
    penalty_rounds: int = field(default=3, converter=int)
    margin_slack: float = field(default=0.01, converter=float, validator=_nonnegative)
    step_size: float = field(default=1.0, converter=float, validator=_positive)
    tolerance: float = field(default=1e-8, converter=float, validator=_positive)

    @stage_cost.validator
    def _check_stage_cost(self, attribute, value) -> None:
        if value not in ("ambient", "geodesic"):
            raise ValueError(f"stage_cost must be 'ambient' or 'geodesic', got {value!r}")

    def __attrs_post_init__(self) -> None:
        if not self.dt <= self.t_plan <= self.t_safe:
            raise ValueError(
                f"need 0 < dt <= t_plan <= t_safe, got dt={self.dt}, t_plan={self.t_plan}, t_safe={self.t_safe}"
            )
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.penalty_rounds < 0:
            raise ValueError(f"penalty_rounds must be >= 0, got {self.penalty_rounds}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_plan / self.dt)))

    def to_dict(self) -> Dict:
        return {
            "t_plan": self.t_plan,
            "dt": self.dt,
            "t_safe": self.t_safe,
            "epsilon": self.epsilon,
            "max_iter": self.max_iter,
            "goal_tolerance": self.goal_tolerance,
            "enforce_safety": self.enforce_safety,
            "stage_cost": self.stage_cost,
            "penalty_weight": self.penalty_weight,
            "penalty_growth": self.penalty_growth,
            "penalty_rounds": self.penalty_rounds,
            "margin_slack": self.margin_slack,
            "step_size": self.step_size,
            "tolerance": self.tolerance,
        }


class PlanStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    FAILSAFE = "FailSafe"


@frozen(eq=False)
class PlanResult:
    """Outcome of one planning call.

    ``min_margin`` is the smallest predicted safety value over the other
    agents (``inf`` when there are none or safety is not evaluated).
    """

    controls: np.ndarray
    status: PlanStatus
    predicted_states: np.ndarray
    margins: np.ndarray
    iterations: int
    wall_time: float
    penalty_weight: float
    converged: bool
    failsafe_flag: Optional[str] = None

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else math.inf

    @property
    def first_control(self) -> np.ndarray:
        return self.controls[0]

    def to_log(self) -> Dict:
        return {
            "status": self.status.value,
            "min_margin": None if math.isinf(self.min_margin) else self.min_margin,
            "margins": [float(m) for m in self.margins],
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "penalty_weight": self.penalty_weight,
            "converged": self.converged,
            "failsafe_flag": self.failsafe_flag,
            "controls": self.controls.tolist(),
        }


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------

def _validate_inputs(ego_state, other_states, problem: ReachabilityProblem) -> Tuple[np.ndarray, np.ndarray]:
    ego = assert_on_manifold(problem.constraint, ego_state, ON_MANIFOLD_TOLERANCE, "ego state")[0]
    adv_constraint = problem.adversary_constraint or problem.constraint
    if other_states is None or len(other_states) == 0:
        return ego, np.zeros((0, adv_constraint.n_d))
    others = assert_on_manifold(adv_constraint, np.asarray(other_states, dtype=float),
                                ON_MANIFOLD_TOLERANCE, "other agent state")
    return ego, others


def _validate_horizon(problem: ReachabilityProblem, config: PlanConfig) -> None:
    if config.t_safe > problem.horizon:
        raise ConfigError(
            f"t_safe {config.t_safe} exceeds the safety-value horizon {problem.horizon}",
            field="planning.t_safe",
        )


def _clip_ball(U: np.ndarray, radius: float) -> np.ndarray:
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    scale = np.minimum(1.0, radius / np.maximum(norms, 1e-300))
    return U * scale


def _joint(ego: np.ndarray, others: np.ndarray) -> np.ndarray:
    return np.hstack([np.broadcast_to(ego, (others.shape[0], ego.size)), others])


def _stage_cost(x: np.ndarray, goal: np.ndarray, problem: ReachabilityProblem,
                config: PlanConfig) -> Tuple[float, np.ndarray]:
    """Stage cost at one state and its ambient gradient."""
    if config.stage_cost == "ambient":
        diff = x - goal
        return float(diff @ diff), 2.0 * diff
    d = geodesic_distance(problem.constraint, x, goal)
    grad = np.empty_like(x)
    h = 1e-6
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        grad[j] = (geodesic_distance(problem.constraint, x + e, goal) ** 2
                   - geodesic_distance(problem.constraint, x - e, goal) ** 2) / (2 * h)
    return d * d, grad


def shift_plan(controls: np.ndarray) -> np.ndarray:
    """Drop the executed first control and repeat the last one."""
    controls = np.asarray(controls, dtype=float)
    return np.vstack([controls[1:], controls[-1:]])


def _initial_controls(ego: np.ndarray, goal: np.ndarray, problem: ReachabilityProblem,
                      config: PlanConfig) -> np.ndarray:
    """Full-speed tangential heading toward the goal, held over the horizon."""
    P = tangent_projection(problem.constraint, ego)
    u, _ = optimal_control_reach(ego - goal, P, problem.bounds)
    return np.tile(u, (config.n_steps, 1))


# ---------------------------------------------------------------------------
# Rollout
# ---------------------------------------------------------------------------

def rollout(
    ego_state,
    controls,
    other_states,
    problem: ReachabilityProblem,
    net=None,
    config: Optional[PlanConfig] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propagate the ego plan and the worst-case responses of the other agents.

    Parameters
    ----------
    ego_state : array-like
    controls : array-like, shape (N, n_ego)
    other_states : array-like, shape (m, n_adv)
    problem : ReachabilityProblem
        Pairwise game supplying manifolds, bounds and horizon.
    net : safety value model, optional
        Without a model the other agents hold still.
    config : PlanConfig, optional

    Returns
    -------
    (ego_trajectory, other_trajectories)
        Shapes (N + 1, n_ego) and (m, N + 1, n_adv); every state is retracted
        onto its manifold.
    """
    config = config or PlanConfig()
    ego = np.asarray(ego_state, dtype=float).ravel()
    U = np.atleast_2d(np.asarray(controls, dtype=float))
    others = np.atleast_2d(np.asarray(other_states, dtype=float)) if len(other_states) else \
        np.zeros((0, (problem.adversary_constraint or problem.constraint).n_d))
    adv_constraint = problem.adversary_constraint or problem.constraint
    n1 = ego.size
    tau = problem.horizon - config.t_plan

    ego_traj = np.empty((U.shape[0] + 1, n1))
    adv_traj = np.empty((others.shape[0], U.shape[0] + 1, others.shape[1]))
    ego_traj[0] = ego
    adv_traj[:, 0] = others

    for k in range(U.shape[0]):
        ego_traj[k + 1] = retract(problem.constraint, ego_traj[k] + U[k] * config.dt)
        if others.shape[0] == 0:
            continue
        current = adv_traj[:, k]
        if net is None or problem.bounds.d_max == 0.0:
            adv_traj[:, k + 1] = current
            continue
        _, _, grads = net.value_and_gradients(tau, _joint(ego_traj[k], current))
        P_adv, _ = tangent_projection_batch(adv_constraint, current)
        for i in range(current.shape[0]):
            d, _ = worst_case_disturbance(grads[i, n1:], P_adv[i], problem.bounds)
            adv_traj[i, k + 1] = retract(adv_constraint, current[i] + d * config.dt)
    return ego_traj, adv_traj


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def _objective(U: np.ndarray, ego: np.ndarray, others: np.ndarray, goal: np.ndarray,
               problem: ReachabilityProblem, net, config: PlanConfig, mu: float,
               with_grad: bool) -> Tuple[float, Optional[np.ndarray], np.ndarray, np.ndarray]:
    """Penalized cost, its gradient in U, the predicted ego states and the margins."""
    ego_traj, adv_traj = rollout(ego, U, others, problem, net, config)
    N = U.shape[0]
    t_check = problem.horizon - config.t_safe

    cost = 0.0
    stage_grads = np.zeros_like(ego_traj)
    for k in range(1, N + 1):
        c, g = _stage_cost(ego_traj[k], goal, problem, config)
        cost += c * config.dt
        stage_grads[k] = g * config.dt

    margins = np.zeros(0)
    terminal_grad = np.zeros(ego.size)
    if net is not None and others.shape[0]:
        joint = _joint(ego_traj[N], adv_traj[:, N])
        if config.enforce_safety and with_grad:
            margins, _, dvdx = net.value_and_gradients(t_check, joint)
        else:
            margins = net.value(t_check, joint)
            dvdx = None
        margins = np.asarray(margins, dtype=float)
        if config.enforce_safety:
            gap = np.maximum(0.0, config.epsilon + config.margin_slack - margins)
            cost += mu * float(np.sum(gap ** 2))
            if dvdx is not None:
                terminal_grad = -2.0 * mu * (gap[:, None] * dvdx[:, :ego.size]).sum(axis=0)

    if not with_grad:
        return cost, None, ego_traj, margins

    P, _ = tangent_projection_batch(problem.constraint, ego_traj[1:])
    grad = np.zeros_like(U)
    adjoint = stage_grads[N] + terminal_grad
    for k in range(N - 1, -1, -1):
        pulled = P[k] @ adjoint
        grad[k] = config.dt * pulled
        if k > 0:
            adjoint = stage_grads[k] + pulled
    return cost, grad, ego_traj, margins


def _descend(U: np.ndarray, ego, others, goal, problem, net, config: PlanConfig,
             mu: float) -> Tuple[np.ndarray, int, bool]:
    """Projected gradient with backtracking; returns (controls, iterations, converged)."""
    u_max = problem.bounds.u_max
    cost, grad, _, _ = _objective(U, ego, others, goal, problem, net, config, mu, with_grad=True)
    for it in range(1, config.max_iter + 1):
        step = config.step_size
        accepted = False
        while step >= MIN_STEP:
            candidate = _clip_ball(U - step * grad, u_max)
            new_cost, _, _, _ = _objective(candidate, ego, others, goal, problem, net, config, mu, with_grad=False)
            if new_cost <= cost - ARMIJO * float(np.sum(grad * (U - candidate))):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            logging.info(f"line search stalled at iteration {it}; keeping the current plan unconverged")
            return U, it, False
        change = float(np.linalg.norm(candidate - U))
        U = candidate
        cost, grad, _, _ = _objective(U, ego, others, goal, problem, net, config, mu, with_grad=True)
        if change <= config.tolerance:
            return U, it, True
    return U, config.max_iter, False


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def failsafe_control(
    ego_state,
    other_states,
    net,
    problem: ReachabilityProblem,
    config: Optional[PlanConfig] = None,
) -> Tuple[np.ndarray, Optional[str]]:
    """
    Most collision-evading tangent control.

    Picks the other agent with the smallest V(T - t_safe, ego, other) and
    returns u = u_max P grad_ego V / ||P grad_ego V||, which ascends that
    safety value along the manifold.

    Returns
    -------
    (u, flag) : (numpy.ndarray, str or None)
        ``flag`` is "not_applicable" without other agents, "degenerate" when
        the projected gradient vanishes (zero control), otherwise None.
    """
    config = config or PlanConfig()
    ego, others = _validate_inputs(ego_state, other_states, problem)
    if others.shape[0] == 0 or net is None:
        return np.zeros(ego.size), "not_applicable"
    values, _, dvdx = net.value_and_gradients(problem.horizon - config.t_safe, _joint(ego, others))
    worst = int(np.argmin(values))
    P = tangent_projection(problem.constraint, ego)
    # ascending V is the reach minimizer for -V
    u, degenerate = optimal_control_reach(-dvdx[worst, :ego.size], P, problem.bounds)
    if degenerate:
        logging.warning("fail-safe gradient is degenerate; holding position")
        return np.zeros(ego.size), "degenerate"
    return u, None


def plan_step(
    ego_state,
    other_states: Sequence,
    goal,
    problem: ReachabilityProblem,
    net,
    config: Optional[PlanConfig] = None,
    warm_start: Optional[np.ndarray] = None,
) -> PlanResult:
    """
    Plan the ego controls over the next ``t_plan`` seconds.

    Parameters
    ----------
    ego_state : array-like
        Ego state on ``problem.constraint``.
    other_states : sequence of array-like
        Observed states of the other agents (on the adversary manifold).
    goal : array-like
        Ego goal.
    problem : ReachabilityProblem
        Pairwise avoid game the safety model was trained on.
    net : safety value model or None
        Required when there are other agents and safety is enforced.
    config : PlanConfig, optional
    warm_start : array-like, shape (N, n_ego), optional
        Initial controls, usually :func:`shift_plan` of the previous plan.

    Returns
    -------
    PlanResult
        Optimal when converged with every margin above eps, Feasible when the
        iteration cap was hit with the margins satisfied, FailSafe otherwise
        (controls replaced by :func:`failsafe_control`).

    Raises
    ------
    PreconditionError
        If a state is off its manifold.
    ConfigError
        If t_safe exceeds the safety-value horizon.
    """
    config = config or PlanConfig()
    t0 = time.perf_counter()
    _validate_horizon(problem, config)
    ego, others = _validate_inputs(ego_state, other_states, problem)
    goal = np.asarray(goal, dtype=float).ravel()
    if goal.size != ego.size:
        raise InvalidInputError(f"goal has length {goal.size}, ego state has {ego.size}")
    if others.shape[0] and net is None and config.enforce_safety:
        raise InvalidInputError("a safety model is required when other agents are present")

    if warm_start is not None:
        U = np.asarray(warm_start, dtype=float)
        if U.shape != (config.n_steps, ego.size):
            raise InvalidInputError(f"warm_start must have shape {(config.n_steps, ego.size)}, got {U.shape}")
        U = _clip_ball(U, problem.bounds.u_max)
    else:
        U = _initial_controls(ego, goal, problem, config)

    safety_active = config.enforce_safety and others.shape[0] > 0
    mu = config.penalty_weight
    iterations = 0
    converged = False
    rounds = config.penalty_rounds + 1 if safety_active else 1
    for round_index in range(rounds):
        U, used, converged = _descend(U, ego, others, goal, problem, net, config, mu)
        iterations += used
        _, _, predicted, margins = _objective(U, ego, others, goal, problem, net, config, mu, with_grad=False)
        if not safety_active or np.all(margins > config.epsilon):
            break
        if round_index < rounds - 1:
            mu *= config.penalty_growth
            logging.info(f"safety margin {margins.min():.4f} <= {config.epsilon}; penalty weight -> {mu:g}")

    satisfied = not safety_active or bool(np.all(margins > config.epsilon))
    if satisfied:
        status = PlanStatus.OPTIMAL if converged else PlanStatus.FEASIBLE
        flag = None
    else:
        u, flag = failsafe_control(ego, others, net, problem, config)
        U = np.tile(u, (config.n_steps, 1))
        _, _, predicted, margins = _objective(U, ego, others, goal, problem, net, config, mu, with_grad=False)
        status = PlanStatus.FAILSAFE

    return PlanResult(
        controls=U,
        status=status,
        predicted_states=predicted,
        margins=np.asarray(margins, dtype=float),
        iterations=iterations,
        wall_time=time.perf_counter() - t0,
        penalty_weight=mu,
        converged=converged,
        failsafe_flag=flag,
    )
