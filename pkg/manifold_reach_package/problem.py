# -*- coding: utf-8 -*-
"""
Reachability problem definitions shared by the network, trainer, oracle and planner.

A problem bundles the Hamiltonian mode, the manifold(s), the control bounds,
the horizon T and the terminal condition l(x). ``constrained=False`` keeps
sampling on the manifold but replaces every projector by the identity (the
unconstrained ablation).

Public API:
  - GoalDistance, PairwiseSeparation (terminal conditions)
  - ReachabilityProblem
  - circle_reach_problem(...), circle_avoid_game(...)
  - terminal_from_dict / problem_from_dict

"""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple, Union

import numpy as np
from attrs import field, frozen

from manifold_reach_package.errors import ConfigError
from manifold_reach_package.geometry import (
    Circle,
    ManifoldConstraint,
    constraint_from_config,
    constraint_to_config,
    pair_manifold,
    tangent_projection_batch,
)
from manifold_reach_package.hamiltonian import ControlBounds, HamiltonianMode


# ---------------------------------------------------------------------------
# Terminal conditions
# ---------------------------------------------------------------------------

def _as_tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


@frozen
class GoalDistance:
    """l(x) = ||x - goal||, nonnegative everywhere."""

    goal: Tuple[float, ...] = field(converter=_as_tuple)

    kind = "goal_distance"

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X - np.asarray(self.goal), axis=1)

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "goal": list(self.goal)}


@frozen
class PairwiseSeparation:
    """l(x) = ||pos_1 - pos_2|| - 2 r on the joint (ego, adversary) state.

    Negative exactly when the two discs of radius ``agent_radius`` overlap.
    """

    agent_radius: float = field(converter=float)

    kind = "pairwise_separation"

    @agent_radius.validator
    def _check_radius(self, attribute, value) -> None:
        if not value > 0:
            raise ValueError(f"agent_radius must be > 0, got {value!r}")

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        half = X.shape[1] // 2
        return np.linalg.norm(X[:, :half] - X[:, half:], axis=1) - 2.0 * self.agent_radius

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "agent_radius": self.agent_radius}


TerminalCondition = Union[GoalDistance, PairwiseSeparation]


def terminal_from_dict(data: Dict, field_name: str = "problem.terminal") -> TerminalCondition:
    kind = data.get("kind") if isinstance(data, dict) else None
    try:
        if kind == GoalDistance.kind:
            return GoalDistance(goal=data["goal"])
        if kind == PairwiseSeparation.kind:
            return PairwiseSeparation(agent_radius=data["agent_radius"])
    except KeyError as e:
        raise ConfigError(f"{field_name} is missing key {e}", field=f"{field_name}.{e.args[0]}") from e
    except ValueError as e:
        raise ConfigError(f"{field_name}: {e}", field=field_name) from e
    raise ConfigError(
        f"{field_name}.kind must be 'goal_distance' or 'pairwise_separation', got {kind!r}",
        field=f"{field_name}.kind",
    )


# ---------------------------------------------------------------------------
# Problem
# ---------------------------------------------------------------------------

@frozen
class ReachabilityProblem:
    """Dynamics bounds, terminal condition, horizon and manifold references.

    Attributes
    ----------
    mode : HamiltonianMode
        REACH_MIN for single-agent goal reaching, AVOID_GAME for the pairwise game.
    constraint : ManifoldConstraint
        Ego manifold.
    bounds : ControlBounds
    horizon : float
        T > 0, seconds.
    terminal : GoalDistance or PairwiseSeparation
    adversary_constraint : ManifoldConstraint, optional
        Adversary manifold; required in game mode.
    constrained : bool, default True
        False realizes the unconstrained ablation (P = I).
    """

    mode: HamiltonianMode = field(converter=HamiltonianMode)
    constraint: ManifoldConstraint
    bounds: ControlBounds
    horizon: float = field(converter=float)
    terminal: TerminalCondition
    adversary_constraint: Optional[ManifoldConstraint] = None
    constrained: bool = True

    @horizon.validator
    def _check_horizon(self, attribute, value) -> None:
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"horizon must be > 0, got {value!r}")

    def __attrs_post_init__(self) -> None:
        if self.mode is HamiltonianMode.AVOID_GAME and self.adversary_constraint is None:
            raise ValueError("game mode needs an adversary_constraint")

    @property
    def is_game(self) -> bool:
        return self.mode is HamiltonianMode.AVOID_GAME

    @property
    def state_manifold(self) -> ManifoldConstraint:
        """Manifold of the network's spatial input (joint product in game mode)."""
        if self.is_game:
            return pair_manifold(self.constraint, self.adversary_constraint)
        return self.constraint

    @property
    def state_dim(self) -> int:
        return self.state_manifold.n_d

    def projections(self, X) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Per-sample projectors (ego, adversary) for a (B, state_dim) batch."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n1 = self.constraint.n_d
        if not self.constrained:
            eye_ego = np.broadcast_to(np.eye(n1), (X.shape[0], n1, n1)).copy()
            if not self.is_game:
                return eye_ego, None
            n2 = self.adversary_constraint.n_d
            return eye_ego, np.broadcast_to(np.eye(n2), (X.shape[0], n2, n2)).copy()
        P_ego, _ = tangent_projection_batch(self.constraint, X[:, :n1])
        if not self.is_game:
            return P_ego, None
        P_adv, _ = tangent_projection_batch(self.adversary_constraint, X[:, n1:])
        return P_ego, P_adv

    def to_dict(self) -> Dict:
        out = {
            "mode": self.mode.value,
            "constraint": constraint_to_config(self.constraint),
            "bounds": self.bounds.to_dict(),
            "horizon": self.horizon,
            "terminal": self.terminal.to_dict(),
            "constrained": bool(self.constrained),
        }
        if self.adversary_constraint is not None:
            out["adversary_constraint"] = constraint_to_config(self.adversary_constraint)
        return out


_PROBLEM_KEYS = {"mode", "constraint", "bounds", "horizon", "terminal", "adversary_constraint", "constrained"}


def problem_from_dict(data: Dict, field_name: str = "problem") -> ReachabilityProblem:
    """Build a ReachabilityProblem from its ``to_dict`` form (config files, model files)."""
    unknown = sorted(set(data) - _PROBLEM_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) in {field_name}: {unknown}", field=f"{field_name}.{unknown[0]}")
    for key in ("mode", "constraint", "bounds", "horizon", "terminal"):
        if key not in data:
            raise ConfigError(f"{field_name} is missing key '{key}'", field=f"{field_name}.{key}")
    adversary = data.get("adversary_constraint")
    try:
        bounds = ControlBounds.from_dict(data["bounds"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{field_name}.bounds: {e}", field=f"{field_name}.bounds") from e
    try:
        return ReachabilityProblem(
            mode=data["mode"],
            constraint=constraint_from_config(data["constraint"], f"{field_name}.constraint"),
            bounds=bounds,
            horizon=data["horizon"],
            terminal=terminal_from_dict(data["terminal"], f"{field_name}.terminal"),
            adversary_constraint=(
                constraint_from_config(adversary, f"{field_name}.adversary_constraint")
                if adversary is not None else None
            ),
            constrained=bool(data.get("constrained", True)),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"{field_name}: {e}", field=field_name) from e


# ---------------------------------------------------------------------------
# Reference problems
# ---------------------------------------------------------------------------

def circle_reach_problem(
    horizon: float = math.pi / 2,
    constrained: bool = True,
    radius: float = 0.5,
    goal: Tuple[float, float] = (0.5, 0.0),
    u_max: float = 1.0,
) -> ReachabilityProblem:
    """Goal reaching for a particle on a circle (default: radius 0.5, goal (0.5, 0))."""
    return ReachabilityProblem(
        mode=HamiltonianMode.REACH_MIN,
        constraint=Circle(radius=radius),
        bounds=ControlBounds(u_max=u_max),
        horizon=horizon,
        terminal=GoalDistance(goal=goal),
        constrained=constrained,
    )


def circle_avoid_game(
    horizon: float = 1.0,
    agent_radius: float = 0.05,
    radius: float = 0.5,
    u_max: float = 1.0,
    d_max: float = 1.0,
    constrained: bool = True,
) -> ReachabilityProblem:
    """Pairwise avoid game for two particles sharing one circle."""
    circle = Circle(radius=radius)
    return ReachabilityProblem(
        mode=HamiltonianMode.AVOID_GAME,
        constraint=circle,
        bounds=ControlBounds(u_max=u_max, d_max=d_max),
        horizon=horizon,
        terminal=PairwiseSeparation(agent_radius=agent_radius),
        adversary_constraint=circle,
        constrained=constrained,
    )
