# -*- coding: utf-8 -*-
"""
Constrained Hamiltonians for velocity-controlled particles (x_dot = u, ||u|| <= u_max).

Closed forms restrict the optimization to the tangent space through the
projector P(x):

  reach (min over u):      H = -u_max ||P grad||
  avoid game (max u, min d):
                           H = u_max ||P1 grad_1|| - d_max ||P2 grad_2||

The numpy functions serve planning and tests; ``batch_hamiltonian`` is the
differentiable torch form consumed by the training loss. The brute-force
oracle samples tangent directions and optimizes the constrained program
directly; it exists only to check the closed forms.

Public API:
  - ControlBounds, HamiltonianMode
  - constrained_hamiltonian_reach(grad_v_x, proj, bounds) -> float
  - optimal_control_reach(grad_v_x, proj, bounds) -> (u, degenerate)
  - constrained_hamiltonian_game(grad_v_joint, proj_ego, proj_adv, bounds) -> float
  - worst_case_disturbance(grad_v_adv_block, proj_adv, bounds) -> (d, degenerate)
  - brute_force_hamiltonian(grad_v, constraint, x, bounds, mode, samples) -> float
  - batch_hamiltonian(grad, proj_ego, bounds, mode, proj_adv=None) -> torch.Tensor

"""

from __future__ import annotations

from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np
import torch
from attrs import field, frozen

from manifold_reach_package.errors import InvalidInputError
from manifold_reach_package.geometry import (
    ManifoldConstraint,
    ProjectionMatrix,
    Product,
    tangent_projection,
)


DEGENERATE_NORM = 1e-10


class HamiltonianMode(str, Enum):
    """Which optimization the Hamiltonian performs."""

    REACH_MIN = "reach_min"
    AVOID_GAME = "avoid_game"


def _positive(instance, attribute, value) -> None:
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be > 0, got {value!r}")


def _nonnegative(instance, attribute, value) -> None:
    if not (np.isfinite(value) and value >= 0):
        raise ValueError(f"{attribute.name} must be >= 0, got {value!r}")


@frozen
class ControlBounds:
    """Euclidean-norm bounds on the ego control and the adversary input."""

    u_max: float = field(converter=float, validator=_positive)
    d_max: float = field(default=0.0, converter=float, validator=_nonnegative)

    def to_dict(self) -> Dict[str, float]:
        return {"u_max": self.u_max, "d_max": self.d_max}

    @classmethod
    def from_dict(cls, data: Dict) -> "ControlBounds":
        return cls(u_max=data["u_max"], d_max=data.get("d_max", 0.0))


ProjectionLike = Union[ProjectionMatrix, np.ndarray]


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------

def _matrix(proj: ProjectionLike) -> np.ndarray:
    return np.asarray(proj.matrix if isinstance(proj, ProjectionMatrix) else proj, dtype=float)


def _projected(grad, proj: ProjectionLike, label: str) -> np.ndarray:
    P = _matrix(proj)
    g = np.asarray(grad, dtype=float).ravel()
    if P.shape != (g.size, g.size):
        raise InvalidInputError(
            f"{label} has length {g.size} but the projection matrix is {P.shape}"
        )
    return P @ g


def _unit_direction(v: np.ndarray) -> Tuple[np.ndarray, bool]:
    norm = float(np.linalg.norm(v))
    if norm <= DEGENERATE_NORM:
        return np.zeros_like(v), True
    return v / norm, False


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def constrained_hamiltonian_reach(grad_v_x, proj: ProjectionLike, bounds: ControlBounds) -> float:
    """Return -u_max * ||P grad||, the tangent-restricted minimum of <grad, u>.

    Examples
    --------
    >>> constrained_hamiltonian_reach([3.0, 4.0], np.eye(2), ControlBounds(u_max=2.0))
    -10.0
    """
    return -bounds.u_max * float(np.linalg.norm(_projected(grad_v_x, proj, "grad_v_x")))


def optimal_control_reach(
    grad_v_x,
    proj: ProjectionLike,
    bounds: ControlBounds,
) -> Tuple[np.ndarray, bool]:
    """Minimizer u* = -u_max P grad / ||P grad|| of the reach Hamiltonian.

    Returns
    -------
    (u, degenerate) : (numpy.ndarray, bool)
        When ||P grad|| <= 1e-10 the minimizer is undefined; a zero control is
        returned with ``degenerate=True``.
    """
    direction, degenerate = _unit_direction(_projected(grad_v_x, proj, "grad_v_x"))
    return -bounds.u_max * direction, degenerate


def constrained_hamiltonian_game(
    grad_v_joint,
    proj_ego: ProjectionLike,
    proj_adv: ProjectionLike,
    bounds: ControlBounds,
) -> float:
    """Return u_max ||P1 grad_1|| - d_max ||P2 grad_2|| for the pairwise avoid game.

    ``grad_v_joint`` is split into the ego block (first) and the adversary
    block according to the projector sizes.
    """
    g = np.asarray(grad_v_joint, dtype=float).ravel()
    n1 = _matrix(proj_ego).shape[0]
    if g.size != n1 + _matrix(proj_adv).shape[0]:
        raise InvalidInputError(
            f"grad_v_joint has length {g.size}, expected {n1 + _matrix(proj_adv).shape[0]}"
        )
    ego = np.linalg.norm(_projected(g[:n1], proj_ego, "ego block"))
    adv = np.linalg.norm(_projected(g[n1:], proj_adv, "adversary block"))
    return float(bounds.u_max * ego - bounds.d_max * adv)


def worst_case_disturbance(
    grad_v_adv_block,
    proj_adv: ProjectionLike,
    bounds: ControlBounds,
) -> Tuple[np.ndarray, bool]:
    """Adversary input d* = -d_max P2 grad_2 / ||P2 grad_2||, which descends the safety value.

    Returns ``(zeros, True)`` when the projected gradient vanishes.
    """
    direction, degenerate = _unit_direction(_projected(grad_v_adv_block, proj_adv, "grad_v_adv_block"))
    return -bounds.d_max * direction, degenerate


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _tangent_directions(P: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Unit tangent directions: projected standard-normal samples, renormalized."""
    W = rng.standard_normal((samples, P.shape[0])) @ P
    norms = np.linalg.norm(W, axis=1)
    keep = norms > 1e-12
    return W[keep] / norms[keep, None]


def _extreme_inner_product(grad: np.ndarray, P: np.ndarray, scale: float,
                           samples: int, rng: np.random.Generator, maximize: bool) -> float:
    if scale == 0.0:
        return 0.0
    directions = _tangent_directions(P, samples, rng)
    if directions.shape[0] == 0:
        return 0.0
    values = scale * (directions @ grad)
    return float(values.max() if maximize else values.min())


def brute_force_hamiltonian(
    grad_v,
    constraint: ManifoldConstraint,
    x,
    bounds: ControlBounds,
    mode: HamiltonianMode,
    samples: int,
    rng_seed: int = 0,
) -> float:
    """Optimize <grad V, u> over sampled tangent controls, as the constrained program states.

    Parameters
    ----------
    grad_v : array-like
        Value gradient (joint ego + adversary gradient in game mode).
    constraint : ManifoldConstraint
        Manifold of ``x``. In game mode it must be a two-block Product
        (ego block, adversary block); each player is optimized on its own block.
    x : array-like
        On-manifold state.
    bounds : ControlBounds
    mode : HamiltonianMode
    samples : int
        Number of sampled directions per player (>= 100).
    rng_seed : int, default 0

    Returns
    -------
    float
        min over sampled u (reach), or max over u plus min over d (game).
    """
    if int(samples) < 100:
        raise InvalidInputError(f"samples must be >= 100, got {samples}")
    rng = np.random.default_rng(rng_seed)
    g = np.asarray(grad_v, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()

    if HamiltonianMode(mode) is HamiltonianMode.REACH_MIN:
        P = tangent_projection(constraint, x).matrix
        return _extreme_inner_product(g, P, bounds.u_max, int(samples), rng, maximize=False)

    if not isinstance(constraint, Product) or len(constraint.blocks) != 2:
        raise InvalidInputError("game mode needs a two-block Product constraint (ego, adversary)")
    (ego, (s1, e1)), (adv, (s2, e2)) = constraint.blocks
    P1 = tangent_projection(ego, x[s1:e1]).matrix
    P2 = tangent_projection(adv, x[s2:e2]).matrix
    best_u = _extreme_inner_product(g[s1:e1], P1, bounds.u_max, int(samples), rng, maximize=True)
    worst_d = _extreme_inner_product(g[s2:e2], P2, bounds.d_max, int(samples), rng, maximize=False)
    return best_u + worst_d


# ---------------------------------------------------------------------------
# Differentiable batch form (training loss)
# ---------------------------------------------------------------------------

def _safe_norm(v: torch.Tensor) -> torch.Tensor:
    """Row norms whose derivative is 0 (not NaN) at the zero vector."""
    sq = (v * v).sum(dim=-1)
    positive = sq > 0
    safe = torch.where(positive, sq, torch.ones_like(sq))
    return torch.where(positive, torch.sqrt(safe), torch.zeros_like(sq))


def batch_hamiltonian(
    grad: torch.Tensor,
    proj_ego: torch.Tensor,
    bounds: ControlBounds,
    mode: HamiltonianMode,
    proj_adv: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Constrained Hamiltonian for a batch of gradients, differentiable in ``grad``.

    Parameters
    ----------
    grad : torch.Tensor, shape (B, n)
        Spatial value gradients (joint in game mode, ego block first).
    proj_ego : torch.Tensor, shape (B, n1, n1)
        Ego projectors (identity for the unconstrained ablation).
    bounds : ControlBounds
    mode : HamiltonianMode
    proj_adv : torch.Tensor, shape (B, n2, n2), optional
        Adversary projectors; required in game mode.

    Returns
    -------
    torch.Tensor, shape (B,)
    """
    n1 = proj_ego.shape[-1]
    ego = _safe_norm(torch.einsum("bij,bj->bi", proj_ego, grad[:, :n1]))
    if HamiltonianMode(mode) is HamiltonianMode.REACH_MIN:
        return -bounds.u_max * ego
    if proj_adv is None:
        raise InvalidInputError("game mode needs adversary projectors")
    adv = _safe_norm(torch.einsum("bij,bj->bi", proj_adv, grad[:, n1:]))
    return bounds.u_max * ego - bounds.d_max * adv
