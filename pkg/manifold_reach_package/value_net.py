# -*- coding: utf-8 -*-
"""
Sinusoidal value network V_theta(t, x) with exact input and parameter derivatives.

The network is a fully connected stack of sine layers followed by a linear
scalar head. Parameters live in one flat float64 vector whose layout is fixed:
for every layer in order, the weight matrix (out x in, row-major) followed by
the bias (out). Inputs are (t, x) in raw units; the stored InputNormalization
maps t to t / t_scale and x to (x - center) / half_width inside the network, so
every derivative is taken with respect to the raw inputs.

Derivatives come from torch autograd in double precision. The training loss
consumes the spatial gradient inside the Hamiltonian, so its parameter
gradient differentiates through the input gradient (``create_graph=True``).

Public API:
  - InputNormalization, NetworkArchitecture, parameter_count(arch)
  - init_network(arch, seed) -> np.ndarray
  - forward(params, arch, t, x) / forward_batch(params, arch, t, X)
  - forward_with_input_grad(params, arch, t, x) / forward_with_input_grad_batch(...)
  - TrainingBatch
  - composite_loss(theta, arch, batch, problem, lam) -> (total, L1, L2) tensors
  - pde_residual_batch(params, arch, problem, t, X) -> np.ndarray
  - loss_with_param_grad(params, arch, batch, problem, lam) -> (loss, grad)
  - loss_components(params, arch, batch, problem, lam) -> (total, L1, L2)
  - ValueModel, save_model(path, model), load_model(path)
  - estimate_lipschitz(model, constraint, t, count, seed)

"""

from __future__ import annotations

import math
import os
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import simplejson
import torch
import attrs
from attrs import Factory, field, frozen

from manifold_reach_package.errors import InvalidInputError, PreconditionError
from manifold_reach_package.geometry import (
    ManifoldConstraint,
    assert_on_manifold,
    sample_on_manifold,
)
from manifold_reach_package.hamiltonian import batch_hamiltonian
from manifold_reach_package.problem import ReachabilityProblem


DTYPE = torch.float64
MODEL_FORMAT = "manifold-reach-value-net"
MODEL_VERSION = 1
ON_MANIFOLD_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# Architecture
# ---------------------------------------------------------------------------

def _tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


@frozen
class InputNormalization:
    """Fixed affine input scaling: t -> t / t_scale, x -> (x - center) / half_width."""

    t_scale: float = field(converter=float)
    x_center: Tuple[float, ...] = field(converter=_tuple)
    x_half_width: Tuple[float, ...] = field(converter=_tuple)

    def __attrs_post_init__(self) -> None:
        if not self.t_scale > 0:
            raise ValueError(f"t_scale must be > 0, got {self.t_scale}")
        if len(self.x_center) != len(self.x_half_width):
            raise ValueError("x_center and x_half_width must have the same length")
        if any(h <= 0 for h in self.x_half_width):
            raise ValueError("x_half_width entries must be > 0")

    @classmethod
    def identity(cls, state_dim: int) -> "InputNormalization":
        return cls(t_scale=1.0, x_center=np.zeros(state_dim), x_half_width=np.ones(state_dim))

    def to_dict(self) -> Dict:
        return {
            "t_scale": self.t_scale,
            "x_center": list(self.x_center),
            "x_half_width": list(self.x_half_width),
        }


def _at_least(minimum: int):
    def check(instance, attribute, value) -> None:
        if int(value) < minimum:
            raise ValueError(f"{attribute.name} must be >= {minimum}, got {value!r}")
    return check


def _positive(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be > 0, got {value!r}")


@frozen
class NetworkArchitecture:
    """Sine-layer network shape.

    ``hidden_layers`` counts sine layers (the first one included); a linear
    scalar head follows. The first layer multiplies its pre-activation by
    ``first_omega``, the others by ``hidden_omega``.

    With ``exact_terminal`` the output becomes V = l(x) + (T - t) * NN(t, x),
    so V(T, x) = l(x) holds by construction. It needs the horizon T and the
    terminal condition (its dict form) and is off by default.
    """

    input_dim: int = field(converter=int, validator=_at_least(2))
    hidden_layers: int = field(default=3, converter=int, validator=_at_least(1))
    hidden_width: int = field(default=64, converter=int, validator=_at_least(4))
    first_omega: float = field(default=30.0, converter=float, validator=_positive)
    hidden_omega: float = field(default=1.0, converter=float, validator=_positive)
    normalization: Optional[InputNormalization] = None
    exact_terminal: bool = field(default=False, converter=bool)
    horizon: Optional[float] = field(default=None, converter=attrs.converters.optional(float))
    terminal: Optional[Dict] = None

    def __attrs_post_init__(self) -> None:
        if self.normalization is not None and len(self.normalization.x_center) != self.input_dim - 1:
            raise ValueError(
                f"normalization covers {len(self.normalization.x_center)} state dims, "
                f"architecture expects {self.input_dim - 1}"
            )
        if self.exact_terminal:
            if self.horizon is None or not self.horizon > 0:
                raise ValueError("exact_terminal needs a positive horizon")
            if not isinstance(self.terminal, dict) or "kind" not in self.terminal:
                raise ValueError("exact_terminal needs the terminal condition as a dict")

    @property
    def state_dim(self) -> int:
        return self.input_dim - 1

    @property
    def scaling(self) -> InputNormalization:
        return self.normalization or InputNormalization.identity(self.state_dim)

    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(out, in) per layer, sine layers first, linear head last."""
        shapes = [(self.hidden_width, self.input_dim)]
        shapes += [(self.hidden_width, self.hidden_width)] * (self.hidden_layers - 1)
        shapes.append((1, self.hidden_width))
        return shapes

    def to_dict(self) -> Dict:
        return {
            "input_dim": self.input_dim,
            "hidden_layers": self.hidden_layers,
            "hidden_width": self.hidden_width,
            "first_omega": self.first_omega,
            "hidden_omega": self.hidden_omega,
            "normalization": self.scaling.to_dict(),
            "exact_terminal": self.exact_terminal,
            "horizon": self.horizon,
            "terminal": self.terminal,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NetworkArchitecture":
        norm = data.get("normalization")
        return cls(
            input_dim=data["input_dim"],
            hidden_layers=data.get("hidden_layers", 3),
            hidden_width=data.get("hidden_width", 64),
            first_omega=data.get("first_omega", 30.0),
            hidden_omega=data.get("hidden_omega", 1.0),
            normalization=InputNormalization(**norm) if norm else None,
            exact_terminal=data.get("exact_terminal", False),
            horizon=data.get("horizon"),
            terminal=data.get("terminal"),
        )


def parameter_count(arch: NetworkArchitecture) -> int:
    """Length of the flat parameter vector.

    Examples
    --------
    >>> parameter_count(NetworkArchitecture(input_dim=3))
    8641
    """
    return sum(out * inn + out for out, inn in arch.layer_shapes())


def init_network(arch: NetworkArchitecture, seed: int) -> np.ndarray:
    """Sine-network initialization, deterministic per seed.

    First-layer weights are uniform in [-1/input_dim, 1/input_dim]; later
    weights uniform in [-sqrt(6/width)/omega, sqrt(6/width)/omega] with the
    hidden frequency. Biases follow the usual linear-layer default
    U(-1/sqrt(in), 1/sqrt(in)).
    """
    rng = np.random.default_rng(int(seed))
    chunks = []
    for i, (out, inn) in enumerate(arch.layer_shapes()):
        if i == 0:
            bound = 1.0 / inn
        else:
            bound = math.sqrt(6.0 / inn) / arch.hidden_omega
        chunks.append(rng.uniform(-bound, bound, size=out * inn))
        chunks.append(rng.uniform(-1.0 / math.sqrt(inn), 1.0 / math.sqrt(inn), size=out))
    return np.concatenate(chunks).astype(np.float64)


# ---------------------------------------------------------------------------
# Torch core
# ---------------------------------------------------------------------------

def _check_params(params, arch: NetworkArchitecture) -> np.ndarray:
    theta = np.asarray(params, dtype=np.float64).ravel()
    expected = parameter_count(arch)
    if theta.size != expected:
        raise InvalidInputError(f"parameter vector has length {theta.size}, architecture needs {expected}")
    return theta


def _network(theta: torch.Tensor, arch: NetworkArchitecture, inputs: torch.Tensor) -> torch.Tensor:
    """V for a (B, input_dim) tensor of raw (t, x) rows; returns shape (B,)."""
    scale = arch.scaling
    shift = torch.tensor((0.0,) + scale.x_center, dtype=DTYPE)
    width = torch.tensor((scale.t_scale,) + scale.x_half_width, dtype=DTYPE)
    z = (inputs - shift) / width

    shapes = arch.layer_shapes()
    offset = 0
    for i, (out, inn) in enumerate(shapes):
        W = theta[offset:offset + out * inn].view(out, inn)
        offset += out * inn
        b = theta[offset:offset + out]
        offset += out
        z = z @ W.T + b
        if i < len(shapes) - 1:
            z = torch.sin((arch.first_omega if i == 0 else arch.hidden_omega) * z)
    if arch.exact_terminal:
        t, x = inputs[:, 0], inputs[:, 1:]
        return _terminal_tensor(arch.terminal, x) + (arch.horizon - t) * z[:, 0]
    return z[:, 0]


def _terminal_tensor(terminal: Dict, x: torch.Tensor) -> torch.Tensor:
    """l(x) as a differentiable tensor, mirroring the problem terminal conditions."""
    if terminal["kind"] == "goal_distance":
        goal = torch.tensor(terminal["goal"], dtype=DTYPE)
        return torch.linalg.vector_norm(x - goal, dim=1)
    if terminal["kind"] == "pairwise_separation":
        half = x.shape[1] // 2
        gap = torch.linalg.vector_norm(x[:, :half] - x[:, half:], dim=1)
        return gap - 2.0 * float(terminal["agent_radius"])
    raise InvalidInputError(f"unknown terminal condition kind {terminal['kind']!r}")


def _inputs(t, X, state_dim: int) -> torch.Tensor:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != state_dim:
        raise InvalidInputError(f"states must have shape (B, {state_dim}), got {X.shape}")
    t = np.broadcast_to(np.asarray(t, dtype=np.float64).ravel(), (X.shape[0],)) \
        if np.size(t) in (1, X.shape[0]) else None
    if t is None:
        raise InvalidInputError("t must be a scalar or have one entry per state")
    stacked = np.column_stack([t, X])
    if not np.all(np.isfinite(stacked)):
        raise InvalidInputError("network inputs contain non-finite values")
    return torch.from_numpy(np.ascontiguousarray(stacked))


def _value_and_input_grad(theta: torch.Tensor, arch: NetworkArchitecture, inputs: torch.Tensor,
                          create_graph: bool) -> Tuple[torch.Tensor, torch.Tensor]:
    inputs = inputs.clone().requires_grad_(True)
    V = _network(theta, arch, inputs)
    grad = torch.autograd.grad(V.sum(), inputs, create_graph=create_graph)[0]
    return V, grad


# ---------------------------------------------------------------------------
# Forward evaluation
# ---------------------------------------------------------------------------

def forward_batch(params, arch: NetworkArchitecture, t, X) -> np.ndarray:
    """V_theta for every row of ``X`` (t scalar or one per row)."""
    theta = torch.from_numpy(_check_params(params, arch))
    with torch.no_grad():
        return _network(theta, arch, _inputs(t, X, arch.state_dim)).numpy().copy()


def forward(params, arch: NetworkArchitecture, t: float, x) -> float:
    """V_theta(t, x) for one input.

    Raises
    ------
    InvalidInputError
        On non-finite inputs or a state of the wrong length.
    """
    return float(forward_batch(params, arch, t, np.asarray(x, dtype=float)[None, :])[0])


def forward_with_input_grad_batch(params, arch: NetworkArchitecture, t, X
                                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(V, dV/dt, dV/dx) for a batch: shapes (B,), (B,), (B, state_dim)."""
    theta = torch.from_numpy(_check_params(params, arch))
    V, grad = _value_and_input_grad(theta, arch, _inputs(t, X, arch.state_dim), create_graph=False)
    grad = grad.detach().numpy()
    return V.detach().numpy().copy(), grad[:, 0].copy(), grad[:, 1:].copy()


def forward_with_input_grad(params, arch: NetworkArchitecture, t: float, x
                            ) -> Tuple[float, float, np.ndarray]:
    """Exact (V, dV/dt, dV/dx) at one input, by reverse-mode differentiation."""
    V, dvdt, dvdx = forward_with_input_grad_batch(params, arch, t, np.asarray(x, dtype=float)[None, :])
    return float(V[0]), float(dvdt[0]), dvdx[0]


# ---------------------------------------------------------------------------
# Training loss
# ---------------------------------------------------------------------------

@frozen(eq=False)
class TrainingBatch:
    """Collocation points: times (B,), states (B, n) and terminal flags (B,)."""

    t: np.ndarray = field(converter=lambda v: np.asarray(v, dtype=np.float64).ravel())
    x: np.ndarray = field(converter=lambda v: np.atleast_2d(np.asarray(v, dtype=np.float64)))
    is_terminal: np.ndarray = field(converter=lambda v: np.asarray(v, dtype=bool).ravel())

    def __attrs_post_init__(self) -> None:
        if not (len(self.t) == self.x.shape[0] == len(self.is_terminal)):
            raise InvalidInputError("t, x and is_terminal must have the same number of rows")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_tuples(cls, rows: Sequence[Tuple[float, Sequence[float], bool]]) -> "TrainingBatch":
        return cls(
            t=[r[0] for r in rows],
            x=[list(r[1]) for r in rows],
            is_terminal=[bool(r[2]) for r in rows],
        )


def _as_training_batch(batch) -> TrainingBatch:
    return batch if isinstance(batch, TrainingBatch) else TrainingBatch.from_tuples(batch)


def _value_and_residual(theta: torch.Tensor, arch: NetworkArchitecture, problem: ReachabilityProblem,
                        t, X, create_graph: bool) -> Tuple[torch.Tensor, torch.Tensor]:
    """V and dV/dt + min{0, H} per row."""
    inputs = _inputs(t, X, arch.state_dim)
    V, grad = _value_and_input_grad(theta, arch, inputs, create_graph=create_graph)
    P_ego, P_adv = problem.projections(np.asarray(X, dtype=np.float64))
    H = batch_hamiltonian(
        grad[:, 1:],
        torch.from_numpy(P_ego),
        problem.bounds,
        problem.mode,
        torch.from_numpy(P_adv) if P_adv is not None else None,
    )
    clamped = torch.where(H < 0, H, torch.zeros_like(H))
    return V, grad[:, 0] + clamped


def pde_residual_batch(params, arch: NetworkArchitecture, problem: ReachabilityProblem, t, X) -> np.ndarray:
    """Signed residual dV/dt + min{0, H_M} for every row of ``X`` (no terminal term)."""
    theta = torch.from_numpy(_check_params(params, arch))
    _, residual = _value_and_residual(theta, arch, problem, t, X, create_graph=False)
    return residual.detach().numpy().copy()


def composite_loss(
    theta: torch.Tensor,
    arch: NetworkArchitecture,
    batch: TrainingBatch,
    problem: ReachabilityProblem,
    lam: float,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """L = L1 + lam * L2 as differentiable tensors.

    L1 = mean(|V - l(x)| * 1[terminal]),
    L2 = mean(|dV/dt + min{0, H_M(t, x, grad_x V)}|).

    The kinks of |.| and min{0, .} get derivative 0.

    Raises
    ------
    PreconditionError
        If a batch state is off the problem manifold (||C(x)|| > 1e-6).
    """
    assert_on_manifold(problem.state_manifold, batch.x, ON_MANIFOLD_TOLERANCE, "batch point")
    V, residual = _value_and_residual(theta, arch, problem, batch.t, batch.x, create_graph=True)

    target = torch.from_numpy(problem.terminal.evaluate(batch.x))
    mask = torch.from_numpy(batch.is_terminal.astype(np.float64))
    l1 = (torch.abs(V - target) * mask).mean()
    l2 = torch.abs(residual).mean()
    return l1 + lam * l2, l1, l2


def loss_with_param_grad(
    params,
    arch: NetworkArchitecture,
    batch,
    problem: ReachabilityProblem,
    lam: float,
) -> Tuple[float, np.ndarray]:
    """Composite loss and its exact gradient with respect to the flat parameters.

    Parameters
    ----------
    params : array-like
        Flat parameter vector.
    arch : NetworkArchitecture
    batch : TrainingBatch or list of (t, x, is_terminal)
        Every state must lie on the problem manifold.
    problem : ReachabilityProblem
    lam : float
        Weight of the PDE residual term.

    Returns
    -------
    (loss, grad) : (float, numpy.ndarray)
    """
    theta = torch.tensor(_check_params(params, arch), dtype=DTYPE, requires_grad=True)
    total, _, _ = composite_loss(theta, arch, _as_training_batch(batch), problem, float(lam))
    (grad,) = torch.autograd.grad(total, theta)
    return float(total.detach()), grad.numpy().copy()


def loss_components(
    params,
    arch: NetworkArchitecture,
    batch,
    problem: ReachabilityProblem,
    lam: float,
) -> Tuple[float, float, float]:
    """(total, L1, L2) without parameter gradients."""
    theta = torch.from_numpy(_check_params(params, arch))
    total, l1, l2 = composite_loss(theta, arch, _as_training_batch(batch), problem, float(lam))
    return float(total.detach()), float(l1.detach()), float(l2.detach())


# ---------------------------------------------------------------------------
# Model container and file format
# ---------------------------------------------------------------------------

@frozen(eq=False)
class ValueModel:
    """Trained value function: architecture, flat parameters, seed and problem description."""

    params: np.ndarray = field(converter=lambda v: np.asarray(v, dtype=np.float64).ravel())
    arch: NetworkArchitecture
    seed: int = 0
    problem: Optional[Dict] = None
    metadata: Dict = Factory(dict)

    def __attrs_post_init__(self) -> None:
        _check_params(self.params, self.arch)
        if not np.all(np.isfinite(self.params)):
            raise InvalidInputError("model parameters contain non-finite values")

    def value(self, t, X) -> np.ndarray:
        return forward_batch(self.params, self.arch, t, X)

    def value_and_gradients(self, t, X) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return forward_with_input_grad_batch(self.params, self.arch, t, X)


def save_model(path: Union[str, os.PathLike], model: ValueModel) -> None:
    """Write a self-describing JSON model file.

    Floats are written in shortest round-trip form, so loading restores the
    parameters bit for bit and identical models give identical files.
    """
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "architecture": model.arch.to_dict(),
        "seed": int(model.seed),
        "problem": model.problem,
        "metadata": model.metadata,
        "parameters": [float(v) for v in model.params],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(simplejson.dumps(payload, sort_keys=True, indent=1))
        fh.write("\n")


def load_model(path: Union[str, os.PathLike]) -> ValueModel:
    """Read a model file written by :func:`save_model`.

    Raises
    ------
    InvalidInputError
        If the file is not a value-network model or its parameters do not
        match the stored architecture.
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = simplejson.load(fh)
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise InvalidInputError(f"{path} is not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise InvalidInputError(f"{path} has unsupported version {payload.get('version')!r}")
    return ValueModel(
        params=np.asarray(payload["parameters"], dtype=np.float64),
        arch=NetworkArchitecture.from_dict(payload["architecture"]),
        seed=int(payload.get("seed", 0)),
        problem=payload.get("problem"),
        metadata=payload.get("metadata") or {},
    )


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def estimate_lipschitz(
    model: ValueModel,
    constraint: ManifoldConstraint,
    t: float,
    count: int = 2000,
    seed: int = 0,
) -> float:
    """Empirical Lipschitz constant of x -> V(t, x) over random on-manifold pairs."""
    X = sample_on_manifold(constraint, 2 * int(count), seed)
    A, B = X[:count], X[count:]
    dist = np.linalg.norm(A - B, axis=1)
    keep = dist > 1e-9
    if not keep.any():
        raise PreconditionError("all sampled pairs coincide; cannot estimate a Lipschitz constant")
    gap = np.abs(model.value(t, A[keep]) - model.value(t, B[keep]))
    return float(np.max(gap / dist[keep]))
