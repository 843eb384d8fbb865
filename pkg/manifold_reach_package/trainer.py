# -*- coding: utf-8 -*-
"""
Training loop for the value network on the constrained HJB / BRT residual.

Collocation states are drawn on the problem manifold (the joint product in
game mode). Times follow a backward curriculum: during a terminal pretraining
phase every sample sits at t = T, then the sampled window [T - kappa T, T]
widens until it covers the whole horizon. The residual weight lambda ramps
from 0 to ``lambda_max`` over the first part of training.

Public API:
  - ReachabilityProblem, GoalDistance, PairwiseSeparation (re-exported)
  - TrainConfig
  - curriculum_fraction(step, config), lambda_schedule(step, config)
  - sample_batch(problem, config, step, rng) -> TrainingBatch
  - default_architecture(problem, ...) -> NetworkArchitecture
  - train(problem, arch, config, show_progress=True) -> (params, history)
  - train_model(problem, arch, config, show_progress=True) -> (ValueModel, history)
  - pde_residual_report(params, arch, problem, probe_count, seed, t=None) -> pd.Series
  - terminal_fit_error(params, arch, problem, count, seed) -> float
  - monotonicity_violation_fraction(params, arch, problem, times, count, seed) -> float
  - write_training_artifacts(out_dir, model, history, manifest)

"""

from __future__ import annotations

import logging
import math
import os
import time
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import simplejson
import torch
from attrs import field, frozen
from tqdm import tqdm

from manifold_reach_package.errors import TrainingAbortedError
from manifold_reach_package.geometry import ambient_bounds, assert_on_manifold, sample_on_manifold
from manifold_reach_package.problem import (  # noqa: F401  (re-exported)
    GoalDistance,
    PairwiseSeparation,
    ReachabilityProblem,
    circle_avoid_game,
    circle_reach_problem,
)
from manifold_reach_package.value_net import (
    DTYPE,
    InputNormalization,
    NetworkArchitecture,
    TrainingBatch,
    ValueModel,
    composite_loss,
    forward_batch,
    init_network,
    pde_residual_batch,
    save_model,
)


SAMPLE_TOLERANCE = 1e-8
HISTORY_COLUMNS = ["step", "l1", "l2", "total", "grad_norm", "lambda", "kappa", "learning_rate"]


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def _positive_int(instance, attribute, value) -> None:
    if value < 1:
        raise ValueError(f"{attribute.name} must be >= 1, got {value!r}")


def _positive(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be > 0, got {value!r}")


def _nonnegative(instance, attribute, value) -> None:
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"{attribute.name} must be >= 0, got {value!r}")


def _fraction(instance, attribute, value) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{attribute.name} must lie in [0, 1], got {value!r}")


@frozen
class TrainConfig:
    """Optimization and sampling settings for :func:`train`.

    Attributes
    ----------
    batch_size : int, default 4096
    steps : int, default 50000
    learning_rate : float, default 2e-5
        Adam learning rate at step 0.
    lr_decay : {"cosine", "constant"}, default "cosine"
    lambda_max : float, default 1.0
        Final weight of the residual term (must be >= 0).
    lambda_ramp_fraction : float, default 0.1
        Share of the steps over which lambda ramps from 0 to ``lambda_max``.
    pretrain_fraction : float, default 0.05
        Share of the steps spent at kappa = 0 (terminal pretraining).
    curriculum_end_fraction : float, default 0.8
        Step share at which kappa reaches 1.
    terminal_fraction : float, default 0.5
        Share of each batch pinned to t = T during pretraining.
    terminal_fraction_final : float, default 0.1
        Share pinned to t = T once the curriculum has started.
    seed : int, default 0
    log_every : int, default 100
    threads : int, optional
        torch intra-op threads; None leaves the torch default.
    """

    batch_size: int = field(default=4096, converter=int, validator=_positive_int)
    steps: int = field(default=50_000, converter=int, validator=_positive_int)
    learning_rate: float = field(default=2e-5, converter=float, validator=_positive)
    lr_decay: str = field(default="cosine")
    lambda_max: float = field(default=1.0, converter=float, validator=_nonnegative)
    lambda_ramp_fraction: float = field(default=0.1, converter=float, validator=_fraction)
    pretrain_fraction: float = field(default=0.05, converter=float, validator=_fraction)
    curriculum_end_fraction: float = field(default=0.8, converter=float, validator=_fraction)
    terminal_fraction: float = field(default=0.5, converter=float, validator=_fraction)
    terminal_fraction_final: float = field(default=0.1, converter=float, validator=_fraction)
    seed: int = field(default=0, converter=int)
    log_every: int = field(default=100, converter=int, validator=_positive_int)
    threads: Optional[int] = None

    @lr_decay.validator
    def _check_decay(self, attribute, value) -> None:
        if value not in ("cosine", "constant"):
            raise ValueError(f"lr_decay must be 'cosine' or 'constant', got {value!r}")

    def __attrs_post_init__(self) -> None:
        if self.curriculum_end_fraction < self.pretrain_fraction:
            raise ValueError("curriculum_end_fraction must be >= pretrain_fraction")
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads!r}")

    @property
    def pretrain_steps(self) -> int:
        return int(round(self.pretrain_fraction * self.steps))

    def to_dict(self) -> Dict:
        return {
            "batch_size": self.batch_size,
            "steps": self.steps,
            "learning_rate": self.learning_rate,
            "lr_decay": self.lr_decay,
            "lambda_max": self.lambda_max,
            "lambda_ramp_fraction": self.lambda_ramp_fraction,
            "pretrain_fraction": self.pretrain_fraction,
            "curriculum_end_fraction": self.curriculum_end_fraction,
            "terminal_fraction": self.terminal_fraction,
            "terminal_fraction_final": self.terminal_fraction_final,
            "seed": self.seed,
            "log_every": self.log_every,
            "threads": self.threads,
        }


# ---------------------------------------------------------------------------
# Schedules and sampling
# ---------------------------------------------------------------------------

def curriculum_fraction(step: int, config: TrainConfig) -> float:
    """kappa(step): 0 through pretraining, then linear up to 1, then 1.

    Nondecreasing in ``step``; equals 1 on the final step.
    """
    start = config.pretrain_steps
    end = max(int(round(config.curriculum_end_fraction * config.steps)), start + 1)
    if step >= config.steps - 1 or step >= end:
        return 1.0
    if step < start:
        return 0.0
    return (step - start) / (end - start)


def lambda_schedule(step: int, config: TrainConfig) -> float:
    """Residual weight: linear ramp 0 -> lambda_max, then constant."""
    ramp = config.lambda_ramp_fraction * config.steps
    if ramp <= 0:
        return config.lambda_max
    return config.lambda_max * min(1.0, step / ramp)


def sample_batch(
    problem: ReachabilityProblem,
    config: TrainConfig,
    step: int,
    rng: np.random.Generator,
) -> TrainingBatch:
    """Draw one collocation batch for ``step``.

    States come from the problem manifold; times are uniform on
    [T - kappa(step) T, T] except for a pinned share placed exactly at t = T.
    ``is_terminal`` marks every sample whose time equals T.

    Raises
    ------
    ValueError
        If ``step`` is outside [0, config.steps).
    """
    if not 0 <= step < config.steps:
        raise ValueError(f"step must lie in [0, {config.steps}), got {step}")
    T = problem.horizon
    n = config.batch_size

    X = sample_on_manifold(problem.state_manifold, n, int(rng.integers(0, 2**63 - 1)))
    assert_on_manifold(problem.state_manifold, X, SAMPLE_TOLERANCE, "training state")

    kappa = curriculum_fraction(step, config)
    share = config.terminal_fraction if step < config.pretrain_steps else config.terminal_fraction_final
    pinned = int(round(share * n))

    t = T - kappa * T * rng.uniform(0.0, 1.0, size=n)
    t[:pinned] = T
    return TrainingBatch(t=t, x=X, is_terminal=(t == T))


# ---------------------------------------------------------------------------
# Architecture defaults
# ---------------------------------------------------------------------------

def default_architecture(
    problem: ReachabilityProblem,
    hidden_layers: int = 3,
    hidden_width: int = 64,
    first_omega: float = 30.0,
    hidden_omega: float = 1.0,
    exact_terminal: bool = False,
) -> NetworkArchitecture:
    """Architecture whose input scaling maps [0, T] x (manifold box) onto [0, 1] x [-1, 1]^n.

    ``exact_terminal=True`` switches on the V = l(x) + (T - t) * NN output form
    for this problem's horizon and terminal condition.
    """
    low, high = ambient_bounds(problem.state_manifold)
    half = np.maximum((high - low) / 2.0, 1e-6)
    return NetworkArchitecture(
        input_dim=problem.state_dim + 1,
        hidden_layers=hidden_layers,
        hidden_width=hidden_width,
        first_omega=first_omega,
        hidden_omega=hidden_omega,
        normalization=InputNormalization(
            t_scale=problem.horizon,
            x_center=(high + low) / 2.0,
            x_half_width=half,
        ),
        exact_terminal=exact_terminal,
        horizon=problem.horizon if exact_terminal else None,
        terminal=problem.terminal.to_dict() if exact_terminal else None,
    )


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def train(
    problem: ReachabilityProblem,
    arch: NetworkArchitecture,
    config: TrainConfig,
    show_progress: bool = True,
) -> Tuple[np.ndarray, pd.DataFrame]:
    """
    Fit V_theta by minimizing L1 + lambda L2 with Adam.

    Parameters
    ----------
    problem : ReachabilityProblem
    arch : NetworkArchitecture
        Input dimension must equal ``problem.state_dim + 1``.
    config : TrainConfig
    show_progress : bool, default True
        Show a tqdm bar over the steps.

    Returns
    -------
    (params, history) : (numpy.ndarray, pandas.DataFrame)
        Final flat parameters and one history row per logging interval
        (step, l1, l2, total, grad_norm, lambda, kappa, learning_rate).
        Identical inputs and seeds give identical outputs.

    Raises
    ------
    ValueError
        If the architecture does not match the problem dimension.
    TrainingAbortedError
        On a non-finite loss or gradient (reports step, L1, L2, grad norm).
    """
    if arch.input_dim != problem.state_dim + 1:
        raise ValueError(
            f"architecture input_dim {arch.input_dim} does not match problem state_dim + 1 "
            f"= {problem.state_dim + 1}"
        )
    t0 = time.perf_counter()
    if config.threads is not None:
        torch.set_num_threads(config.threads)
    torch.use_deterministic_algorithms(True)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    theta = torch.tensor(init_network(arch, config.seed), dtype=DTYPE, requires_grad=True)
    optimizer = torch.optim.Adam([theta], lr=config.learning_rate)
    scheduler = (
        torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=config.steps)
        if config.lr_decay == "cosine" else None
    )

    mode_label = "unconstrained" if not problem.constrained else "constrained"
    print(f"🔍 Training value network: {problem.mode.value} [{mode_label}], "
          f"{config.steps:,} steps x {config.batch_size:,} samples")

    history = []
    iterator = range(config.steps)
    if show_progress:
        iterator = tqdm(iterator, total=config.steps, desc="Training", unit="step")

    for step in iterator:
        batch = sample_batch(problem, config, step, rng)
        lam = lambda_schedule(step, config)

        optimizer.zero_grad()
        total, l1, l2 = composite_loss(theta, arch, batch, problem, lam)
        if not torch.isfinite(total):
            raise TrainingAbortedError(
                f"non-finite loss at step {step}: L1={float(l1):.4g}, L2={float(l2):.4g}",
                step=step, l1=float(l1), l2=float(l2), grad_norm=float("nan"),
            )
        total.backward()
        grad_norm = float(theta.grad.norm())
        if not math.isfinite(grad_norm):
            raise TrainingAbortedError(
                f"non-finite gradient at step {step}: L1={float(l1):.4g}, L2={float(l2):.4g}",
                step=step, l1=float(l1), l2=float(l2), grad_norm=grad_norm,
            )
        lr = optimizer.param_groups[0]["lr"]
        optimizer.step()
        if scheduler is not None:
            scheduler.step()

        if step % config.log_every == 0 or step == config.steps - 1:
            history.append({
                "step": step,
                "l1": float(l1),
                "l2": float(l2),
                "total": float(total),
                "grad_norm": grad_norm,
                "lambda": lam,
                "kappa": curriculum_fraction(step, config),
                "learning_rate": lr,
            })
            logging.info(f"step {step}: L1={float(l1):.4e} L2={float(l2):.4e} |grad|={grad_norm:.3e}")
            if show_progress:
                iterator.set_postfix(l1=f"{float(l1):.2e}", l2=f"{float(l2):.2e}")

    elapsed = time.perf_counter() - t0
    history_df = pd.DataFrame(history, columns=HISTORY_COLUMNS)
    final = history_df.iloc[-1]
    print(f"✅ Training finished in {elapsed:.2f}s")
    print(f"   📊 Final L1 = {final['l1']:.4e}, L2 = {final['l2']:.4e}")
    return theta.detach().numpy().copy(), history_df


def train_model(
    problem: ReachabilityProblem,
    arch: NetworkArchitecture,
    config: TrainConfig,
    show_progress: bool = True,
) -> Tuple[ValueModel, pd.DataFrame]:
    """:func:`train` wrapped into a ValueModel carrying the problem description."""
    params, history = train(problem, arch, config, show_progress=show_progress)
    model = ValueModel(
        params=params,
        arch=arch,
        seed=config.seed,
        problem=problem.to_dict(),
        metadata={"train": config.to_dict()},
    )
    return model, history


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def pde_residual_report(
    params,
    arch: NetworkArchitecture,
    problem: ReachabilityProblem,
    probe_count: int,
    seed: int,
    t: Optional[float] = None,
) -> pd.Series:
    """
    |dV/dt + min{0, H}| on fresh on-manifold probes.

    Times are uniform on [0, T] unless ``t`` fixes them. The terminal term is
    never included.

    Returns
    -------
    pandas.Series
        mean, median, p95, max and count of the absolute residual.
    """
    rng = np.random.default_rng(seed)
    X = sample_on_manifold(problem.state_manifold, probe_count, int(rng.integers(0, 2**63 - 1)))
    times = np.full(probe_count, float(t)) if t is not None else rng.uniform(0.0, problem.horizon, probe_count)
    residual = np.abs(pde_residual_batch(params, arch, problem, times, X))
    return pd.Series({
        "mean": float(residual.mean()),
        "median": float(np.median(residual)),
        "p95": float(np.percentile(residual, 95)),
        "max": float(residual.max()),
        "count": int(probe_count),
    })


def terminal_fit_error(
    params,
    arch: NetworkArchitecture,
    problem: ReachabilityProblem,
    count: int = 2000,
    seed: int = 12345,
) -> float:
    """Mean |V(T, x) - l(x)| over a held-out terminal set."""
    X = sample_on_manifold(problem.state_manifold, count, seed)
    V = forward_batch(params, arch, problem.horizon, X)
    return float(np.mean(np.abs(V - problem.terminal.evaluate(X))))


def monotonicity_violation_fraction(
    params,
    arch: NetworkArchitecture,
    problem: ReachabilityProblem,
    times: Sequence[float],
    count: int = 500,
    seed: int = 54321,
    tolerance: float = 0.02,
) -> float:
    """Share of (probe, t1 < t2) pairs with V(t1, x) > V(t2, x) + tolerance.

    Pairs are consecutive entries of the sorted ``times``.
    """
    times = np.sort(np.asarray(times, dtype=float))
    if times.size < 2:
        raise ValueError("need at least two probe times")
    X = sample_on_manifold(problem.state_manifold, count, seed)
    values = np.stack([forward_batch(params, arch, t, X) for t in times])
    violations = values[:-1] > values[1:] + tolerance
    return float(violations.mean())


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

def write_training_artifacts(
    out_dir: str,
    model: ValueModel,
    history: pd.DataFrame,
    manifest: Dict,
    model_name: str = "value_model.json",
) -> Dict[str, str]:
    """Write the model file, ``loss_history.csv`` and ``manifest.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "model": os.path.join(out_dir, model_name),
        "history": os.path.join(out_dir, "loss_history.csv"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    save_model(paths["model"], model)
    history.to_csv(paths["history"], index=False, float_format="%.10g")
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        simplejson.dump(manifest, fh, sort_keys=True, indent=2)
    print(f"   📁 Artifacts written to {out_dir}")
    return paths
