# -*- coding: utf-8 -*-
"""
Command-line entry point: ``manifold-reach``.

Commands
--------
  train      train a value network from a run config
  eval-brs   classify the reachable set of a circle model against ground truth
  simulate   paired multi-agent benchmark with a pairwise safety model
  plan       one planning call for a configured scenario, dumped as JSON

Every command writes ``manifest.json`` into its output directory. Exit codes:
0 success, 2 configuration error, 3 runtime abort.
"""

from __future__ import annotations

import logging
import os
import sys
from functools import wraps
from typing import Optional

import click
import numpy as np
import pandas as pd
import simplejson
import torch
from attrs import evolve

from manifold_reach_package.config import (
    RunConfig,
    build_manifest,
    load_config,
    parse_config,
    write_manifest,
)
from manifold_reach_package.errors import ConfigError, InvalidInputError, ManifoldReachError
from manifold_reach_package.oracle import (
    CircleReachSpec,
    brs_profile,
    calibrate_threshold,
    evaluate_slices,
    standard_time_slices,
    table_rows,
)
from manifold_reach_package.planner import plan_step
from manifold_reach_package.problem import circle_reach_problem, problem_from_dict
from manifold_reach_package.simulator import (
    ControllerKind,
    Scenario,
    run_benchmark,
    template_scenario,
)
from manifold_reach_package.trainer import default_architecture, train_model, write_training_artifacts
from manifold_reach_package.value_net import ValueModel, load_model


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---------------------------------------------------------------------------
# Internal helpers
# ---------------------------------------------------------------------------

def _exit_codes(command):
    """Map package errors onto the CLI exit-code contract."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            command(*args, **kwargs)
        except ConfigError as e:
            where = f" [{e.field}]" if e.field else ""
            click.echo(f"configuration error{where}: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except (ManifoldReachError, RuntimeError) as e:
            click.echo(f"aborted: {e}", err=True)
            sys.exit(EXIT_RUNTIME)
        sys.exit(EXIT_OK)
    return wrapper


def _load(config_path: Optional[str], seed: Optional[int]) -> RunConfig:
    config = load_config(config_path) if config_path else parse_config({})
    return config.with_seed(seed)


def _out_dir(config: RunConfig, out: Optional[str]) -> str:
    path = out or config.output.directory
    os.makedirs(path, exist_ok=True)
    return path


def _set_threads(threads: Optional[int]) -> None:
    if threads is not None:
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads}", field="threads")
        torch.set_num_threads(threads)


def _load_model(path: Optional[str]) -> ValueModel:
    if not path:
        raise ConfigError("no model file given (use --model or the 'model' config key)", field="model")
    try:
        return load_model(path)
    except OSError as e:
        raise ConfigError(f"cannot read model {path}: {e}", field="model") from e
    except InvalidInputError as e:
        raise ConfigError(str(e), field="model") from e


def _model_problem(model: ValueModel):
    if model.problem is None:
        raise ConfigError("model file carries no problem description", field="model")
    return problem_from_dict(model.problem, "model.problem")


def _common_options(command):
    command = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                           help="JSON run config.")(command)
    command = click.option("--out", type=click.Path(file_okay=False), help="Output directory.")(command)
    command = click.option("--seed", type=int, help="Overrides training and benchmark seeds.")(command)
    command = click.option("--threads", type=int, help="torch intra-op threads.")(command)
    return command


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
@click.option("--verbose", is_flag=True, help="Log progress at INFO level.")
def main(verbose: bool) -> None:
    """Reachability value learning and safe planning on constraint manifolds."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )


@main.command("train")
@_common_options
@click.option("--quiet", is_flag=True, help="Hide the progress bar.")
@_exit_codes
def cmd_train(config_path, out, seed, threads, quiet) -> None:
    """Train a value network; writes the model, loss history and manifest."""
    config = _load(config_path, seed)
    _set_threads(threads)
    problem = config.problem or circle_reach_problem()
    try:
        arch = default_architecture(problem, **config.architecture)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"architecture: {e}", field="architecture") from e
    training = evolve(config.training, threads=threads) if threads else config.training

    out_dir = _out_dir(config, out)
    model, history = train_model(problem, arch, training, show_progress=not quiet)
    manifest = build_manifest(
        "train", config, {"training": training.seed},
        extra={"problem": problem.to_dict(), "architecture": arch.to_dict()},
    )
    write_training_artifacts(out_dir, model, history, manifest)


@main.command("eval-brs")
@_common_options
@click.option("--model", "model_path", type=click.Path(dir_okay=False), help="Trained model file.")
@click.option("--t", "times", type=float, multiple=True, help="Time slice (repeatable).")
@click.option("--n-theta", type=int, help="Evaluation points on the circle.")
@click.option("--threshold", type=float, help="Membership threshold on the value.")
@click.option("--analytic", is_flag=True, help="Score the closed-form value instead of a model.")
@click.option("--calibrate", is_flag=True, help="Also report the F1-maximizing threshold.")
@_exit_codes
def cmd_eval_brs(config_path, out, seed, threads, model_path, times, n_theta, threshold,
                 analytic, calibrate) -> None:
    """Classify the reachable set at several time slices against ground truth."""
    config = _load(config_path, seed)
    _set_threads(threads)
    evaluation = config.evaluation
    n_theta = n_theta or evaluation.n_theta
    threshold = evaluation.threshold if threshold is None else threshold
    calibrate = calibrate or evaluation.calibrate

    if analytic:
        source = "analytic"
        problem = config.problem or circle_reach_problem()
    else:
        source = _load_model(model_path or config.model)
        problem = _model_problem(source)
    try:
        spec = CircleReachSpec.from_problem(problem)
    except InvalidInputError as e:
        raise ConfigError(f"model/problem mismatch: {e}", field="model") from e

    slices = list(times) or list(evaluation.time_slices or standard_time_slices(spec))
    out_dir = _out_dir(config, out)
    reports = evaluate_slices(source, spec, slices, n_theta, threshold)
    table = table_rows(reports)

    calibration = []
    if calibrate:
        for t in slices:
            delta, f1 = calibrate_threshold(source, spec, t, n_theta)
            calibration.append({"t": t, "threshold": delta, "F1": f1})
            click.echo(f"calibrated threshold at t={t:.4f}: {delta:.4f} (F1 {f1:.2f})")
        pd.DataFrame(calibration).to_csv(os.path.join(out_dir, "brs_calibration.csv"), index=False)

    table.to_csv(os.path.join(out_dir, "brs_table.csv"), index=False)
    for i, t in enumerate(slices):
        brs_profile(source, spec, t, n_theta, threshold).to_csv(
            os.path.join(out_dir, f"brs_profile_{i}.csv"), index=False, float_format="%.10g"
        )
    write_manifest(out_dir, build_manifest(
        "eval-brs", config, {},
        extra={"spec": spec.to_dict(), "time_slices": slices, "n_theta": n_theta,
               "threshold": threshold, "source": "analytic" if analytic else (model_path or config.model)},
    ))


def _base_scenario(config: RunConfig, problem) -> Scenario:
    agents = config.scenario.agent_specs()
    if agents is not None:
        return Scenario(agents=agents, problem=problem, dt=config.scenario.dt,
                        max_steps=config.scenario.max_steps, plan=config.planning)
    return template_scenario(
        problem, config.scenario.n_agents, config.scenario.agent_radius,
        dt=config.scenario.dt, max_steps=config.scenario.max_steps, plan=config.planning,
    )


@main.command("simulate")
@_common_options
@click.option("--model", "model_path", type=click.Path(dir_okay=False), help="Pairwise safety model file.")
@click.option("--quiet", is_flag=True, help="Hide the progress bar.")
@_exit_codes
def cmd_simulate(config_path, out, seed, threads, model_path, quiet) -> None:
    """Run the paired benchmark; writes benchmark.csv, trials.csv and trial logs."""
    config = _load(config_path, seed)
    _set_threads(threads)
    bench = config.benchmark
    if bench.seed is None:
        raise ConfigError("benchmark.seed is required (or pass --seed)", field="benchmark.seed")
    model = _load_model(model_path or config.model)
    problem = _model_problem(model)
    if not problem.is_game:
        raise ConfigError("simulation needs a pairwise avoid-game model", field="model")
    try:
        base = _base_scenario(config, problem)
    except ValueError as e:
        raise ConfigError(f"scenario: {e}", field="scenario") from e

    out_dir = _out_dir(config, out)
    report = run_benchmark(
        base, bench.n_trials, bench.seed, net=model,
        methods=[ControllerKind(m) for m in bench.methods],
        n_workers=bench.n_workers,
        log_dir=os.path.join(out_dir, "logs") if bench.write_logs else None,
        show_progress=not quiet,
        **config.scenario.generator_kwargs(),
    )
    report.to_csv(os.path.join(out_dir, "benchmark.csv"))
    report.trials.to_csv(os.path.join(out_dir, "trials.csv"), index=False, float_format="%.6g")
    write_manifest(out_dir, build_manifest(
        "simulate", config, {"benchmark": bench.seed},
        extra={"model": model_path or config.model},
    ))


@main.command("plan")
@_common_options
@click.option("--model", "model_path", type=click.Path(dir_okay=False), help="Pairwise safety model file.")
@click.option("--agent", type=int, default=0, show_default=True, help="Index of the planning agent.")
@_exit_codes
def cmd_plan(config_path, out, seed, threads, model_path, agent) -> None:
    """Plan once for one agent of the configured scenario and dump the result."""
    config = _load(config_path, seed)
    _set_threads(threads)
    model = _load_model(model_path or config.model)
    problem = _model_problem(model)
    try:
        scenario = _base_scenario(config, problem)
    except ValueError as e:
        raise ConfigError(f"scenario: {e}", field="scenario") from e
    if not 0 <= agent < scenario.n_agents:
        raise ConfigError(f"--agent must lie in [0, {scenario.n_agents})", field="agent")

    states = np.asarray([a.start for a in scenario.agents])
    result = plan_step(
        states[agent], np.delete(states, agent, axis=0), scenario.agents[agent].goal,
        problem, model, config.planning,
    )
    payload = result.to_log()
    payload["predicted_states"] = result.predicted_states.tolist()

    out_dir = _out_dir(config, out)
    with open(os.path.join(out_dir, "plan.json"), "w", encoding="utf-8") as fh:
        simplejson.dump(payload, fh, sort_keys=True, indent=2)
    write_manifest(out_dir, build_manifest("plan", config, {}, extra={"agent": agent}))
    click.echo(simplejson.dumps({k: payload[k] for k in ("status", "min_margin", "iterations")}))


if __name__ == "__main__":
    main()
