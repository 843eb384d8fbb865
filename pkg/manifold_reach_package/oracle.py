# -*- coding: utf-8 -*-
"""
Ground truth for the circle-constrained particle.

On a circle of radius r with speed bound u_max, optimal travel is angular at
omega = u_max / r. With phi the angle between (x - center) and
(goal - center), the reach value is the chord distance left after travelling
for the remaining time:

    V(t, x) = 2 r sin(max(0, phi - omega (T - t)) / 2)

and x belongs to the backward reachable set at t iff phi <= omega (T - t).
For the default setup (r = 0.5, goal (0.5, 0), u_max = 1) this is
sin(max(0, arccos(2 x1) - 2 (T - t)) / 2) and 1/2 arccos(2 x1) <= T - t.

An independent first-order grid solver on the periodic angle coordinate
checks the closed form, and the classification helpers score any value
source (closed form, grid, trained network) against the exact set.

Public API:
  - CircleReachSpec
  - ground_truth_brs_member(spec, t, x) / ground_truth_brs_member_batch(spec, t, X)
  - geodesic_value(spec, t, x) / geodesic_value_batch(spec, t, X)
  - optimal_travel_distance(spec, t, x, n_steps)
  - GridSolution, grid_solve_circle(spec, n_theta, n_time=None)
  - ConfusionReport, classify_brs(value_source, spec, t, n_theta, threshold)
  - calibrate_threshold(value_source, spec, t, n_theta, candidates)
  - brs_profile(value_source, spec, t, n_theta, threshold) -> pd.DataFrame
  - standard_time_slices(spec), table_rows(reports) -> pd.DataFrame

"""

from __future__ import annotations

import logging
import math
import time
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from attrs import field, frozen
from scipy.interpolate import RegularGridInterpolator
from tqdm import tqdm

from manifold_reach_package.errors import ConfigError, InvalidInputError
from manifold_reach_package.geometry import Circle, assert_on_manifold
from manifold_reach_package.problem import GoalDistance, ReachabilityProblem
from manifold_reach_package.value_net import ValueModel


ON_CIRCLE_TOLERANCE = 1e-6
BOUNDARY_TOLERANCE = 1e-12
CFL_LIMIT = 0.9
DEFAULT_THRESHOLD = 0.02
MIN_GRID_THETA = 64
MIN_CLASSIFY_THETA = 360
PI_FRACTION_TOL = 1e-9


# ---------------------------------------------------------------------------
# Setup
# ---------------------------------------------------------------------------

def _pair(values) -> Tuple[float, float]:
    out = tuple(float(v) for v in np.asarray(values, dtype=float).ravel())
    if len(out) != 2:
        raise ValueError(f"expected a planar point, got {values!r}")
    return out


@frozen
class CircleReachSpec:
    """Circle reach setup (defaults: radius 0.5 at the origin, goal (0.5, 0), u_max 1, T = pi/2)."""

    radius: float = field(default=0.5, converter=float)
    center: Tuple[float, float] = field(default=(0.0, 0.0), converter=_pair)
    goal: Tuple[float, float] = field(default=(0.5, 0.0), converter=_pair)
    u_max: float = field(default=1.0, converter=float)
    horizon: float = field(default=math.pi / 2, converter=float)

    def __attrs_post_init__(self) -> None:
        for name in ("radius", "u_max", "horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        off = abs(math.dist(self.goal, self.center) - self.radius)
        if off > ON_CIRCLE_TOLERANCE:
            raise ValueError(f"goal {self.goal} is {off:.3e} off the circle")

    @property
    def circle(self) -> Circle:
        return Circle(radius=self.radius, center=self.center)

    @property
    def angular_speed(self) -> float:
        return self.u_max / self.radius

    @property
    def goal_angle(self) -> float:
        return math.atan2(self.goal[1] - self.center[1], self.goal[0] - self.center[0])

    def point_at(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.column_stack([
            self.center[0] + self.radius * np.cos(theta),
            self.center[1] + self.radius * np.sin(theta),
        ])

    @classmethod
    def from_problem(cls, problem: ReachabilityProblem) -> "CircleReachSpec":
        """Oracle setup matching a single-agent circle reach problem."""
        if problem.is_game or not isinstance(problem.constraint, Circle) \
                or not isinstance(problem.terminal, GoalDistance):
            raise InvalidInputError("the oracle covers single-agent circle reach problems only")
        return cls(
            radius=problem.constraint.radius,
            center=problem.constraint.center,
            goal=problem.terminal.goal,
            u_max=problem.bounds.u_max,
            horizon=problem.horizon,
        )

    def to_dict(self) -> Dict:
        return {
            "radius": self.radius,
            "center": list(self.center),
            "goal": list(self.goal),
            "u_max": self.u_max,
            "horizon": self.horizon,
        }


# ---------------------------------------------------------------------------
# Closed form
# ---------------------------------------------------------------------------

def _goal_angles(spec: CircleReachSpec, X) -> np.ndarray:
    """Angle phi in [0, pi] between (x - center) and (goal - center), per row."""
    X = assert_on_manifold(spec.circle, X, ON_CIRCLE_TOLERANCE, "point")
    c = np.asarray(spec.center)
    u = X - c
    g = np.asarray(spec.goal) - c
    cos = (u @ g) / (np.linalg.norm(u, axis=1) * np.linalg.norm(g))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def ground_truth_brs_member_batch(spec: CircleReachSpec, t: float, X) -> np.ndarray:
    """Boolean membership of every row of ``X`` in the exact backward reachable set at ``t``."""
    reach = spec.angular_speed * (spec.horizon - float(t))
    return _goal_angles(spec, X) <= reach + BOUNDARY_TOLERANCE


def ground_truth_brs_member(spec: CircleReachSpec, t: float, x) -> bool:
    """
    Whether the on-circle point ``x`` can reach the goal by time T starting at ``t``.

    Raises
    ------
    PreconditionError
        If ||C(x)|| > 1e-6.

    Examples
    --------
    >>> spec = CircleReachSpec()
    >>> ground_truth_brs_member(spec, spec.horizon - 3 * math.pi / 8, (-0.5, 0.0))
    False
    """
    return bool(ground_truth_brs_member_batch(spec, t, np.asarray(x, dtype=float)[None, :])[0])


def geodesic_value_batch(spec: CircleReachSpec, t: float, X) -> np.ndarray:
    remaining = _goal_angles(spec, X) - spec.angular_speed * (spec.horizon - float(t))
    return 2.0 * spec.radius * np.sin(np.maximum(remaining, 0.0) / 2.0)


def geodesic_value(spec: CircleReachSpec, t: float, x) -> float:
    """Exact reach value at (t, x); zero exactly on the reachable set and ||x - goal|| at t = T."""
    return float(geodesic_value_batch(spec, t, np.asarray(x, dtype=float)[None, :])[0])


def optimal_travel_distance(spec: CircleReachSpec, t: float, x, n_steps: int = 2000) -> float:
    """Chord distance to the goal after simulating optimal angular travel from (t, x) to T.

    The particle moves along the shorter arc at full speed and stops at the goal.
    """
    phi = float(_goal_angles(spec, np.asarray(x, dtype=float)[None, :])[0])
    dt = (spec.horizon - float(t)) / max(int(n_steps), 1)
    step = spec.angular_speed * dt
    for _ in range(int(n_steps)):
        if phi <= 0.0:
            break
        phi = max(phi - step, 0.0)
    return 2.0 * spec.radius * math.sin(phi / 2.0)


# ---------------------------------------------------------------------------
# Grid solver
# ---------------------------------------------------------------------------

@frozen(eq=False)
class GridSolution:
    """Tabulated value over (time, angle) with linear interpolation.

    ``values[k, j]`` approximates V(times[k], theta_j) with theta_j = 2 pi j / n_theta
    measured around ``spec.center``.
    """

    spec: CircleReachSpec
    times: np.ndarray
    thetas: np.ndarray
    values: np.ndarray
    _interpolator: RegularGridInterpolator = field(init=False, repr=False)

    def __attrs_post_init__(self) -> None:
        # Close the periodic grid so interpolation covers [0, 2 pi].
        thetas = np.append(self.thetas, 2.0 * math.pi)
        values = np.concatenate([self.values, self.values[:, :1]], axis=1)
        object.__setattr__(
            self, "_interpolator",
            RegularGridInterpolator((self.times, thetas), values, method="linear"),
        )

    @property
    def n_theta(self) -> int:
        return len(self.thetas)

    def value_at(self, t, theta) -> np.ndarray:
        theta = np.mod(np.asarray(theta, dtype=float), 2.0 * math.pi)
        t = np.broadcast_to(np.clip(np.asarray(t, dtype=float), self.times[0], self.times[-1]), theta.shape)
        return self._interpolator(np.column_stack([t.ravel(), theta.ravel()])).reshape(theta.shape)

    def value(self, t, X) -> np.ndarray:
        X = assert_on_manifold(self.spec.circle, X, ON_CIRCLE_TOLERANCE, "point")
        c = np.asarray(self.spec.center)
        return self.value_at(t, np.arctan2(X[:, 1] - c[1], X[:, 0] - c[0]))


def grid_solve_circle(
    spec: CircleReachSpec,
    n_theta: int = 512,
    n_time: Optional[int] = None,
    show_progress: bool = False,
) -> GridSolution:
    """
    Solve dV/dt + min{0, -omega |dV/dtheta|} = 0 backward from V(T) = l on a periodic angle grid.

    Uses a monotone Lax-Friedrichs scheme with dissipation omega, followed by
    the BRT minimum with the previous slice.

    Parameters
    ----------
    spec : CircleReachSpec
    n_theta : int, default 512
        Angle cells (>= 64).
    n_time : int, optional
        Time steps. Default is the smallest count meeting the CFL limit 0.9.
    show_progress : bool, default False

    Raises
    ------
    ConfigError
        If n_theta < 64 or omega dt / dtheta > 0.9.
    """
    if int(n_theta) < MIN_GRID_THETA:
        raise ConfigError(f"n_theta must be >= {MIN_GRID_THETA}, got {n_theta}", field="evaluation.n_theta")
    n_theta = int(n_theta)
    omega = spec.angular_speed
    dtheta = 2.0 * math.pi / n_theta
    if n_time is None:
        n_time = max(1, math.ceil(omega * spec.horizon / (CFL_LIMIT * dtheta)))
    n_time = int(n_time)
    if n_time < 1:
        raise ConfigError(f"n_time must be >= 1, got {n_time}", field="evaluation.n_time")
    dt = spec.horizon / n_time
    cfl = omega * dt / dtheta
    if cfl > CFL_LIMIT + 1e-12:
        raise ConfigError(
            f"CFL number {cfl:.3f} exceeds {CFL_LIMIT} (n_theta={n_theta}, n_time={n_time})",
            field="evaluation.n_time",
        )

    t0 = time.perf_counter()
    thetas = dtheta * np.arange(n_theta)
    times = np.linspace(0.0, spec.horizon, n_time + 1)
    values = np.empty((n_time + 1, n_theta))
    values[-1] = np.linalg.norm(spec.point_at(thetas) - np.asarray(spec.goal), axis=1)

    steps = range(n_time - 1, -1, -1)
    if show_progress:
        steps = tqdm(steps, total=n_time, desc="Grid solve", unit="step")
    for k in steps:
        V = values[k + 1]
        p_plus = (np.roll(V, -1) - V) / dtheta
        p_minus = (V - np.roll(V, 1)) / dtheta
        p_mean = 0.5 * (p_plus + p_minus)
        numerical_h = -omega * np.abs(p_mean) + 0.5 * omega * (p_plus - p_minus)
        values[k] = np.minimum(V, V + dt * numerical_h)

    logging.info(f"grid solve: n_theta={n_theta}, n_time={n_time}, CFL={cfl:.3f}, "
                 f"{time.perf_counter() - t0:.2f}s")
    return GridSolution(spec=spec, times=times, thetas=thetas, values=values)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _safe_div(num: float, den: float) -> float:
    """Return num / den guarding against division by zero."""
    if den is None or den <= 0:
        return 0.0
    return float(num) / float(den)


def _time_label(offset: float) -> str:
    if abs(offset) <= PI_FRACTION_TOL:
        return "T"
    eighths = round(offset / (math.pi / 8))
    if eighths > 0 and abs(offset - eighths * math.pi / 8) <= PI_FRACTION_TOL:
        frac = Fraction(eighths, 8)
        num = "" if frac.numerator == 1 else str(frac.numerator)
        den = "" if frac.denominator == 1 else f"/{frac.denominator}"
        return f"T-{num}pi{den}"
    return f"T-{offset:.4f}"


@frozen
class ConfusionReport:
    """Counts and percentage metrics of one BRS classification slice."""

    tp: int
    fp: int
    tn: int
    fn: int
    t: float
    horizon: float
    n_theta: int
    threshold: float
    source: str = "network"
    constrained: Optional[bool] = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return 100.0 * _safe_div(self.tp + self.tn, self.total)

    @property
    def recall(self) -> float:
        return 100.0 * _safe_div(self.tp, self.tp + self.fn)

    @property
    def precision(self) -> float:
        return 100.0 * _safe_div(self.tp, self.tp + self.fp)

    @property
    def f1(self) -> float:
        return _safe_div(2.0 * self.precision * self.recall, self.precision + self.recall)

    @property
    def time_label(self) -> str:
        """Offset from the horizon, as a multiple of pi/8 when it is one (T-pi/8, T-3pi/8)."""
        return _time_label(self.horizon - self.t)

    def to_row(self) -> Dict:
        """Row in the results-table layout."""
        if self.constrained is None:
            manifold = "n/a"
        else:
            manifold = "w/" if self.constrained else "w/o"
        return {
            "time_slice": self.time_label,
            "t": self.t,
            "manifold": manifold,
            "source": self.source,
            "Acc": round(self.accuracy, 2),
            "Rec": round(self.recall, 2),
            "Prec": round(self.precision, 2),
            "F1": round(self.f1, 2),
            "TP": self.tp,
            "FP": self.fp,
            "TN": self.tn,
            "FN": self.fn,
            "n_theta": self.n_theta,
            "threshold": self.threshold,
        }


ValueSource = Union[str, GridSolution, ValueModel, Callable[[float, np.ndarray], np.ndarray]]


def _resolve_source(value_source: ValueSource, spec: CircleReachSpec
                    ) -> Tuple[Callable[[float, np.ndarray], np.ndarray], str, Optional[bool]]:
    """(value function, label, constrained flag) for a value source."""
    if isinstance(value_source, str):
        if value_source == "analytic":
            return (lambda t, X: geodesic_value_batch(spec, t, X)), "analytic", None
        if value_source == "grid":
            return grid_solve_circle(spec).value, "grid", None
        raise InvalidInputError(f"value_source must be 'analytic', 'grid' or a model, got {value_source!r}")
    if isinstance(value_source, GridSolution):
        return value_source.value, "grid", None
    if isinstance(value_source, ValueModel):
        constrained = None
        if value_source.problem is not None:
            constrained = bool(value_source.problem.get("constrained", True))
        return value_source.value, "network", constrained
    if callable(value_source):
        return value_source, "callable", None
    raise InvalidInputError(f"unsupported value_source {type(value_source).__name__}")


def _slice_points(spec: CircleReachSpec, n_theta: int, offset: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    thetas = (np.arange(n_theta) + offset) * (2.0 * math.pi / n_theta)
    return thetas, spec.point_at(thetas)


def _confusion(pred: np.ndarray, truth: np.ndarray) -> Tuple[int, int, int, int]:
    return (
        int(np.sum(pred & truth)),
        int(np.sum(pred & ~truth)),
        int(np.sum(~pred & ~truth)),
        int(np.sum(~pred & truth)),
    )


def classify_brs(
    value_source: ValueSource,
    spec: CircleReachSpec,
    t: float,
    n_theta: int = 720,
    threshold: float = DEFAULT_THRESHOLD,
) -> ConfusionReport:
    """
    Score predicted BRS membership (value <= threshold) against the exact set.

    Parameters
    ----------
    value_source : {"analytic", "grid"}, GridSolution, ValueModel or callable
        Any object mapping (t, X) to values; strings select the closed form or
        a default-resolution grid solve.
    spec : CircleReachSpec
    t : float
        Time slice.
    n_theta : int, default 720
        Uniformly spaced evaluation points on the circle (>= 360).
    threshold : float, default 0.02

    Returns
    -------
    ConfusionReport
        Positives are points inside the reachable set.
    """
    if int(n_theta) < MIN_CLASSIFY_THETA:
        raise InvalidInputError(f"n_theta must be >= {MIN_CLASSIFY_THETA}, got {n_theta}")
    fn_value, label, constrained = _resolve_source(value_source, spec)
    _, X = _slice_points(spec, int(n_theta))
    truth = ground_truth_brs_member_batch(spec, t, X)
    pred = np.asarray(fn_value(t, X), dtype=float) <= threshold
    tp, fp, tn, fn = _confusion(pred, truth)
    return ConfusionReport(
        tp=tp, fp=fp, tn=tn, fn=fn,
        t=float(t), horizon=spec.horizon, n_theta=int(n_theta), threshold=float(threshold),
        source=label, constrained=constrained,
    )


def calibrate_threshold(
    value_source: ValueSource,
    spec: CircleReachSpec,
    t: float,
    n_theta: int = 720,
    candidates: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """Threshold maximizing F1 on a calibration slice offset by half a cell.

    The calibration points are disjoint from the evaluation points of
    :func:`classify_brs`. Ties resolve to the smallest threshold.

    Returns
    -------
    (threshold, f1) : (float, float)
    """
    fn_value, _, _ = _resolve_source(value_source, spec)
    if candidates is None:
        candidates = np.linspace(0.0, 0.2, 201)
    _, X = _slice_points(spec, int(n_theta), offset=0.5)
    truth = ground_truth_brs_member_batch(spec, t, X)
    values = np.asarray(fn_value(t, X), dtype=float)

    best, best_f1 = float(candidates[0]), -1.0
    for delta in candidates:
        tp, fp, _, fn = _confusion(values <= delta, truth)
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = 100.0 * _safe_div(2.0 * precision * recall, precision + recall)
        if f1 > best_f1:
            best, best_f1 = float(delta), f1
    return best, best_f1


def brs_profile(
    value_source: ValueSource,
    spec: CircleReachSpec,
    t: float,
    n_theta: int = 720,
    threshold: float = DEFAULT_THRESHOLD,
) -> pd.DataFrame:
    """Dense per-angle frame: angle, x1, x2, value, truth, prediction."""
    fn_value, _, _ = _resolve_source(value_source, spec)
    thetas, X = _slice_points(spec, int(n_theta))
    values = np.asarray(fn_value(t, X), dtype=float)
    return pd.DataFrame({
        "angle": thetas,
        "x1": X[:, 0],
        "x2": X[:, 1],
        "value": values,
        "truth": ground_truth_brs_member_batch(spec, t, X),
        "prediction": values <= threshold,
    })


def standard_time_slices(spec: CircleReachSpec) -> List[float]:
    """The evaluation slices T - pi/8, T - pi/4, T - 3 pi/8 (those inside [0, T])."""
    slices = [spec.horizon - k * math.pi / 8 for k in (1, 2, 3)]
    return [t for t in slices if t >= 0.0]


def table_rows(reports: Iterable[ConfusionReport]) -> pd.DataFrame:
    """Results table, one row per report, ordered by time slice then manifold flag."""
    rows = [r.to_row() for r in reports]
    if not rows:
        return pd.DataFrame(columns=["time_slice", "manifold", "Acc", "Rec", "Prec", "F1"])
    df = pd.DataFrame(rows)
    return df.sort_values(["t", "manifold"], ascending=[False, True], kind="stable").reset_index(drop=True)


def evaluate_slices(
    value_source: ValueSource,
    spec: CircleReachSpec,
    times: Optional[Sequence[float]] = None,
    n_theta: int = 720,
    threshold: float = DEFAULT_THRESHOLD,
    show_progress: bool = True,
) -> List[ConfusionReport]:
    """:func:`classify_brs` over several slices (default: the standard three)."""
    times = list(times) if times is not None else standard_time_slices(spec)
    print(f"🔍 Classifying reachable set on {len(times)} slice(s), {n_theta} points each")
    reports = [classify_brs(value_source, spec, t, n_theta, threshold) for t in times]
    if show_progress:
        for r in reports:
            print(f"   📊 {r.time_label}: Acc {r.accuracy:.1f}  Rec {r.recall:.1f}  "
                  f"Prec {r.precision:.1f}  F1 {r.f1:.1f}")
    return reports
