# -*- coding: utf-8 -*-
"""
Constraint manifolds M = {x | C(x) = 0} and the algebra around them.

Built-in constraint kinds (all with closed-form Jacobians):
  - Circle(radius, center)          c(x) = ||x - center|| - radius, x in R^2
  - Sphere(radius, center)          same in R^n, n >= 3
  - AffinePlane(normals, offsets)   C(x) = A x - b
  - Product(blocks, n_d)            block-diagonal stack of constraints acting
                                    on disjoint index ranges

Every per-point operation has a batched twin working on (B, n_d) arrays; the
per-point versions validate their inputs and delegate.

Public API:
  - evaluate_constraint(c, x) / evaluate_constraint_batch(c, X)
  - constraint_jacobian(c, x) / constraint_jacobian_batch(c, X)
  - finite_difference_jacobian(c, x, step=1e-6)
  - tangent_projection(c, x) -> ProjectionMatrix / tangent_projection_batch(c, X)
  - retract(c, x, basin=0.25)
  - sample_on_manifold(c, count, rng_seed) -> np.ndarray (count, n_d)
  - geodesic_distance(c, x, y)
  - ambient_bounds(c) -> (low, high)
  - assert_on_manifold(c, X, tolerance, label)
  - constraint_from_config(spec) / constraint_to_config(c)

"""

from __future__ import annotations

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from attrs import field, frozen, validators

from manifold_reach_package.errors import (
    ConfigError,
    InvalidInputError,
    PreconditionError,
    RetractionError,
    SamplingError,
    SingularityError,
)


FD_STEP = 1e-6
RANK_TOLERANCE = 1e-8
TIKHONOV = 1e-10
RETRACT_TOLERANCE = 1e-10
RETRACT_MAX_ITER = 50
DEFAULT_BASIN = 0.25
SAMPLE_RETRIES = 10

_SINGULAR_RADIUS = 1e-12


# ---------------------------------------------------------------------------
# Constraint kinds
# ---------------------------------------------------------------------------

def _to_float_tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


def _to_matrix_tuple(rows) -> Tuple[Tuple[float, ...], ...]:
    arr = np.atleast_2d(np.asarray(rows, dtype=float))
    return tuple(tuple(float(v) for v in row) for row in arr)


def _positive(instance, attribute, value) -> None:
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{attribute.name} must be a positive finite number, got {value!r}")


class ManifoldConstraint:
    """Base class: an equality-constraint system C(x) = 0 in R^n_d.

    Subclasses implement ``_residual_batch`` (B, n_c), ``_jacobian_batch``
    (B, n_c, n_d) and ``_bounds``.
    """

    kind: str = "abstract"
    analytic_jacobian: bool = True

    @property
    def n_d(self) -> int:
        raise NotImplementedError

    @property
    def n_c(self) -> int:
        raise NotImplementedError

    def _residual_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n_d
        return -np.ones(n), np.ones(n)


@frozen
class Circle(ManifoldConstraint):
    """Circle of ``radius`` around ``center`` in the plane."""

    radius: float = field(converter=float, validator=_positive)
    center: Tuple[float, ...] = field(default=(0.0, 0.0), converter=_to_float_tuple)

    kind = "circle"

    @center.validator
    def _check_center(self, attribute, value) -> None:
        if len(value) != 2:
            raise ValueError(f"circle center must have length 2, got {len(value)}")

    @property
    def n_d(self) -> int:
        return 2

    @property
    def n_c(self) -> int:
        return 1

    def _residual_batch(self, X: np.ndarray) -> np.ndarray:
        return _radial_residual(X, np.asarray(self.center), self.radius)

    def _jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        return _radial_jacobian(X, np.asarray(self.center), self.kind)

    def _bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@frozen
class Sphere(ManifoldConstraint):
    """Sphere of ``radius`` around ``center`` in R^n (n >= 3)."""

    radius: float = field(converter=float, validator=_positive)
    center: Tuple[float, ...] = field(default=(0.0, 0.0, 0.0), converter=_to_float_tuple)

    kind = "sphere"

    @center.validator
    def _check_center(self, attribute, value) -> None:
        if len(value) < 3:
            raise ValueError(f"sphere center must have length >= 3, got {len(value)}")

    @property
    def n_d(self) -> int:
        return len(self.center)

    @property
    def n_c(self) -> int:
        return 1

    def _residual_batch(self, X: np.ndarray) -> np.ndarray:
        return _radial_residual(X, np.asarray(self.center), self.radius)

    def _jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        return _radial_jacobian(X, np.asarray(self.center), self.kind)

    def _bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@frozen
class AffinePlane(ManifoldConstraint):
    """Affine subspace {x | A x = b}; rows of A are the constraint normals."""

    normals: Tuple[Tuple[float, ...], ...] = field(converter=_to_matrix_tuple)
    offsets: Tuple[float, ...] = field(converter=_to_float_tuple)

    kind = "affine_plane"

    def __attrs_post_init__(self) -> None:
        n_c, n_d = np.asarray(self.normals).shape
        if len(self.offsets) != n_c:
            raise ValueError(f"offsets must have length {n_c}, got {len(self.offsets)}")
        if not 0 < n_c < n_d:
            raise ValueError(f"affine plane needs 0 < n_c < n_d, got n_c={n_c}, n_d={n_d}")

    @property
    def n_d(self) -> int:
        return len(self.normals[0])

    @property
    def n_c(self) -> int:
        return len(self.normals)

    def _residual_batch(self, X: np.ndarray) -> np.ndarray:
        return X @ np.asarray(self.normals).T - np.asarray(self.offsets)

    def _jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        A = np.asarray(self.normals)
        return np.broadcast_to(A, (X.shape[0],) + A.shape).copy()


def _to_blocks(blocks) -> Tuple[Tuple[ManifoldConstraint, Tuple[int, int]], ...]:
    return tuple((c, (int(r[0]), int(r[1]))) for c, r in blocks)


@frozen
class Product(ManifoldConstraint):
    """Constraints acting on disjoint index ranges of one ambient vector.

    ``blocks`` is a sequence of ``(constraint, (start, stop))``. Coordinates not
    covered by any block are unconstrained. ``n_d`` defaults to the largest
    ``stop``.
    """

    blocks: Tuple[Tuple[ManifoldConstraint, Tuple[int, int]], ...] = field(converter=_to_blocks)
    ambient_dim: Optional[int] = field(default=None)

    kind = "product"

    def __attrs_post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("product constraint needs at least one block")
        covered = np.zeros(self.n_d, dtype=bool)
        for c, (start, stop) in self.blocks:
            if stop - start != c.n_d:
                raise ValueError(
                    f"block range ({start}, {stop}) does not match {c.kind} dimension {c.n_d}"
                )
            if start < 0 or stop > self.n_d:
                raise ValueError(f"block range ({start}, {stop}) outside ambient dimension {self.n_d}")
            if covered[start:stop].any():
                raise ValueError(f"block range ({start}, {stop}) overlaps another block")
            covered[start:stop] = True
        if self.n_c >= self.n_d:
            raise ValueError(f"product needs n_c < n_d, got n_c={self.n_c}, n_d={self.n_d}")

    @property
    def n_d(self) -> int:
        if self.ambient_dim is not None:
            return int(self.ambient_dim)
        return max(stop for _, (_, stop) in self.blocks)

    @property
    def n_c(self) -> int:
        return sum(c.n_c for c, _ in self.blocks)

    def _residual_batch(self, X: np.ndarray) -> np.ndarray:
        parts = [c._residual_batch(X[:, start:stop]) for c, (start, stop) in self.blocks]
        return np.concatenate(parts, axis=1)

    def _jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        J = np.zeros((X.shape[0], self.n_c, self.n_d))
        row = 0
        for c, (start, stop) in self.blocks:
            J[:, row:row + c.n_c, start:stop] = c._jacobian_batch(X[:, start:stop])
            row += c.n_c
        return J

    def _bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        low, high = -np.ones(self.n_d), np.ones(self.n_d)
        for c, (start, stop) in self.blocks:
            lo, hi = c._bounds()
            low[start:stop], high[start:stop] = lo, hi
        return low, high


def _radial_residual(X: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    return (np.linalg.norm(X - center, axis=1) - radius)[:, None]


def _radial_jacobian(X: np.ndarray, center: np.ndarray, kind: str) -> np.ndarray:
    diff = X - center
    norms = np.linalg.norm(diff, axis=1)
    bad = np.flatnonzero(norms < _SINGULAR_RADIUS)
    if bad.size:
        raise SingularityError(
            f"{kind} Jacobian is undefined at its center (point {X[bad[0]].tolist()})"
        )
    return (diff / norms[:, None])[:, None, :]


# ---------------------------------------------------------------------------
# Input validation
# ---------------------------------------------------------------------------

def _as_point(x, n_d: int, label: str = "x") -> np.ndarray:
    """Return ``x`` as a finite float vector of length ``n_d``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_d:
        raise InvalidInputError(f"{label} must be a vector of length {n_d}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{label} contains non-finite values: {arr.tolist()}")
    return arr


def _as_batch(X, n_d: int, label: str = "X") -> np.ndarray:
    """Return ``X`` as a finite (B, n_d) float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_d:
        raise InvalidInputError(f"{label} must have shape (B, {n_d}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{label} contains non-finite values")
    return arr


def assert_on_manifold(
    c: ManifoldConstraint,
    X,
    tolerance: float,
    label: str = "point",
) -> np.ndarray:
    """Raise PreconditionError naming the first point with ||C(x)|| > tolerance.

    Returns the validated (B, n_d) batch.
    """
    batch = _as_batch(X, c.n_d, label)
    violation = np.linalg.norm(c._residual_batch(batch), axis=1)
    bad = np.flatnonzero(violation > tolerance)
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(
            f"{label} {batch[i].tolist()} is off the {c.kind} manifold: "
            f"||C(x)|| = {violation[i]:.3e} > {tolerance:.1e}"
        )
    return batch


# ---------------------------------------------------------------------------
# Residual, Jacobian, projection
# ---------------------------------------------------------------------------

def evaluate_constraint(c: ManifoldConstraint, x) -> np.ndarray:
    """Return C(x), a vector of length ``c.n_c``.

    Examples
    --------
    >>> evaluate_constraint(Circle(0.5), [1.0, 0.0])
    array([0.5])
    """
    return c._residual_batch(_as_point(x, c.n_d)[None, :])[0]


def evaluate_constraint_batch(c: ManifoldConstraint, X) -> np.ndarray:
    """Return C(X) for a (B, n_d) batch as a (B, n_c) array."""
    return c._residual_batch(_as_batch(X, c.n_d))


def constraint_jacobian(c: ManifoldConstraint, x) -> np.ndarray:
    """Return J_C(x) with shape (n_c, n_d); row i is the gradient of c_i.

    Raises
    ------
    SingularityError
        At a point where the Jacobian is undefined (circle/sphere center).
    """
    return c._jacobian_batch(_as_point(x, c.n_d)[None, :])[0]


def constraint_jacobian_batch(c: ManifoldConstraint, X) -> np.ndarray:
    """Return J_C for every row of ``X`` as a (B, n_c, n_d) array."""
    return c._jacobian_batch(_as_batch(X, c.n_d))


def finite_difference_jacobian(c: ManifoldConstraint, x, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference Jacobian, used to check the analytic forms."""
    x = _as_point(x, c.n_d)
    J = np.zeros((c.n_c, c.n_d))
    for j in range(c.n_d):
        e = np.zeros(c.n_d)
        e[j] = step
        plus = c._residual_batch((x + e)[None, :])[0]
        minus = c._residual_batch((x - e)[None, :])[0]
        J[:, j] = (plus - minus) / (2.0 * step)
    return J


@frozen(eq=False)
class ProjectionMatrix:
    """Orthogonal projector onto the tangent space at a point.

    ``rank_deficient`` is True when J_C J_C^T had to be regularized.
    """

    matrix: np.ndarray
    rank_deficient: bool = False

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)


def _projection_from_jacobians(J: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """P = I - J^T (J J^T)^-1 J for a (B, n_c, n_d) stack of Jacobians."""
    B, n_c, n_d = J.shape
    sigma_min = np.linalg.svd(J, compute_uv=False)[:, -1]
    deficient = sigma_min < RANK_TOLERANCE
    gram = J @ np.transpose(J, (0, 2, 1))
    if deficient.any():
        gram = gram + np.where(deficient, TIKHONOV, 0.0)[:, None, None] * np.eye(n_c)
        logging.warning(
            f"Constraint Jacobian is rank deficient at {int(deficient.sum())} point(s); "
            f"using Tikhonov regularization {TIKHONOV:g}"
        )
    P = np.eye(n_d) - np.transpose(J, (0, 2, 1)) @ np.linalg.solve(gram, J)
    # symmetrize away round-off
    P = 0.5 * (P + np.transpose(P, (0, 2, 1)))
    return P, deficient


def tangent_projection(
    c: ManifoldConstraint,
    x,
    tolerance: float = 1e-3,
) -> ProjectionMatrix:
    """Return the tangent-space projector P(x) = I - J^T (J J^T)^-1 J.

    Parameters
    ----------
    c : ManifoldConstraint
    x : array-like, length n_d
        Point on or near the manifold (||C(x)|| <= ``tolerance``).
    tolerance : float, default 1e-3
        Allowed constraint violation; ``None`` skips the check.

    Returns
    -------
    ProjectionMatrix
        Symmetric idempotent projector. When the smallest singular value of
        J_C is below 1e-8 the Gram matrix is regularized with 1e-10 I and
        ``rank_deficient`` is set.

    Examples
    --------
    >>> tangent_projection(Circle(0.5), [0.5, 0.0]).matrix
    array([[0., 0.],
           [0., 1.]])
    """
    if tolerance is None:
        point = _as_point(x, c.n_d)[None, :]
    else:
        point = assert_on_manifold(c, _as_point(x, c.n_d), tolerance, "x")
    P, deficient = _projection_from_jacobians(c._jacobian_batch(point))
    return ProjectionMatrix(matrix=P[0], rank_deficient=bool(deficient[0]))


def tangent_projection_batch(c: ManifoldConstraint, X) -> Tuple[np.ndarray, np.ndarray]:
    """Projectors for every row of ``X``: ((B, n_d, n_d), (B,) rank-deficient flags)."""
    return _projection_from_jacobians(c._jacobian_batch(_as_batch(X, c.n_d)))


# ---------------------------------------------------------------------------
# Retraction
# ---------------------------------------------------------------------------

def retract(
    c: ManifoldConstraint,
    x_ambient,
    basin: Optional[float] = DEFAULT_BASIN,
    tolerance: float = RETRACT_TOLERANCE,
    max_iter: int = RETRACT_MAX_ITER,
) -> np.ndarray:
    """Project an ambient point back onto the manifold by Gauss-Newton normal flow.

    Iterates ``x <- x - J^T (J J^T)^-1 C(x)`` until ``||C(x)|| <= tolerance``.

    Parameters
    ----------
    c : ManifoldConstraint
    x_ambient : array-like, length n_d
    basin : float or None, default 0.25
        Largest accepted initial violation ||C(x)||; ``None`` disables the check.
    tolerance : float, default 1e-10
    max_iter : int, default 50

    Raises
    ------
    PreconditionError
        If the starting point lies outside the basin.
    RetractionError
        If the iteration does not converge within ``max_iter`` steps.
    SingularityError
        If an iterate hits a point where J_C is undefined.
    """
    x = _as_point(x_ambient, c.n_d, "x_ambient").copy()
    residual = c._residual_batch(x[None, :])[0]
    if basin is not None and np.linalg.norm(residual) > basin:
        raise PreconditionError(
            f"x_ambient {x.tolist()} lies outside the retraction basin: "
            f"||C(x)|| = {np.linalg.norm(residual):.3e} > {basin}"
        )
    for _ in range(max_iter):
        if np.linalg.norm(residual) <= tolerance:
            return x
        J = c._jacobian_batch(x[None, :])[0]
        x = x - J.T @ np.linalg.solve(J @ J.T, residual)
        residual = c._residual_batch(x[None, :])[0]
    if np.linalg.norm(residual) <= tolerance:
        return x
    raise RetractionError(
        f"retraction onto {c.kind} did not converge in {max_iter} iterations "
        f"(||C(x)|| = {np.linalg.norm(residual):.3e})"
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _sample_with_rng(c: ManifoldConstraint, count: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(c, Circle):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
        return np.asarray(c.center) + c.radius * np.column_stack([np.cos(theta), np.sin(theta)])

    if isinstance(c, Sphere):
        out = np.empty((count, c.n_d))
        filled = 0
        while filled < count:
            g = rng.standard_normal((count - filled, c.n_d))
            norms = np.linalg.norm(g, axis=1)
            g = g[norms > 1e-12]
            norms = norms[norms > 1e-12]
            take = g[: count - filled] / norms[: count - filled, None]
            out[filled:filled + len(take)] = take
            filled += len(take)
        return np.asarray(c.center) + c.radius * out

    if isinstance(c, Product):
        low, high = c._bounds()
        out = rng.uniform(low, high, size=(count, c.n_d))
        for block, (start, stop) in c.blocks:
            out[:, start:stop] = _sample_with_rng(block, count, rng)
        return out

    # general constraints: ambient box, then retract
    low, high = c._bounds()
    out = np.empty((count, c.n_d))
    for i in range(count):
        for attempt in range(SAMPLE_RETRIES):
            candidate = rng.uniform(low, high)
            try:
                out[i] = retract(c, candidate, basin=None)
                break
            except (RetractionError, SingularityError, np.linalg.LinAlgError) as e:
                logging.info(f"Resampling {c.kind} point after retraction failure: {e}")
        else:
            raise SamplingError(
                f"could not retract a sample onto {c.kind} after {SAMPLE_RETRIES} attempts"
            )
    return out


def sample_on_manifold(c: ManifoldConstraint, count: int, rng_seed: int) -> np.ndarray:
    """Draw ``count`` points on the manifold, deterministic per ``rng_seed``.

    Circles and spheres are sampled uniformly in their intrinsic coordinates
    (angle / direction), products block by block, and any other kind by
    sampling the ambient box and retracting.

    Returns
    -------
    numpy.ndarray
        Array of shape (count, n_d); every row satisfies ||C(x)|| <= 1e-8.

    Raises
    ------
    SamplingError
        If a general-constraint sample fails to retract 10 times in a row.
    """
    if int(count) < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(int(rng_seed))
    return _sample_with_rng(c, int(count), rng)


# ---------------------------------------------------------------------------
# Distances and bounds
# ---------------------------------------------------------------------------

def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < _SINGULAR_RADIUS or nv < _SINGULAR_RADIUS:
        raise SingularityError("angle is undefined at the manifold center")
    a, b = u / nu, v / nv
    return float(2.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def geodesic_distance(c: ManifoldConstraint, x, y) -> float:
    """Intrinsic distance between two on-manifold points.

    Arc length for circles and spheres, Euclidean distance for affine planes,
    and the root-sum-square of block distances (Euclidean on uncovered
    coordinates) for products.
    """
    x = _as_point(x, c.n_d, "x")
    y = _as_point(y, c.n_d, "y")
    if isinstance(c, (Circle, Sphere)):
        center = np.asarray(c.center)
        return c.radius * _angle_between(x - center, y - center)
    if isinstance(c, Product):
        covered = np.zeros(c.n_d, dtype=bool)
        total = 0.0
        for block, (start, stop) in c.blocks:
            total += geodesic_distance(block, x[start:stop], y[start:stop]) ** 2
            covered[start:stop] = True
        total += float(np.sum((x[~covered] - y[~covered]) ** 2))
        return float(np.sqrt(total))
    return float(np.linalg.norm(x - y))


def ambient_bounds(c: ManifoldConstraint) -> Tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box (low, high) enclosing the sampled region of the manifold."""
    low, high = c._bounds()
    return np.asarray(low, dtype=float), np.asarray(high, dtype=float)


# ---------------------------------------------------------------------------
# Config round-trip
# ---------------------------------------------------------------------------

_KIND_KEYS: Dict[str, set] = {
    "circle": {"kind", "radius", "center"},
    "sphere": {"kind", "radius", "center"},
    "affine_plane": {"kind", "normals", "offsets"},
    "product": {"kind", "blocks", "n_d"},
}


def constraint_from_config(spec: Dict, field_name: str = "constraint") -> ManifoldConstraint:
    """Build a constraint from ``{"kind": name, ...parameters}``.

    Raises
    ------
    ConfigError
        Unknown kind, unknown key or invalid parameter value (names the field).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{field_name} must be an object with a 'kind' key", field=field_name)
    kind = spec["kind"]
    if kind not in _KIND_KEYS:
        raise ConfigError(
            f"{field_name}.kind must be one of {sorted(_KIND_KEYS)}, got {kind!r}",
            field=f"{field_name}.kind",
        )
    unknown = sorted(set(spec) - _KIND_KEYS[kind])
    if unknown:
        raise ConfigError(f"unknown key(s) in {field_name}: {unknown}", field=f"{field_name}.{unknown[0]}")
    try:
        if kind == "circle":
            return Circle(radius=spec["radius"], center=spec.get("center", (0.0, 0.0)))
        if kind == "sphere":
            return Sphere(radius=spec["radius"], center=spec.get("center", (0.0, 0.0, 0.0)))
        if kind == "affine_plane":
            return AffinePlane(normals=spec["normals"], offsets=spec["offsets"])
        blocks = []
        for i, block in enumerate(spec["blocks"]):
            blocks.append(
                (
                    constraint_from_config(block["constraint"], f"{field_name}.blocks[{i}].constraint"),
                    tuple(block["range"]),
                )
            )
        return Product(blocks=blocks, ambient_dim=spec.get("n_d"))
    except KeyError as e:
        raise ConfigError(f"{field_name} is missing key {e}", field=f"{field_name}.{e.args[0]}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{field_name}: {e}", field=field_name) from e


def constraint_to_config(c: ManifoldConstraint) -> Dict:
    """Inverse of :func:`constraint_from_config`."""
    if isinstance(c, (Circle, Sphere)):
        return {"kind": c.kind, "radius": c.radius, "center": list(c.center)}
    if isinstance(c, AffinePlane):
        return {"kind": c.kind, "normals": [list(r) for r in c.normals], "offsets": list(c.offsets)}
    if isinstance(c, Product):
        out = {
            "kind": c.kind,
            "blocks": [
                {"constraint": constraint_to_config(b), "range": [start, stop]}
                for b, (start, stop) in c.blocks
            ],
        }
        if c.ambient_dim is not None:
            out["n_d"] = int(c.ambient_dim)
        return out
    raise ConfigError(f"cannot serialize constraint kind {c.kind!r}")


def pair_manifold(ego: ManifoldConstraint, adversary: ManifoldConstraint) -> Product:
    """Joint manifold of an (ego, adversary) pair, ego block first."""
    return Product(blocks=[(ego, (0, ego.n_d)), (adversary, (ego.n_d, ego.n_d + adversary.n_d))])
