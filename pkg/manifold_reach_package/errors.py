# -*- coding: utf-8 -*-
"""
Exception hierarchy for the manifold reachability package.

Each error also derives from the builtin a caller would naturally catch
(ValueError for bad inputs, RuntimeError for numerical failures), so code
written against plain ``ValueError`` keeps working.

Public API:
  - ManifoldReachError
  - InvalidInputError, PreconditionError, SingularityError, ConfigError
  - RetractionError, SamplingError, TrainingAbortedError

"""

from __future__ import annotations


class ManifoldReachError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ManifoldReachError, ValueError):
    """Dimension mismatch or non-finite input."""


class PreconditionError(ManifoldReachError, ValueError):
    """An operation was called outside its domain (e.g. an off-manifold point)."""


class SingularityError(ManifoldReachError, ValueError):
    """The constraint Jacobian is undefined at the requested point."""


class ConfigError(ManifoldReachError, ValueError):
    """Invalid configuration value, unknown key or unparsable config file."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


class RetractionError(ManifoldReachError, RuntimeError):
    """Gauss-Newton retraction did not converge."""


class SamplingError(ManifoldReachError, RuntimeError):
    """On-manifold sampling kept failing after the allowed retries."""


class TrainingAbortedError(ManifoldReachError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, step: int, l1: float, l2: float, grad_norm: float):
        super().__init__(message)
        self.step = step
        self.l1 = l1
        self.l2 = l2
        self.grad_norm = grad_norm
