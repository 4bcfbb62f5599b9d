"""Numerically stable estimation of the loss cumulant function.

For a loss multiset with mean ``L`` and minimum ``m``, the plug-in cumulant at
tilt ``lam`` is::

    J(lam) = lam * (L - m) + log(sum_i exp(-lam * (loss_i - m))) - log(M)

Shifting exponents by the minimum makes the largest summand exactly one, so
the evaluation cannot overflow for any tilt. The derivative is the gap
between the plain mean and the mean under weights proportional to
``exp(-lam * loss)``; it lives in ``[0, L - m]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalConsistencyError, InvalidLambda, ValidationError
from .loss_data import DatasetSummary, LossDataset, summarize

# J >= 0 is a theorem; round-off below zero is clamped, anything beyond this
# tolerance indicates a bug upstream.
NEG_TOL = 1e-12

DEFAULT_GRID_LO = 1e-3
DEFAULT_GRID_HI = 1e3
DEFAULT_GRID_SIZE = 64


@dataclass(frozen=True)
class LambdaGrid:
    """A strictly increasing grid of positive tilt values."""

    values: tuple[float, ...]
    spacing: str = "log"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValidationError("a tilt grid must be non-empty")
        if self.spacing not in ("linear", "log"):
            raise ValidationError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        prev = 0.0
        for v in self.values:
            if not math.isfinite(v) or v <= prev:
                raise ValidationError("grid values must be finite, positive, strictly increasing")
            prev = v

    def __len__(self) -> int:
        return len(self.values)

    @staticmethod
    def linear(lo: float, hi: float, count: int) -> "LambdaGrid":
        return LambdaGrid(tuple(np.linspace(lo, hi, count)), spacing="linear")

    @staticmethod
    def log_spaced(lo: float, hi: float, count: int) -> "LambdaGrid":
        return LambdaGrid(tuple(np.geomspace(lo, hi, count)), spacing="log")

    @staticmethod
    def default() -> "LambdaGrid":
        """64 log-spaced tilts on [1e-3, 1e3]; covers the curvature region for nat-scale losses."""
        return LambdaGrid.log_spaced(DEFAULT_GRID_LO, DEFAULT_GRID_HI, DEFAULT_GRID_SIZE)


@dataclass(frozen=True)
class CumulantCurve:
    """Cumulant values and derivatives over a tilt grid, with the dataset summary."""

    grid: LambdaGrid
    j_values: tuple[float, ...]
    j_derivs: tuple[float, ...]
    summary: DatasetSummary


def _check_lambda(lam) -> float:
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise InvalidLambda(f"tilt must be a real number, got {lam!r}") from None
    if not math.isfinite(lam) or lam < 0.0:
        raise InvalidLambda(f"tilt must be finite and non-negative, got {lam!r}")
    return lam


def cumulant_given(losses: np.ndarray, lam: float, mean: float, lo: float) -> float:
    """Cumulant at tilt ``lam`` for a loss array with precomputed mean and minimum."""
    if lam == 0.0:
        return 0.0
    z = np.exp(-lam * (losses - lo))
    value = lam * (mean - lo) + math.log(float(z.sum())) - math.log(losses.size)
    if value < 0.0:
        if value <= -NEG_TOL:
            raise InternalConsistencyError(f"cumulant came out {value!r} < -{NEG_TOL}")
        value = 0.0
    return value


def derivative_given(losses: np.ndarray, lam: float, mean: float, lo: float) -> float:
    """Cumulant derivative at ``lam``: mean minus the exponentially tilted mean."""
    if lam == 0.0:
        return 0.0
    w = np.exp(-lam * (losses - lo))
    tilted = float(w @ losses) / float(w.sum())
    return min(max(mean - tilted, 0.0), mean - lo)


def estimate_cumulant(ds: LossDataset, lam: float) -> float:
    """Plug-in cumulant of the dataset's loss distribution at tilt ``lam``.

    ``lam = 0`` returns exactly 0 without computation.
    """
    lam = _check_lambda(lam)
    s = summarize(ds)
    return cumulant_given(ds.losses, lam, s.empirical_loss, s.min_loss)


def cumulant_derivative(ds: LossDataset, lam: float) -> float:
    """Derivative of the plug-in cumulant at tilt ``lam``; lies in [0, mean - min]."""
    lam = _check_lambda(lam)
    s = summarize(ds)
    return derivative_given(ds.losses, lam, s.empirical_loss, s.min_loss)


def cumulant_curve(ds: LossDataset, grid: LambdaGrid | None = None) -> CumulantCurve:
    """Evaluate the cumulant and its derivative over a tilt grid."""
    if grid is None:
        grid = LambdaGrid.default()
    s = summarize(ds)
    losses = ds.losses
    j_values = tuple(cumulant_given(losses, lam, s.empirical_loss, s.min_loss) for lam in grid.values)
    j_derivs = tuple(derivative_given(losses, lam, s.empirical_loss, s.min_loss) for lam in grid.values)
    return CumulantCurve(grid=grid, j_values=j_values, j_derivs=j_derivs, summary=s)
