"""Closed-form oracles on finite loss distributions and Monte Carlo validation.

Everything here works on an exactly known discrete distribution, so cumulant
and rate values are computed from first principles, independently of the
plug-in estimators. Randomness comes from the Philox 4x64 counter-based bit
generator keyed by the caller's seed; draws are consumed in fixed-size
chunks, so a given seed always reproduces the same report bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InvalidA,
    InvalidLambda,
    NonRationalProbs,
    ParseError,
    SolverFailure,
    ValidationError,
)
from .loss_data import LossDataset, LossRecord

PROB_TOL = 1e-12        # probabilities must sum to one within this
_ORACLE_CAP = 1e12      # tilt cap for the oracle's own refinement search
_TRIAL_CHUNK = 16384    # trials simulated per batch; fixed so streams are reproducible


@dataclass(frozen=True)
class DiscreteLossDistribution:
    """A finite loss distribution: support values (nats) and their probabilities."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.values:
            raise ValidationError("a distribution needs at least one atom")
        if len(self.values) != len(self.probs):
            raise ValidationError("values and probs must have the same length")
        for v in self.values:
            if not math.isfinite(v) or v < 0.0:
                raise ValidationError(f"loss values must be finite and non-negative, got {v!r}")
        for p in self.probs:
            if not math.isfinite(p) or p <= 0.0:
                raise ValidationError(f"probabilities must be positive, got {p!r}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    @property
    def mean(self) -> float:
        return math.fsum(p * v for p, v in zip(self.probs, self.values))

    @property
    def min_value(self) -> float:
        return min(self.values)

    @property
    def min_mass(self) -> float:
        lo = self.min_value
        return math.fsum(p for p, v in zip(self.probs, self.values) if v == lo)


@dataclass(frozen=True)
class CramerReport:
    """Monte Carlo tail estimate against the exact decay rate.

    ``neg_log_rate`` is ``-(1/n) log(p_hat)``, or ``math.inf`` when no trial
    produced the event.
    """

    n: int
    a: float
    trials: int
    hit_count: int
    p_hat: float
    neg_log_rate: float
    exact_rate: float
    seed: int


@dataclass(frozen=True)
class BiasProbeReport:
    """Sampling distribution of the plug-in cumulant against its exact value.

    ``underestimates`` is true when the replicate mean sits at or below the
    exact value plus three standard errors, the expected direction of the
    plug-in estimator's bias.
    """

    n: int
    lam: float
    replicates: int
    mean_estimate: float
    stderr: float
    exact_value: float
    underestimates: bool
    seed: int


def _check_lambda(lam) -> float:
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise InvalidLambda(f"tilt must be a real number, got {lam!r}") from None
    if not math.isfinite(lam) or lam < 0.0:
        raise InvalidLambda(f"tilt must be finite and non-negative, got {lam!r}")
    return lam


def exact_cumulant(dist: DiscreteLossDistribution, lam: float) -> float:
    """Exact cumulant ``log E[exp(lam*(mean - loss))]`` of a discrete distribution."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        return 0.0
    values = np.asarray(dist.values)
    probs = np.asarray(dist.probs)
    lo = dist.min_value
    z = float(probs @ np.exp(-lam * (values - lo)))
    result = lam * (dist.mean - lo) + math.log(z)
    return max(result, 0.0)


def _exact_tilted_mean(dist: DiscreteLossDistribution, lam: float) -> float:
    values = np.asarray(dist.values)
    probs = np.asarray(dist.probs)
    w = probs * np.exp(-lam * (values - dist.min_value))
    return float(w @ values) / float(w.sum())


def exact_rate(dist: DiscreteLossDistribution, a: float, resolution: int = 2048) -> float:
    """Exact rate at deviation ``a`` by grid search plus local bisection.

    Maximizes ``lam*a - J(lam)`` over ``resolution`` log-spaced tilts in
    [1e-6, 1e6], then refines with bisection on the derivative. Returns
    ``math.inf`` beyond the gap ``mean - min``; exactly at the gap the value
    is ``-log(mass at the minimum)``, the finite boundary of a finite-support
    distribution.
    """
    try:
        a = float(a)
    except (TypeError, ValueError):
        raise InvalidA(f"deviation a must be a real number, got {a!r}") from None
    if not math.isfinite(a) or a <= 0.0:
        raise InvalidA(f"deviation a must be finite and positive, got {a!r}")
    if resolution < 8:
        raise ValidationError(f"resolution must be at least 8, got {resolution}")
    gap = dist.mean - dist.min_value
    if a > gap:
        return math.inf
    if a == gap:
        return -math.log(dist.min_mass)

    grid = np.geomspace(1e-6, 1e6, int(resolution))
    values = np.asarray(dist.values)
    probs = np.asarray(dist.probs)
    lo = dist.min_value
    j_grid = grid * (dist.mean - lo) + np.log(np.exp(-np.outer(grid, values - lo)) @ probs)
    objective = grid * a - j_grid
    k = int(np.argmax(objective))

    # The optimum satisfies J'(lam) = a with J' increasing; bracket around the
    # grid argmax, expanding upward if the whole grid undershoots.
    lam_lo = 0.0 if k == 0 else float(grid[k - 1])
    lam_hi = float(grid[k + 1]) if k + 1 < len(grid) else float(grid[-1])
    while _exact_tilted_mean(dist, lam_hi) > dist.mean - a:
        lam_hi *= 2.0
        if lam_hi > _ORACLE_CAP:
            raise SolverFailure(f"oracle bracket expansion exceeded {_ORACLE_CAP:g}")
    for _ in range(200):
        mid = 0.5 * (lam_lo + lam_hi)
        if mid <= lam_lo or mid >= lam_hi:
            break
        if dist.mean - _exact_tilted_mean(dist, mid) < a:
            lam_lo = mid
        else:
            lam_hi = mid
    lam = 0.5 * (lam_lo + lam_hi)
    return max(0.0, lam * a - exact_cumulant(dist, lam))


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _draw_losses(dist: DiscreteLossDistribution, gen: np.random.Generator, shape) -> np.ndarray:
    cum = np.cumsum(dist.probs)
    u = gen.random(shape)
    idx = np.searchsorted(cum, u, side="right")
    np.clip(idx, 0, len(dist.values) - 1, out=idx)
    return np.asarray(dist.values)[idx]


def sample_dataset(dist: DiscreteLossDistribution, n: int, seed: int) -> LossDataset:
    """Draw ``n`` i.i.d. losses by inverse CDF on a Philox stream keyed by ``seed``."""
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}")
    losses = _draw_losses(dist, _generator(seed), n)
    records = tuple(LossRecord(sample_id=f"s{i}", loss=float(v)) for i, v in enumerate(losses))
    return LossDataset(records, model_id=f"sampled-{seed}")


def expand_to_dataset(dist: DiscreteLossDistribution, denominator: int) -> LossDataset:
    """Expand rational probabilities into proportional exact sample counts."""
    if denominator < 1:
        raise ValidationError(f"denominator must be at least 1, got {denominator}")
    counts = []
    for p in dist.probs:
        scaled = p * denominator
        count = round(scaled)
        if abs(scaled - count) > 1e-9 or count < 1:
            raise NonRationalProbs(
                f"probability {p!r} times denominator {denominator} is not a positive integer"
            )
        counts.append(int(count))
    records = []
    for i, (v, c) in enumerate(zip(dist.values, counts)):
        records.extend(LossRecord(sample_id=f"v{i}c{j}", loss=v) for j in range(c))
    return LossDataset(tuple(records), model_id=f"expanded-{denominator}")


def cramer_tail(
    dist: DiscreteLossDistribution,
    n: int,
    a: float,
    trials: int,
    seed: int,
) -> CramerReport:
    """Estimate the probability that an ``n``-sample mean undershoots the mean by ``a``.

    Each trial draws ``n`` losses and counts a hit when ``mean - sample_mean >= a``
    (exact comparison, no tolerance). Zero hits are reported through an
    infinite ``neg_log_rate``, not an error.
    """
    try:
        a = float(a)
    except (TypeError, ValueError):
        raise InvalidA(f"deviation a must be a real number, got {a!r}") from None
    gap = dist.mean - dist.min_value
    if not math.isfinite(a) or a <= 0.0 or a >= gap:
        raise InvalidA(f"deviation a must lie in (0, {gap!r}), got {a!r}")
    if n < 1 or trials < 1:
        raise ValidationError("n and trials must be at least 1")

    gen = _generator(seed)
    mean = dist.mean
    hits = 0
    remaining = trials
    while remaining > 0:
        take = min(_TRIAL_CHUNK, remaining)
        losses = _draw_losses(dist, gen, (take, n))
        sample_means = losses.mean(axis=1)
        hits += int(np.count_nonzero(mean - sample_means >= a))
        remaining -= take
    p_hat = hits / trials
    neg_log_rate = math.inf if hits == 0 else -math.log(p_hat) / n
    return CramerReport(
        n=n,
        a=a,
        trials=trials,
        hit_count=hits,
        p_hat=p_hat,
        neg_log_rate=neg_log_rate,
        exact_rate=exact_rate(dist, a),
        seed=seed,
    )


def estimator_bias_probe(
    dist: DiscreteLossDistribution,
    n: int,
    lam: float,
    replicates: int,
    seed: int,
) -> BiasProbeReport:
    """Replicate the plug-in cumulant on fresh samples and compare to the exact value."""
    lam = _check_lambda(lam)
    if replicates < 30:
        raise ValidationError(f"replicates must be at least 30, got {replicates}")
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}")

    gen = _generator(seed)
    estimates = np.empty(replicates)
    done = 0
    rows_per_chunk = max(1, _TRIAL_CHUNK * 16 // max(n, 1))
    while done < replicates:
        take = min(rows_per_chunk, replicates - done)
        losses = _draw_losses(dist, gen, (take, n))
        lo = losses.min(axis=1)
        means = losses.mean(axis=1)
        z = np.exp(-lam * (losses - lo[:, None]))
        j = lam * (means - lo) + np.log(z.sum(axis=1)) - math.log(n)
        estimates[done : done + take] = np.maximum(j, 0.0)
        done += take
    mean_estimate = float(estimates.mean())
    stderr = 0.0 if replicates < 2 else float(estimates.std(ddof=1) / math.sqrt(replicates))
    exact = exact_cumulant(dist, lam)
    return BiasProbeReport(
        n=n,
        lam=lam,
        replicates=replicates,
        mean_estimate=mean_estimate,
        stderr=stderr,
        exact_value=exact,
        underestimates=mean_estimate <= exact + 3.0 * stderr,
        seed=seed,
    )


def load_distribution(path: str | Path) -> DiscreteLossDistribution:
    """Load a distribution from JSON: ``{"values": [...], "probs": [...]}``."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or "values" not in obj or "probs" not in obj:
        raise ParseError(f"{path}: expected an object with 'values' and 'probs'")
    return DiscreteLossDistribution(tuple(obj["values"]), tuple(obj["probs"]))
