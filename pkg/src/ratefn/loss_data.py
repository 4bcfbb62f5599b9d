"""Loading, validation, and summaries of per-sample loss data.

Losses are natural-log losses (nats) and must be non-negative and finite.
A dataset keeps its records in order, but every statistic derived from it
depends only on the multiset of loss values, so reordering records never
changes downstream estimates.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidMeta,
    MissingGroupId,
    ParseError,
    UnknownSampleId,
    ValidationError,
)

# Values within this absolute distance of the minimum count as attaining it;
# covers losses perturbed by file round-trips.
TIE_TOL = 1e-12


class UnequalGroupsWarning(UserWarning):
    """Augmentation groups differ in size; per-group means are still taken."""


@dataclass(frozen=True)
class LossRecord:
    """One sample: an opaque id, a loss in nats, and optional annotations.

    ``group_id`` names the base sample for augmentation groups.
    ``grad_norm_sq`` holds a squared input-gradient norm.
    ``grad_theta`` holds a parameter-gradient vector at a reference point.
    """

    sample_id: str
    loss: float
    group_id: str | None = None
    grad_norm_sq: float | None = None
    grad_theta: tuple[float, ...] | None = None


@dataclass(frozen=True)
class DatasetSummary:
    """Count, mean, minimum (with tie count), and population variance."""

    count: int
    empirical_loss: float
    min_loss: float
    min_loss_count: int
    variance: float


@dataclass(frozen=True)
class ModelMeta:
    """Model-class context for bounds: parameter count, train size, delta, epsilon."""

    param_count: int
    train_size: int
    delta: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not isinstance(self.param_count, (int, np.integer)) or self.param_count < 1:
            raise InvalidMeta(f"param_count must be a positive integer, got {self.param_count!r}")
        if not isinstance(self.train_size, (int, np.integer)) or self.train_size < 1:
            raise InvalidMeta(f"train_size must be a positive integer, got {self.train_size!r}")
        if not (isinstance(self.delta, (int, float)) and 0.0 < self.delta < 1.0):
            raise InvalidMeta(f"delta must lie in (0, 1), got {self.delta!r}")
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise InvalidMeta(f"epsilon must be a finite non-negative real, got {self.epsilon!r}")


def _check_loss(value: float, where: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{where}: loss must be finite, got {value!r}")
    if value < 0.0:
        raise ValidationError(f"{where}: loss must be non-negative, got {value!r}")
    return value


@dataclass(frozen=True)
class LossDataset:
    """An ordered, immutable collection of loss records for one model."""

    records: tuple[LossRecord, ...]
    model_id: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise EmptyDataset("a dataset must contain at least one record")
        dim = None
        for i, rec in enumerate(self.records):
            where = f"record {i} ({rec.sample_id!r})"
            _check_loss(rec.loss, where)
            if rec.grad_norm_sq is not None:
                g = float(rec.grad_norm_sq)
                if not math.isfinite(g) or g < 0.0:
                    raise ValidationError(f"{where}: grad_norm_sq must be finite and non-negative")
            if rec.grad_theta is not None:
                if dim is None:
                    dim = len(rec.grad_theta)
                elif len(rec.grad_theta) != dim:
                    raise ValidationError(
                        f"{where}: grad_theta has length {len(rec.grad_theta)}, expected {dim}"
                    )
        if dim is not None and any(r.grad_theta is None for r in self.records):
            raise ValidationError("grad_theta must be present on all records or none")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.asarray([r.loss for r in self.records], dtype=np.float64)


def from_losses(
    losses: Iterable[float],
    model_id: str = "model",
    group_ids: Sequence[str] | None = None,
) -> LossDataset:
    """Build a dataset from bare loss values, with optional group labels."""
    values = list(losses)
    if group_ids is not None and len(group_ids) != len(values):
        raise ValidationError("group_ids must match the number of losses")
    records = tuple(
        LossRecord(
            sample_id=f"s{i}",
            loss=float(v),
            group_id=None if group_ids is None else group_ids[i],
        )
        for i, v in enumerate(values)
    )
    return LossDataset(records, model_id=model_id)


def summarize(ds: LossDataset) -> DatasetSummary:
    """Mean, minimum, minimum-tie count, and population variance of the losses.

    The true arithmetic mean can never fall below the minimum, so rounding
    that puts it there is snapped back; a dataset whose losses all tie at the
    minimum reports exactly zero variance.
    """
    values = [r.loss for r in ds.records]
    count = len(values)
    mean = math.fsum(values) / count
    lo = min(values)
    mean = max(mean, lo)
    ties = sum(1 for v in values if v - lo <= TIE_TOL)
    if ties == count:
        variance = 0.0
    else:
        variance = math.fsum((v - mean) ** 2 for v in values) / count
    return DatasetSummary(count, mean, lo, ties, variance)


def reduce_augmented(ds: LossDataset) -> LossDataset:
    """Collapse each augmentation group to a single record with the group mean loss.

    Every record must carry a group id. Group order follows first appearance;
    gradient annotations do not survive the reduction. Unequal group sizes are
    allowed (each group still contributes its own mean) but warned about,
    because only equal sizes preserve the grand mean exactly.
    """
    groups: dict[str, list[float]] = {}
    for i, rec in enumerate(ds.records):
        if rec.group_id is None:
            raise MissingGroupId(f"record {i} ({rec.sample_id!r}) has no group_id")
        groups.setdefault(rec.group_id, []).append(rec.loss)
    sizes = {len(v) for v in groups.values()}
    if len(sizes) > 1:
        warnings.warn(
            UnequalGroupsWarning(
                f"group sizes differ ({sorted(sizes)}); grand mean becomes a mean of group means"
            )
        )
    records = tuple(
        LossRecord(sample_id=gid, loss=math.fsum(vals) / len(vals))
        for gid, vals in groups.items()
    )
    return LossDataset(records, model_id=ds.model_id)


def compose_augmented(ds: LossDataset, outer_group_map: Mapping[str, str]) -> LossDataset:
    """Relabel groups so one reduction over the new labels composes two augmentations.

    ``outer_group_map`` must cover every sample id in ``ds`` (typically the
    output of a previous :func:`reduce_augmented`, whose sample ids are the
    inner group ids).
    """
    for i, rec in enumerate(ds.records):
        if rec.sample_id not in outer_group_map:
            raise UnknownSampleId(f"record {i}: sample id {rec.sample_id!r} missing from map")
    records = tuple(replace(rec, group_id=outer_group_map[rec.sample_id]) for rec in ds.records)
    return LossDataset(records, model_id=ds.model_id)


# ---------------------------------------------------------------------------
# File I/O
#
# CSV columns are fixed as sample_id,loss[,group_id][,grad_norm_sq]; vector
# annotations only fit JSONL (one object per line). Rejection messages carry
# 1-based line numbers.
# ---------------------------------------------------------------------------

_CSV_HEADERS = (
    ("sample_id", "loss"),
    ("sample_id", "loss", "group_id"),
    ("sample_id", "loss", "group_id", "grad_norm_sq"),
)


def _parse_float(text: str, field: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: field {field!r} is not a number: {text!r}") from None


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise ValidationError(f"cannot infer format from suffix {suffix!r}; pass format explicitly")


def load_dataset(path: str | Path, format: str | None = None) -> LossDataset:
    """Load a loss dataset from a CSV or JSONL file.

    ``format`` is ``"csv"`` or ``"jsonl"``; when omitted it is inferred from
    the file suffix.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    fmt = format if format is not None else _infer_format(path)
    if fmt == "csv":
        records = _load_csv(path)
    elif fmt == "jsonl":
        records = _load_jsonl(path)
    else:
        raise ValidationError(f"unknown format {fmt!r}; expected 'csv' or 'jsonl'")
    if not records:
        raise EmptyDataset(f"{path}: no data rows")
    return LossDataset(tuple(records), model_id=path.stem)


def _load_csv(path: Path) -> list[LossRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(cell.strip() for cell in next(reader))
        except StopIteration:
            raise EmptyDataset(f"{path}: empty file") from None
        if header not in _CSV_HEADERS:
            raise ParseError(
                f"line 1: header must be one of {['|'.join(h) for h in _CSV_HEADERS]}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            loss = _parse_float(row[1], "loss", lineno)
            if not math.isfinite(loss) or loss < 0.0:
                raise ValidationError(f"line {lineno}: loss must be finite and non-negative, got {row[1]!r}")
            group = None
            grad_norm_sq = None
            if len(header) >= 3 and row[2] != "":
                group = row[2]
            if len(header) == 4 and row[3] != "":
                grad_norm_sq = _parse_float(row[3], "grad_norm_sq", lineno)
            records.append(LossRecord(row[0], loss, group_id=group, grad_norm_sq=grad_norm_sq))
    return records


def _load_jsonl(path: Path) -> list[LossRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"line {lineno}: expected an object, got {type(obj).__name__}")
            if "sample_id" not in obj or "loss" not in obj:
                raise ParseError(f"line {lineno}: object needs 'sample_id' and 'loss' fields")
            loss = obj["loss"]
            if isinstance(loss, bool) or not isinstance(loss, (int, float)):
                raise ParseError(f"line {lineno}: 'loss' must be a number, got {loss!r}")
            if not math.isfinite(float(loss)) or float(loss) < 0.0:
                raise ValidationError(f"line {lineno}: loss must be finite and non-negative, got {loss!r}")
            grad_theta = obj.get("grad_theta")
            if grad_theta is not None:
                if not isinstance(grad_theta, list) or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool) for x in grad_theta
                ):
                    raise ParseError(f"line {lineno}: 'grad_theta' must be an array of numbers")
                grad_theta = tuple(float(x) for x in grad_theta)
            records.append(
                LossRecord(
                    sample_id=str(obj["sample_id"]),
                    loss=float(loss),
                    group_id=None if obj.get("group_id") is None else str(obj["group_id"]),
                    grad_norm_sq=None if obj.get("grad_norm_sq") is None else float(obj["grad_norm_sq"]),
                    grad_theta=grad_theta,
                )
            )
    return records


def dump_dataset(ds: LossDataset, path: str | Path, format: str = "csv") -> None:
    """Write a dataset back to disk; vector annotations require JSONL."""
    path = Path(path)
    if format == "csv":
        if any(r.grad_theta is not None for r in ds.records):
            raise ValidationError("grad_theta vectors do not fit CSV; use jsonl")
        has_group = any(r.group_id is not None for r in ds.records)
        has_norm = any(r.grad_norm_sq is not None for r in ds.records)
        header = ["sample_id", "loss"]
        if has_group or has_norm:
            header.append("group_id")
        if has_norm:
            header.append("grad_norm_sq")
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for rec in ds.records:
                row = [rec.sample_id, repr(rec.loss)]
                if len(header) >= 3:
                    row.append("" if rec.group_id is None else rec.group_id)
                if len(header) == 4:
                    row.append("" if rec.grad_norm_sq is None else repr(rec.grad_norm_sq))
                writer.writerow(row)
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as handle:
            for rec in ds.records:
                obj: dict = {"sample_id": rec.sample_id, "loss": rec.loss}
                if rec.group_id is not None:
                    obj["group_id"] = rec.group_id
                if rec.grad_norm_sq is not None:
                    obj["grad_norm_sq"] = rec.grad_norm_sq
                if rec.grad_theta is not None:
                    obj["grad_theta"] = list(rec.grad_theta)
                handle.write(json.dumps(obj) + "\n")
    else:
        raise ValidationError(f"unknown format {format!r}; expected 'csv' or 'jsonl'")
