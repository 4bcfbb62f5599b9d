"""Deterministic file output for curves and reports.

CSV numbers are rendered with 17 significant digits so emitted files reload
into bitwise-identical floats; infinities are spelled ``inf``. JSON payloads
carry a ``schema_version`` field and sorted keys so reruns of a seeded
command produce byte-identical files. Writes go through a temp file plus
rename, so readers never observe a partial file.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Sequence

from .cumulant import CumulantCurve
from .errors import ParseError
from .rate import InverseRateEvaluation, RateEvaluation

SCHEMA_VERSION = "1"


def fmt17(x: float) -> str:
    """Render a float with 17 significant digits; infinities become 'inf'."""
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return format(x, ".17g")


def _jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_json_text(payload: Any, kind: str) -> str:
    """Serialize a report to versioned, key-sorted JSON text."""
    body = _jsonable(payload)
    if not isinstance(body, dict):
        body = {"value": body}
    body["schema_version"] = SCHEMA_VERSION
    body["kind"] = kind
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to ``path`` via a same-directory temp file and rename."""
    path = Path(path)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=path.parent or Path("."), suffix=".tmp", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        try:
            os.unlink(handle.name)
        except OSError:
            pass
        raise


def cumulant_curve_to_csv(curve: CumulantCurve) -> str:
    lines = ["# columns: lambda,j,j_deriv", "lambda,j,j_deriv"]
    for lam, j, dj in zip(curve.grid.values, curve.j_values, curve.j_derivs):
        lines.append(f"{fmt17(lam)},{fmt17(j)},{fmt17(dj)}")
    return "\n".join(lines) + "\n"


def cumulant_curve_to_json(curve: CumulantCurve) -> str:
    return to_json_text(
        {
            "spacing": curve.grid.spacing,
            "lambda": [fmt17(v) for v in curve.grid.values],
            "j": [fmt17(v) for v in curve.j_values],
            "j_deriv": [fmt17(v) for v in curve.j_derivs],
            "summary": curve.summary,
        },
        kind="cumulant_curve",
    )


def load_cumulant_curve_csv(path: str | Path) -> tuple[list[float], list[float], list[float]]:
    """Reload an emitted cumulant curve; returns (lambdas, j, j_deriv)."""
    lams, js, djs = [], [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#") or line.startswith("lambda"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        lams.append(float(parts[0]))
        js.append(float(parts[1]))
        djs.append(float(parts[2]))
    return lams, js, djs


def rate_curve_to_csv(evaluations: Sequence[RateEvaluation]) -> str:
    lines = ["# columns: a,value,lambda_star,saturated", "a,value,lambda_star,saturated"]
    for ev in evaluations:
        lines.append(
            f"{fmt17(ev.a)},{fmt17(ev.value)},{fmt17(ev.lambda_star)},{str(ev.saturated).lower()}"
        )
    return "\n".join(lines) + "\n"


def rate_curve_to_json(evaluations: Sequence[RateEvaluation]) -> str:
    return to_json_text({"evaluations": list(evaluations)}, kind="rate_curve")


def inverse_rate_to_json(evaluation: InverseRateEvaluation) -> str:
    return to_json_text(evaluation, kind="inverse_rate")
