"""Competitive-ratio report record and its JSON/CSV serializations."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Iterable, Sequence

SCHEMA_VERSION = "1"

# CSV columns, in order:
#   algorithm  instance  trials  mean  max  stderr  reference  tolerance  passed
CSV_COLUMNS = (
    "algorithm",
    "instance",
    "trials",
    "mean",
    "max",
    "stderr",
    "reference",
    "tolerance",
    "passed",
)


class UsageError(ValueError):
    pass


@dataclass
class RatioReport:
    algorithm: str
    instance: str
    trials: int
    mean: float
    max: float
    stderr: float
    breakdown: dict[str, Any] = field(default_factory=dict)
    reference: float | None = None
    tolerance: float | None = None
    passed: bool | None = None

    @classmethod
    def from_samples(cls, algorithm: str, instance: str, samples: Sequence[float], **kw) -> "RatioReport":
        n = len(samples)
        if n == 0:
            raise ValueError("no samples")
        mean = math.fsum(samples) / n
        if n > 1:
            var = math.fsum((s - mean) ** 2 for s in samples) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = 0.0
        return cls(algorithm, instance, n, mean, max(samples), stderr, **kw)

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RatioReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def emit_report(reports: RatioReport | Iterable[RatioReport], fmt: str = "json") -> bytes:
    """Serialize one or more reports deterministically."""
    if isinstance(reports, RatioReport):
        reports = [reports]
    reports = list(reports)
    if fmt == "json":
        payload: Any = [r.to_dict() for r in reports]
        if len(payload) == 1:
            payload = payload[0]
        return (json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue().encode()
    raise UsageError(f"unsupported format {fmt!r}")


def parse_report(data: bytes) -> list[RatioReport]:
    obj = json.loads(data)
    if isinstance(obj, dict):
        obj = [obj]
    return [RatioReport.from_dict(d) for d in obj]


def write_pairs_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode()


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v: Any) -> Any:
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, (tuple, set)):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")
