"""Run-log persistence: JSONL full records plus a CSV projection.

Floats are always written with 17 significant digits so a log round-trips
to the exact same doubles; stdlib json would pick the shortest repr
instead, so the JSON text is assembled here. Non-finite floats become
null in JSON and bare nan/inf tokens in CSV.
"""

from __future__ import annotations

import json
import math

CSV_HEADER = "epoch,loss,yes0,yes_best,region,lr"


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return "%.17g" % x


def dumps(obj) -> str:
    """Serialize to JSON with fixed float formatting and dict order kept."""
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj, parts: list) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(",")
            _emit(v, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                parts.append(",")
            if not isinstance(k, str):
                raise TypeError(f"dict key {k!r} is not a string")
            parts.append(json.dumps(k))
            parts.append(":")
            _emit(v, parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


class JsonlWriter:
    """Appends one JSON object per line, flushing after every write."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8", newline="\n")

    def write(self, obj: dict) -> None:
        self._fh.write(dumps(obj))
        self._fh.write("\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class CsvWriter:
    """The plotting projection: epoch, loss, yes0, yes_best, region, lr."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(CSV_HEADER + "\n")
        self._fh.flush()

    def write_row(self, record: dict) -> None:
        bounds = record.get("bounds")
        yes0 = "" if bounds is None else format_float(bounds["yes0"])
        yes_best = "" if bounds is None else format_float(bounds["cloud_bottom"])
        row = ",".join(
            [
                str(record["epoch"]),
                format_float(record["loss"]),
                yes0,
                yes_best,
                record["region"],
                format_float(record["lr"]),
            ]
        )
        self._fh.write(row + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_jsonl(path) -> tuple[dict | None, list]:
    """Read a run log; returns (header, epoch records), skipping trailers."""
    header = None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from None
            kind = obj.get("type")
            if kind == "header":
                header = obj
            elif kind == "epoch":
                records.append(obj)
    return header, records
