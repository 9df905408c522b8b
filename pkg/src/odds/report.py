"""Report rows and their CSV / JSON-lines serialization."""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

COLUMNS = ("experiment", "param_key", "param_value", "statistic", "value", "target", "bound", "pass")


def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool,)):
        return int(v)
    if isinstance(v, int):
        return v
    return float(v)


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    param_key: str
    param_value: str
    statistic: str
    value: float
    target: float | None
    bound: float | None
    passed: bool

    @classmethod
    def make(cls, experiment, param_key, param_value, statistic, value, target=None, bound=None,
             passed=None) -> "ReportRow":
        """Build a row; with both target and bound the verdict is ``|value - target| <= bound``,
        with a bound alone it is ``value <= bound``, otherwise ``passed`` (default true)."""
        value, target, bound = _num(value), _num(target), _num(bound)
        if target is not None and bound is not None:
            verdict = abs(value - target) <= bound
        elif bound is not None:
            verdict = value <= bound
        else:
            verdict = True if passed is None else bool(passed)
        if passed is not None and bool(passed) != verdict:
            raise ValueError("explicit pass flag contradicts target and bound")
        if isinstance(value, float) and math.isnan(value):
            verdict = False
        return cls(experiment, param_key, param_value, statistic, value, target, bound, bool(verdict))

    def with_prefix(self, key: str, value: str) -> "ReportRow":
        pk = key if self.param_key == "-" else f"{key};{self.param_key}"
        pv = value if self.param_key == "-" else f"{value};{self.param_value}"
        return ReportRow(self.experiment, pk, pv, self.statistic, self.value, self.target, self.bound, self.passed)

    def cells(self) -> list[str]:
        return [self.experiment, self.param_key, self.param_value, self.statistic,
                _fmt(self.value), _fmt(self.target), _fmt(self.bound), "true" if self.passed else "false"]

    def as_dict(self) -> dict:
        return dict(zip(COLUMNS, (self.experiment, self.param_key, self.param_value, self.statistic,
                                  _json_num(self.value), _json_num(self.target), _json_num(self.bound),
                                  self.passed)))


def _fmt(v) -> str:
    return "" if v is None else repr(v)


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # JSON has no inf/nan
    return v


def _csv_cell(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def render(rows, fmt: str, meta: dict) -> str:
    """Header (version, config hash, seed) followed by the body."""
    if fmt == "csv":
        head = "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"
        lines = [",".join(COLUMNS)] + [",".join(_csv_cell(c) for c in r.cells()) for r in rows]
        return head + "\n".join(lines) + "\n"
    if fmt == "jsonl":
        head = json.dumps({"meta": meta}, sort_keys=True) + "\n"
        return head + "".join(json.dumps(r.as_dict()) + "\n" for r in rows)
    raise ValueError(f"unknown format {fmt!r}")


def body(text: str) -> str:
    """The report without its header line."""
    return text.split("\n", 1)[1]


def write_atomic(text: str, path: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
