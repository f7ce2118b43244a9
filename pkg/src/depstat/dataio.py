"""Dataset CSV files: header ``x1..xp,y1..yq``, one observation per row."""
from __future__ import annotations

import csv
import io
import math
import re

import numpy as np

from .errors import InvalidInputError
from .experiment import format_float
from .sample import PairedSample

_COLUMN = re.compile(r"^([xy])([1-9][0-9]*)$")


class DatasetError(InvalidInputError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _parse_header(header: list[str]) -> tuple[int, int]:
    names = [h.strip() for h in header]
    parsed = []
    for name in names:
        m = _COLUMN.match(name)
        if not m:
            raise DatasetError(f"bad column name {name!r}; expected x1..xp,y1..yq", 1)
        parsed.append((m.group(1), int(m.group(2))))
    p = sum(1 for side, _ in parsed if side == "x")
    q = len(parsed) - p
    expected = [("x", i + 1) for i in range(p)] + [("y", i + 1) for i in range(q)]
    if parsed != expected or p == 0 or q == 0:
        raise DatasetError("header must be x1..xp followed by y1..yq with p, q >= 1", 1)
    return p, q


def read_dataset(text: str) -> PairedSample:
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise DatasetError("empty file") from None
    p, q = _parse_header(header)
    values = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != p + q:
            raise DatasetError(f"expected {p + q} fields, got {len(row)}", lineno)
        try:
            parsed = [float(cell) for cell in row]
        except ValueError:
            raise DatasetError(f"non-numeric field in {row!r}", lineno) from None
        if not all(math.isfinite(v) for v in parsed):
            raise DatasetError("non-finite value", lineno)
        values.append(parsed)
    if len(values) < 2:
        raise DatasetError(f"need at least 2 observations, got {len(values)}")
    data = np.array(values)
    return PairedSample(data[:, :p], data[:, p:])


def load_dataset(path) -> PairedSample:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_dataset(fh.read())


def write_dataset(sample: PairedSample) -> str:
    header = [f"x{i + 1}" for i in range(sample.p)] + [f"y{i + 1}" for i in range(sample.q)]
    lines = [",".join(header)]
    for row in np.hstack([sample.x, sample.y]):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"
