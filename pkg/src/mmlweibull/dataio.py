"""Reading and writing lifetime datasets as ``y,delta`` CSV files.

A file starts with optional ``#key=value`` metadata lines, then the header
``y,delta``, then one observation per row.  The only metadata key read is
``censor_time`` (type I censoring time); other ``#`` lines are ignored.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .models import Complete, RandomWeibull, Sample, TypeI, TypeII

SCHEMES = ("complete", "type1", "type2", "random")


@dataclass(frozen=True)
class DatasetFile:
    y: np.ndarray
    delta: np.ndarray
    censor_time: float | None = None

    def to_sample(self, scheme: str, censor_time: float | None = None) -> Sample:
        """Build a validated :class:`Sample`; a CLI censoring time overrides the file's."""
        c = censor_time if censor_time is not None else self.censor_time
        if scheme == "complete":
            s = Complete()
        elif scheme == "type1":
            if c is None:
                raise ParseError("type I data needs '#censor_time=<c>' or --censor-time")
            s = TypeI(c)
        elif scheme == "type2":
            s = TypeII(int(self.delta.sum()))
        elif scheme == "random":
            s = RandomWeibull()
        else:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        return Sample(self.y, self.delta, s)


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} {text!r} is not finite", line)
    return v


def parse_dataset(text: str) -> DatasetFile:
    censor_time = None
    header_seen = False
    ys, ds = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        first = row[0].strip()
        if first.startswith("#"):
            body = ",".join(row)[1:].strip()
            key, sep, value = body.partition("=")
            if sep and key.strip() == "censor_time":
                censor_time = _parse_float(value.strip(), "censor_time", lineno)
                if censor_time <= 0:
                    raise ParseError("censor_time must be positive", lineno)
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if cells != ["y", "delta"]:
                raise ParseError(f"expected header 'y,delta', got {','.join(cells)!r}", lineno)
            header_seen = True
            continue
        if len(cells) != 2:
            raise ParseError(f"expected 2 fields, got {len(cells)}", lineno)
        y = _parse_float(cells[0], "y", lineno)
        if y <= 0:
            raise ParseError(f"y must be positive, got {cells[0]}", lineno)
        if cells[1] not in ("0", "1"):
            raise ParseError(f"delta must be 0 or 1, got {cells[1]!r}", lineno)
        ys.append(y)
        ds.append(int(cells[1]))
    if not header_seen:
        raise ParseError("missing 'y,delta' header")
    if not ys:
        raise ParseError("no observations")
    return DatasetFile(np.array(ys), np.array(ds, dtype=np.int8), censor_time)


def read_dataset(path: str | Path) -> DatasetFile:
    return parse_dataset(Path(path).read_text())


def format_dataset(sample: Sample) -> str:
    lines = []
    if isinstance(sample.scheme, TypeI):
        lines.append(f"#censor_time={sample.scheme.c!r}")
    lines.append("y,delta")
    lines.extend(f"{float(y)!r},{int(d)}" for y, d in zip(sample.y, sample.delta))
    return "\n".join(lines) + "\n"


def write_dataset(sample: Sample, path: str | Path) -> None:
    Path(path).write_text(format_dataset(sample))

