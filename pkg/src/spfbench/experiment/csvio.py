"""CSV with round-trip exact floats."""
from __future__ import annotations

import csv
import io
import math

from .spfd import atomic_write_bytes


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    if hasattr(v, "item"):
        return _fmt(v.item())
    return str(v)


def _parse(s):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def format_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write_bytes(path, format_csv(header, rows).encode("utf-8"))


def parse_csv(text):
    r = csv.reader(io.StringIO(text))
    header = next(r)
    return header, [[_parse(x) for x in row] for row in r if row]


def read_csv(path):
    with open(path, newline="") as fh:
        return parse_csv(fh.read())


def read_columns(path):
    header, rows = read_csv(path)
    return {h: [row[i] for row in rows] for i, h in enumerate(header)}


def same_value(a, b):
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b
