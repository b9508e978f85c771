"""Text formats: ``.rmx`` function files, flat config files and CSV reports."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .dyadic import DyadicTree
from .space import format_space, parse_space
from .stepfn import StepFunction

MAGIC = "RADMAX v1"


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dumps_rmx(f: StepFunction) -> str:
    t = f.tree
    measure = "uniform" if t.uniform and np.isclose(float(t.masses[0][0]), 1.0, rtol=0, atol=1e-15) else "leafmass"
    lines = [
        MAGIC,
        f"n={t.n} N={t.depth} d={f.space.dim} norm={format_space(f.space.p)} measure={measure}",
    ]
    if measure == "leafmass":
        lines.append("mass " + " ".join(_num(m) for m in np.asarray(t.leaf_mass, dtype=float)))
    lines.append("values")
    for row in np.asarray(f.values, dtype=float):
        lines.append(" ".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


def loads_rmx(text: str) -> StepFunction:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"not a function file: first line must be {MAGIC!r}")
    if len(lines) < 2:
        raise ValueError("missing header line")
    head = {}
    for tok in lines[1].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise ValueError(f"malformed header token {tok!r}")
        head[key] = val
    missing = {"n", "N", "d", "norm", "measure"} - set(head)
    if missing:
        raise ValueError(f"header lacks {sorted(missing)}")
    n, N, d = int(head["n"]), int(head["N"]), int(head["d"])
    space = parse_space(head["norm"], d)
    size = 2 ** (n * N)
    pos = 2
    mass = None
    if head["measure"] == "leafmass":
        if pos >= len(lines) or not lines[pos].startswith("mass"):
            raise ValueError("measure=leafmass needs a mass line")
        mass = np.array([float(x) for x in lines[pos].split()[1:]])
        if mass.shape != (size,):
            raise ValueError(f"mass line needs {size} entries")
        pos += 1
    elif head["measure"] != "uniform":
        raise ValueError(f"unknown measure {head['measure']!r}")
    if pos >= len(lines) or lines[pos] != "values":
        raise ValueError("missing 'values' sentinel")
    rows = lines[pos + 1:]
    if len(rows) != size:
        raise ValueError(f"expected {size} value lines, got {len(rows)}")
    vals = np.array([[float(x) for x in r.split()] for r in rows])
    if vals.shape != (size, d):
        raise ValueError(f"every value line needs {d} entries")
    return StepFunction(DyadicTree(n, N, mass), space, vals)


def write_rmx(path, f: StepFunction):
    Path(path).write_text(dumps_rmx(f), encoding="utf-8")


def read_rmx(path) -> StepFunction:
    return loads_rmx(Path(path).read_text(encoding="utf-8"))


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def read_config(path) -> dict:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def csv_text(statement: str, header: list, rows: list) -> str:
    """A ``# statement`` line, then the header row, then the data rows."""
    buf = io.StringIO()
    buf.write(f"# {statement}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise ValueError("row length does not match the header")
        w.writerow([format_cell(x) for x in r])
    return buf.getvalue()


def write_csv(path, statement: str, header: list, rows: list) -> str:
    text = csv_text(statement, header, rows)
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_csv(text: str):
    """(statement, header, rows as strings)."""
    lines = text.splitlines()
    statement = lines[0][2:] if lines and lines[0].startswith("# ") else ""
    body = lines[1:] if statement else lines
    reader = list(csv.reader(body))
    return statement, reader[0], reader[1:]
