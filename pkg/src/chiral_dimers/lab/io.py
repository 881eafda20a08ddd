"""CSV and matrix dumps with '#' metadata headers."""
from __future__ import annotations

import csv
import math
import os

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        return f"{v.real!r}{v.imag:+}j"
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows, meta=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            if isinstance(r, dict):
                r = [r.get(c, "") for c in columns]
            w.writerow([_fmt(x) for x in r])
    return path


def read_csv(path):
    """(meta, columns, rows as lists of str)."""
    meta, lines = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def write_matrix(path, m, meta=None):
    """Row-major plain text, one row per line, cells 're,im' separated by spaces."""
    m = np.asarray(m, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        for row in m:
            fh.write(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) + "\n")
    return path


def read_matrix(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            cells = [c.split(",") for c in line.split()]
            rows.append([complex(float(a), float(b)) for a, b in cells])
    return np.array(rows, dtype=complex)
