"""CSV output of a run and the matching readers.

Schemas (header row, comma-separated, LF line endings, floats with 9
significant digits, empty field for a missing value):

- prices.csv: t, p1, p2, p_avg
- avalanches.csv: t, size
- books.csv: t, n_b1, n_a1, n_t1, p_l1, omega1, n_b2, n_a2, n_t2, p_l2, omega2
- agents.csv: id, character, money, q1, q2, wealth
- pdf.csv: series, center, density, gaussian, qgaussian
"""
from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agents import CHARTIST, FUNDAMENTALIST
from .engine import RunRecord
from .errors import InputError

PRICES_COLUMNS = ("t", "p1", "p2", "p_avg")
AVALANCHE_COLUMNS = ("t", "size")
BOOK_COLUMNS = ("t", "n_b1", "n_a1", "n_t1", "p_l1", "omega1",
                "n_b2", "n_a2", "n_t2", "p_l2", "omega2")
AGENT_COLUMNS = ("id", "character", "money", "q1", "q2", "wealth")
PDF_COLUMNS = ("series", "center", "density", "gaussian", "qgaussian")
RUN_FILES = ("prices.csv", "avalanches.csv", "books.csv", "agents.csv")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return ""
    return "%.9g" % value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_run(record: RunRecord, directory: str | Path) -> dict[str, str]:
    """Write the four per-run CSVs into ``directory``; returns name -> sha256."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    t = record.t.tolist()

    write_csv(out / "prices.csv", PRICES_COLUMNS,
              zip(t, record.p1.tolist(), record.p2.tolist(), record.p_avg.tolist()))
    write_csv(out / "avalanches.csv", AVALANCHE_COLUMNS,
              zip(t, record.avalanche_size.tolist()))

    def book_rows():
        for i, step in enumerate(t):
            row = [step]
            for a in range(2):
                row += [int(record.n_b[i, a]), int(record.n_a[i, a]), int(record.n_t[i, a]),
                        float(record.p_last[i, a]), int(record.omega[i, a])]
            yield row

    write_csv(out / "books.csv", BOOK_COLUMNS, book_rows())

    wealth = record.final_wealth()
    chars = np.where(record.is_fundamentalist, FUNDAMENTALIST, CHARTIST)
    write_csv(out / "agents.csv", AGENT_COLUMNS,
              zip(range(wealth.size), chars.tolist(), record.final_money.tolist(),
                  record.final_holdings[:, 0].tolist(), record.final_holdings[:, 1].tolist(),
                  wealth.tolist()))
    return {name: sha256_file(out / name) for name in RUN_FILES}


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_table(path: str | Path, columns: Sequence[str], kinds: Sequence[type]) -> dict[str, np.ndarray]:
    """Read a CSV written by :func:`write_csv`, checking header and field types.

    Errors name the file and the 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"missing input file: {path}")
    data: dict[str, list] = {c: [] for c in columns}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}:1: empty file, expected header {','.join(columns)}")
        if tuple(header) != tuple(columns):
            raise InputError(f"{path}:1: expected header {','.join(columns)}, "
                             f"got {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(columns):
                raise InputError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
            for col, kind, text in zip(columns, kinds, row):
                try:
                    if kind is str:
                        value = text
                    elif kind is float:
                        value = float(text) if text != "" else math.nan
                    else:
                        value = int(text)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: bad {kind.__name__} in column "
                                     f"{col!r}: {text!r}") from None
                data[col].append(value)
    return {c: np.asarray(v, dtype=object if k is str else k)
            for (c, v), k in zip(data.items(), kinds)}


def read_prices(path: str | Path) -> dict[str, np.ndarray]:
    return read_table(path, PRICES_COLUMNS, (int, float, float, float))


def read_avalanches(path: str | Path) -> dict[str, np.ndarray]:
    return read_table(path, AVALANCHE_COLUMNS, (int, int))


def read_agents(path: str | Path) -> dict[str, np.ndarray]:
    return read_table(path, AGENT_COLUMNS, (int, str, float, int, int, float))
