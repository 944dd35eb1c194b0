"""Column-oriented simulation log with the canonical CSV layout."""

import csv
import io
import math

import numpy as np


def _xyz(prefix):
    return [f"{prefix}_x", f"{prefix}_y", f"{prefix}_z"]


def _123(prefix, n=3):
    return [f"{prefix}_{i}" for i in range(1, n + 1)]


COLUMNS = tuple(
    ["t"]
    + _xyz("p") + _xyz("v") + _123("phi") + _123("omega") + ["eta"] + _123("pt")
    + _xyz("p_ref") + _xyz("v_ref") + _123("phi_ref") + _123("omega_ref") + _123("pt_ref")
    + ["e_u"] + _123("e_f", 5)
    + ["f_x", "f_z"] + _123("tau") + ["eta_d"] + _123("F", 4)
    + ["sat_flag", "attach_flag"]
)
INT_COLUMNS = frozenset({"sat_flag", "attach_flag"})


def format_float(x):
    """17 significant digits: enough to round-trip every double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


class SimulationLog:
    """Append-only table of rows in :data:`COLUMNS` order.

    Columns are read back as numpy arrays with ``log["name"]``.
    """

    def __init__(self, rows=None, metadata=None):
        self._rows = [] if rows is None else list(rows)
        self._cache = {}
        self.metadata = dict(metadata or {})

    def append(self, row):
        if len(row) != len(COLUMNS):
            raise ValueError(f"row has {len(row)} fields, expected {len(COLUMNS)}")
        self._rows.append(tuple(row))
        self._cache.clear()

    def __len__(self):
        return len(self._rows)

    def __getitem__(self, name):
        if name not in self._cache:
            j = COLUMNS.index(name)
            self._cache[name] = np.array([r[j] for r in self._rows], dtype=float)
        return self._cache[name]

    def columns(self, *names):
        return np.column_stack([self[n] for n in names])

    def row(self, i):
        return dict(zip(COLUMNS, self._rows[i]))

    def to_csv(self, path_or_file):
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                self._write(fh)

    def to_csv_string(self):
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue()

    def _write(self, fh):
        int_idx = {COLUMNS.index(c) for c in INT_COLUMNS}
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self._rows:
            writer.writerow(
                [str(int(v)) if j in int_idx else format_float(v) for j, v in enumerate(r)]
            )

    @classmethod
    def from_csv(cls, path_or_file):
        if hasattr(path_or_file, "read"):
            return cls._read(path_or_file)
        with open(path_or_file, newline="") as fh:
            return cls._read(fh)

    @classmethod
    def _read(cls, fh):
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != tuple(COLUMNS):
            raise ValueError("CSV header does not match the canonical column layout")
        rows = [tuple(float(v) for v in r) for r in reader if r]
        return cls(rows)
