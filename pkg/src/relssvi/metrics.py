"""Per-iteration metrics logging and the computation-accounting helpers.

The CSV layout is shared by both trainers: base columns first, then any
extra columns (the hyperparameter optimizer's, for instance) in first-seen
order.  Missing values serialize as empty cells.
"""

import csv
import io

from .fileio import atomic_write_text

BASE_COLUMNS = (
    "iteration",
    "rho",
    "elbo_proxy",
    "document_sweeps_cumulative",
    "burnin_sweeps_cumulative",
    "eval_perplexity",
)


def sampling_steps_per_iteration(S, S_prime):
    """Sampling document-steps one SSVI iteration consumes (burn-in apart)."""
    return S * S_prime


def iterations_per_gibbs_sweep(D, S, S_prime):
    """How many SSVI iterations match one full Gibbs sweep over D documents."""
    return D / sampling_steps_per_iteration(S, S_prime)


def _format_cell(value):
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    return repr(float(value))


class MetricsLog:
    """Ordered rows of per-iteration measurements."""

    def __init__(self):
        self.rows = []
        self._extra = []

    def add(self, row):
        for key in row:
            if key not in BASE_COLUMNS and key not in self._extra:
                self._extra.append(key)
        self.rows.append(dict(row))

    @property
    def columns(self):
        return list(BASE_COLUMNS) + list(self._extra)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_format_cell(row.get(c)) for c in cols])
        return buf.getvalue()

    def write(self, path):
        atomic_write_text(path, self.to_csv())
        return path


def read_metrics(path):
    """Rows as dicts; numeric cells parsed to float, empty cells to None."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                if value in (None, ""):
                    row[key] = None
                else:
                    try:
                        row[key] = float(value)
                    except ValueError:
                        row[key] = value
            rows.append(row)
    return rows
