"""File formats: CSV datasets, sample batches, diagnostics and simulation output.

Numeric tables are CSV (header row, ``.`` decimals, UTF-8); manifests are
JSON. Floats are written with ``repr`` so that re-reading gives the same
binary value.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import DataParseError, InvalidArgumentError
from .model import Dataset, SupportSet
from .samplers import Procedure, SampleBatch
from .weights import WeightDistribution, WeightScheme


def _fmt(x):
    x = float(x)
    if x == 0.0:
        return "0.0"  # collapses -0.0 so outputs are stable
    return repr(x)


def _io_error(path, exc):
    return OSError(f"{path}: {exc.strerror or exc}")


def _open_write(path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise _io_error(path, exc) from exc


def _write_json(path, obj):
    with _open_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- datasets ---------------------------------------------------------------

def read_numeric_csv(path):
    """Header and float matrix of a CSV file; every cell must be numeric."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataParseError(f"cannot open {path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataParseError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        rows = []
        for r, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataParseError(
                    f"{path}: row {r} has {len(record)} cells, header has {len(header)}", row=r
                )
            vals = []
            for name, cell in zip(header, record):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataParseError(
                        f"{path}: row {r}, column {name!r}: {cell!r} is not a finite number",
                        row=r, column=name,
                    )
                vals.append(v)
            rows.append(vals)
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def load_csv(path, response_column, standardize=False):
    """Read a CSV into a centered :class:`Dataset`.

    Predictors are all non-response columns in header order; their names are
    kept on ``Dataset.feature_names``.
    """
    header, M = read_numeric_csv(path)
    if response_column not in header:
        raise DataParseError(f"{path}: response column {response_column!r} not in header",
                             column=response_column)
    if len(set(header)) != len(header):
        raise DataParseError(f"{path}: duplicate column names in header")
    if M.shape[0] < 2:
        raise DataParseError(f"{path}: need at least 2 data rows, found {M.shape[0]}")
    k = header.index(response_column)
    names = [h for j, h in enumerate(header) if j != k]
    if not names:
        raise DataParseError(f"{path}: no predictor columns")
    X = np.delete(M, k, axis=1)
    for j, name in enumerate(names):
        if np.all(X[:, j] == X[0, j]):
            raise DataParseError(f"{path}: column {name!r} is constant", column=name)
    return Dataset.from_raw(X, M[:, k], standardize=standardize, feature_names=names)


def write_matrix_csv(path, header, rows):
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


# --- sample batches ---------------------------------------------------------

def write_batch(batch, directory, names=None, extra_manifest=None):
    """Write ``draws.csv``, ``selected.csv`` and ``manifest.json`` into ``directory``.

    ``selected.csv`` lists 1-based column indices separated by spaces.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _io_error(d, exc) from exc
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(batch.p)]
    if len(names) != batch.p:
        raise InvalidArgumentError(f"{len(names)} names for {batch.p} columns")
    write_matrix_csv(d / "draws.csv", names, batch.draws)
    with _open_write(d / "selected.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw_index", "selected"])
        for b, s in enumerate(batch.selected):
            w.writerow([b, " ".join(str(j) for j in s.one_based())])
    manifest = batch.manifest()
    manifest["columns"] = names
    if extra_manifest:
        manifest.update(extra_manifest)
    _write_json(d / "manifest.json", manifest)
    return d


def read_batch(directory):
    """Inverse of :func:`write_batch`; returns ``(batch, names)``."""
    d = Path(directory)
    names, draws = read_numeric_csv(d / "draws.csv")
    try:
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataParseError(f"cannot read {d / 'manifest.json'}: {exc}") from exc
    selected = []
    with open(d / "selected.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            idx = [int(t) for t in row[1].split()] if len(row) > 1 else []
            selected.append(SupportSet.from_one_based(idx, p=draws.shape[1]))
    batch = SampleBatch(
        draws=draws,
        selected=selected,
        procedure=Procedure(manifest["procedure"]),
        lam=float(manifest["lambda"]),
        master_seed=int(manifest["seed"]),
        scheme=None if manifest.get("scheme") is None else WeightScheme(manifest["scheme"]),
        dist=None if manifest.get("distribution") is None else WeightDistribution.from_dict(manifest["distribution"]),
        failures=[(int(b), m) for b, m in manifest.get("failures", [])],
        kkt_tol=float(manifest.get("kkt_tol", 1e-8)),
    )
    return batch, names


# --- diagnostics ------------------------------------------------------------

def write_diagnostics(report, directory, names=None):
    """``diagnostics.csv`` (one row per variable) and ``diagnostics.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    per_var = report.per_variable()
    p = len(report.select_prob)
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(p)]
    cols = list(per_var)
    rows = [[names[j]] + [per_var[c][j] for c in cols] for j in range(p)]
    write_matrix_csv(d / "diagnostics.csv", ["variable"] + cols, rows)
    _write_json(d / "diagnostics.json", {"variables": names, **report.to_dict()})


# --- simulation output ------------------------------------------------------

SIM_HEADER = ["replicate", "method", "metric", "variable", "value"]


def simulation_rows(rep, names):
    """Long-format rows for one :class:`~rwlasso.simulation.ReplicateResult`."""
    out = []
    for m in rep.methods:
        if m.report is None:
            out.append([rep.replicate_index, m.method, "failed", "", 1.0])
            continue
        out.append([rep.replicate_index, m.method, "lambda", "", m.lam])
        for key, val in m.report.scalar_metrics().items():
            out.append([rep.replicate_index, m.method, key, "", val])
        for key, arr in m.report.per_variable().items():
            for j, v in enumerate(arr):
                out.append([rep.replicate_index, m.method, key, names[j], v])
        out.append([rep.replicate_index, m.method, "n_failures", "", float(m.n_failures)])
    return out


class SimulationWriter:
    """Streams replicate results to ``results.csv`` and ``replicates.csv``."""

    def __init__(self, directory, p):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.names = [f"x{j + 1}" for j in range(p)]
        self._res = _open_write(self.dir / "results.csv")
        self._rep = _open_write(self.dir / "replicates.csv")
        self._wres = csv.writer(self._res, lineterminator="\n")
        self._wrep = csv.writer(self._rep, lineterminator="\n")
        self._wres.writerow(SIM_HEADER)
        self._wrep.writerow(["replicate", "lambda_two_step", "lambda_one_step", "irrepresentable_satisfied",
                             "irrepresentable_eta_star"])

    def write(self, rep):
        for row in simulation_rows(rep, self.names):
            self._wres.writerow([row[0], row[1], row[2], row[3], _fmt(row[4])])
        irr = rep.irrepresentable
        self._wrep.writerow([
            rep.replicate_index, _fmt(rep.lambda_two_step), _fmt(rep.lambda_one_step),
            "" if irr is None else int(irr.satisfied), "" if irr is None else _fmt(irr.eta_star),
        ])

    def close(self, manifest):
        self._res.close()
        self._rep.close()
        _write_json(self.dir / "manifest.json", {"software_version": __version__, **manifest})

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if not self._res.closed:
            self._res.close()
            self._rep.close()
        return False
