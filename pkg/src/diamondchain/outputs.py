"""Plot-ready CSV writers, metadata documents and the custom-state file format."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import GROWTH_LAW, LAMBDA_CONVENTION, LatticeState, ModelError, ModelParams

FLOAT_FMT = "%.17g"
STATE_HEADER = ["n", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c"]
BANDS_HEADER = ["k", "re_l1", "im_l1", "re_l2", "im_l2", "re_l3", "im_l3"]
INTENSITY_HEADER = ["z", "n", "rho"]
DIAGNOSTICS_HEADER = ["z", "total_power", "com", "asymmetry", "width", "excited_power", "complement_power"]
SPECTRUM_HEADER = ["index", "re", "im"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def meta_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_metadata(data_path: Path, meta: dict) -> Path:
    """Metadata sidecar ``<stem>.meta.json``; deterministic (no timestamps)."""
    from . import __version__

    doc = {
        "tool": "diamondchain",
        "version": __version__,
        "lambda_convention": LAMBDA_CONVENTION,
        "growth_law": GROWTH_LAW,
        "data_file": Path(data_path).name,
    }
    doc.update(meta)
    out = meta_path(data_path)
    out.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


class CsvSink:
    """Row-streaming CSV writer with a fixed header."""

    def __init__(self, path: Path, header):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)

    def row(self, values):
        self._w.writerow([_fmt(v) for v in values])

    def rows(self, rows):
        for r in rows:
            self.row(r)

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_bands(path: Path, sweep, meta: dict | None = None) -> Path:
    """Tracked bands as ``(k, re_l1, im_l1, re_l2, im_l2, re_l3, im_l3)``."""
    bands = sweep.bands
    with CsvSink(path, BANDS_HEADER) as sink:
        for k, lam in zip(sweep.grid, bands):
            sink.row([k, lam[0].real, lam[0].imag, lam[1].real, lam[1].imag, lam[2].real, lam[2].imag])
    doc = {"params": sweep.params.as_dict(), "n_k": len(sweep), "max_eig_deviation": sweep.max_eig_deviation}
    doc.update(meta or {})
    write_metadata(path, doc)
    return Path(path)


def write_spectrum(path: Path, report, params: ModelParams, meta: dict | None = None) -> Path:
    with CsvSink(path, SPECTRUM_HEADER) as sink:
        for i, lam in enumerate(report.eigenvalues):
            sink.row([i, lam.real, lam.imag])
    doc = {
        "params": params.as_dict(),
        "n_eigenvalues": len(report),
        "complex_count": report.complex_count,
        "complex_indices": report.complex_indices,
        "im_tolerance": report.im_tolerance,
        "sort": "ascending Re, then Im",
    }
    doc.update(meta or {})
    write_metadata(path, doc)
    return Path(path)


def write_json(path: Path, payload: dict, meta: dict) -> Path:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    write_metadata(path, meta)
    return Path(path)


def write_state(path: Path, state: LatticeState, meta: dict | None = None) -> Path:
    """Custom initial-state file; reads back bit-identically with ``read_state``."""
    with CsvSink(path, STATE_HEADER) as sink:
        for n, (a, b, c) in zip(state.cells, state.amps):
            sink.row([int(n), a.real, a.imag, b.real, b.imag, c.real, c.imag])
    doc = {"z": state.z, "n_cells": state.n_cells}
    doc.update(meta or {})
    write_metadata(path, doc)
    return Path(path)


def read_state(path: Path, params: ModelParams | None = None) -> LatticeState:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != STATE_HEADER:
                raise ModelError(f"{path}: expected header {STATE_HEADER}, got {header}")
            rows = [r for r in reader if r]
    except OSError as exc:
        raise ModelError(f"cannot read state file {path}: {exc}") from exc
    if not rows:
        raise ModelError(f"{path}: no cells")
    cells = np.array([int(r[0]) for r in rows])
    if np.any(np.diff(cells) != 1):
        raise ModelError(f"{path}: cell indices must be consecutive and ascending")
    vals = np.array([[float(x) for x in r[1:]] for r in rows])
    amps = vals[:, 0::2] + 1j * vals[:, 1::2]
    state = LatticeState(amps, int(cells[0]))
    if params is not None:
        state.check_matches(params)
    if not state.is_finite():
        raise ModelError(f"{path}: non-finite amplitudes")
    return state
