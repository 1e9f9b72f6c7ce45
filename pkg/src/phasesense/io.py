"""CSV / JSONL record files and state files."""

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .fock import DensityMatrix

__all__ = [
    "FORMATS",
    "write_records",
    "read_records",
    "write_state",
    "read_state",
    "read_json",
]

FORMATS = ("csv", "jsonl")


def _scalar(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def _csv_cell(value):
    value = _scalar(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, dict)):
        raise ValueError("nested values need the jsonl format")
    return "" if value is None else str(value)


def _format_for(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
        return fmt
    if path is not None and str(path).endswith((".jsonl", ".json")):
        return "jsonl"
    return "csv"


def write_records(records, path=None, fmt=None, columns=None):
    """Write dict records as CSV (header + rows) or one JSON object per line.

    Floats are written with ``repr`` so values survive a round trip exactly.
    ``path=None`` or ``"-"`` writes to stdout.
    """
    records = list(records)
    fmt = _format_for(path, fmt)
    to_stdout = path is None or str(path) == "-"
    if not to_stdout:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    handle = sys.stdout if to_stdout else open(path, "w", newline="", encoding="utf-8")
    try:
        if fmt == "jsonl":
            for rec in records:
                handle.write(json.dumps({k: _scalar(v) for k, v in rec.items()}) + "\n")
            return
        if columns is None:
            columns = []
            for rec in records:
                columns.extend(k for k in rec if k not in columns)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_csv_cell(rec.get(c)) for c in columns])
    finally:
        if not to_stdout:
            handle.close()


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_records(path, fmt=None):
    """Read records written by :func:`write_records`; CSV cells are parsed as numbers when possible."""
    fmt = _format_for(path, fmt)
    with open(path, encoding="utf-8") as fh:
        if fmt == "jsonl":
            return [json.loads(line) for line in fh if line.strip()]
        reader = csv.DictReader(fh)
        return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def write_state(path, state, amplitudes=None, fmt=None):
    """State file with columns ``n, p`` (plus ``amp_re, amp_im`` for pure states)."""
    if amplitudes is not None:
        amp = np.asarray(amplitudes, dtype=np.complex128)
        probs = np.abs(amp) ** 2
    else:
        probs = state.diagonal() if isinstance(state, DensityMatrix) else np.asarray(state, float)
        amp = None
    rows = []
    for n, p in enumerate(probs):
        row = {"n": n, "p": float(p)}
        if amp is not None:
            row["amp_re"] = float(amp[n].real)
            row["amp_im"] = float(amp[n].imag)
        rows.append(row)
    write_records(rows, path, fmt)


def read_state(path, fmt=None):
    """Re-ingest a state file.

    Returns a pure-state :class:`DensityMatrix` when amplitudes are present,
    otherwise the stored occupation probabilities as a float array.
    """
    rows = read_records(path, fmt)
    if not rows:
        raise ValueError(f"{path}: empty state file")
    rows.sort(key=lambda r: r["n"])
    if rows[0].get("amp_re") is not None:
        amp = np.array([r["amp_re"] + 1j * r["amp_im"] for r in rows])
        if not math.isclose(float(np.vdot(amp, amp).real), 1.0, abs_tol=1e-9):
            raise ValueError(f"{path}: amplitudes are not normalised")
        return DensityMatrix(np.outer(amp, amp.conj()), check=False)
    return np.array([float(r["p"]) for r in rows])


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
