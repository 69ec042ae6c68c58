"""JSON, CSV and manifest writers.

Floats go through ``repr`` (shortest round-trip form), so profile documents
reload bit for bit.  CSV cells use 17 significant digits.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .fourier import SpectralField, make_grid
from .waves import WaveProfile

PROFILE_FORMAT = "rbolab.profile/1"


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    return obj


def field_to_dict(f: SpectralField) -> dict:
    g = f.grid
    return {
        "N": g.num_points,
        "P": g.period,
        "coeffs": [[int(n), float(c.real), float(c.imag)] for n, c in zip(g.modes, f.coeffs)],
    }


def field_from_dict(doc: dict) -> SpectralField:
    g = make_grid(int(doc["N"]), float(doc["P"]))
    coeffs = np.zeros(g.num_points, dtype=complex)
    seen = set()
    for n, re, im in doc["coeffs"]:
        n = int(n)
        if n in seen:
            raise ValueError(f"mode {n} listed twice")
        seen.add(n)
        coeffs[g.index(n)] = complex(float(re), float(im))
    if len(seen) != g.num_points:
        raise ValueError("coefficient list does not cover every mode")
    return SpectralField(g, coeffs)


def profile_to_dict(p: WaveProfile) -> dict:
    doc = {"format": PROFILE_FORMAT, "kind": p.kind, "speed": p.speed,
           "params": _plain(p.params), "tail_bound": p.tail_bound}
    doc.update(field_to_dict(p.field))
    return doc


def profile_from_dict(doc: dict) -> WaveProfile:
    if doc.get("format", PROFILE_FORMAT) != PROFILE_FORMAT:
        raise ValueError(f"unsupported profile format {doc.get('format')!r}")
    f = field_from_dict(doc)
    return WaveProfile(doc["kind"], f.grid, f, float(doc["speed"]), dict(doc.get("params", {})),
                       float(doc.get("tail_bound", 0.0)))


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows) -> Path:
    """RFC 4180 CSV (CRLF line ends, minimal quoting), 17 significant digits."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def write_columns(path, header: str, x, y) -> Path:
    """Two-column plot data with a '#' header line (gnuplot-readable)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        for a, b in zip(x, y):
            fh.write(f"{_cell(float(a))} {_cell(float(b))}\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir) -> Path:
    """MANIFEST.txt listing every file below ``outdir`` with its sha-256.

    The generation timestamp lives only here, so data files stay
    byte-identical across reruns.
    """
    outdir = Path(outdir)
    files = sorted(p for p in outdir.rglob("*") if p.is_file() and p.name != "MANIFEST.txt")
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [f"# generated {stamp}"]
    lines += [f"{sha256_file(p)}  {p.relative_to(outdir).as_posix()}" for p in files]
    path = outdir / "MANIFEST.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def default_output_root() -> Path:
    return Path(os.environ.get("RBOLAB_OUTPUT", "rbolab-runs"))
