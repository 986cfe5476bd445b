"""Delimited output, JSON serialization, and run manifests.

Formatting is pinned so identical runs produce identical bytes: floats are
written with %.17g (round-trip exact), JSON keys are sorted, and manifests
carry no wall-clock data.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import GridField, SpectralField, index_set
from .operators import SparseBandedOperator, _band_slices

__all__ = [
    "fmt_float",
    "write_csv",
    "write_table",
    "canonical_json",
    "write_json",
    "config_hash",
    "versions",
    "write_manifest",
    "spectral_field_json",
    "spectral_field_rows",
    "grid_field_rows",
    "operator_band_json",
    "operator_debug_dump",
]


def fmt_float(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_float(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table(
    base: Path, fmt: str, header: Sequence[str], rows: Iterable[Sequence]
) -> Path:
    """Write tabular data as CSV or JSON depending on the configured format."""
    rows = [list(r) for r in rows]
    if fmt == "csv":
        return write_csv(Path(str(base) + ".csv"), header, rows)
    if fmt == "json":
        payload = {"columns": list(header), "rows": [[_jsonify_cell(v) for v in r] for r in rows]}
        return write_json(Path(str(base) + ".json"), payload)
    raise ValueError(f"unknown output format {fmt!r}")


def _jsonify_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_json(obj))
    return path


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def versions() -> dict:
    import matplotlib
    import scipy

    from . import __version__

    return {
        "halfspec": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "platform": platform.system().lower(),
    }


def write_manifest(
    out_dir: Path, config: dict, results: dict, outputs: Sequence[str], tolerances: dict
) -> Path:
    """Run manifest: everything needed to reproduce the run bitwise.

    Deliberately excludes timestamps and timings; reruns with the same config
    and seed must produce identical bytes.
    """
    manifest = {
        "config": config,
        "config_sha256": config_hash(config),
        "versions": versions(),
        "tolerances": tolerances,
        "results": results,
        "outputs": sorted(outputs),
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)


def spectral_field_json(field: SpectralField) -> dict:
    """Coefficients in canonical (lexicographic, -K..K per axis) order."""
    flat = field.flat()
    return {
        "dim": field.trunc.dim,
        "cutoff": list(field.trunc.cutoff),
        "periods": list(field.trunc.periods),
        "index_order": "lexicographic in (k_1..k_n), each axis -K..K",
        "coefficients": [[float(c.real), float(c.imag)] for c in flat],
    }


def spectral_field_rows(field: SpectralField):
    """CSV rows (k_1..k_n, re, im), one per index, canonical order."""
    header = [f"k_{i + 1}" for i in range(field.trunc.dim)] + ["re", "im"]
    rows = [
        list(k) + [c.real, c.imag]
        for k, c in zip(index_set(field.trunc), field.flat())
    ]
    return header, rows


def grid_field_rows(grid: GridField, value_name: str = "value"):
    """CSV rows (x_1..x_n, value), one per node, C order."""
    dim = len(grid.periods)
    header = [f"x_{i + 1}" for i in range(dim)] + [value_name]
    axes = [grid.nodes(i) for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat_coords = [m.reshape(-1) for m in mesh]
    vals = np.asarray(grid.samples).reshape(-1)
    vals = vals.real if np.iscomplexobj(vals) else vals
    rows = [
        [flat_coords[i][j] for i in range(dim)] + [vals[j]]
        for j in range(vals.size)
    ]
    return header, rows


def operator_band_json(op: SparseBandedOperator) -> dict:
    """Band-list form: offset -> diagonal entries in canonical source order."""
    bands = {}
    for p in op.offsets:
        d = op.bands[p]
        key = ",".join(str(q) for q in p)
        bands[key] = [[float(v.real), float(v.imag)] for v in d.reshape(-1)]
    return {
        "kind": op.kind,
        "cutoff": list(op.trunc.cutoff),
        "periods": list(op.trunc.periods),
        "entry_convention": "entry (m+offset, m) = diagonal[m]; out-of-band targets dropped",
        "bands": bands,
    }


def operator_debug_dump(op: SparseBandedOperator) -> str:
    """Matrix-market style text dump (1-based flat indices), for debugging."""
    n = op.trunc.size
    flat = np.arange(n).reshape(op.trunc.shape)
    entries = []
    for p in op.offsets:
        sl = _band_slices(op.trunc.shape, p)
        if sl is None:
            continue
        tgt, src = sl
        for r, c, v in zip(
            flat[tgt].ravel(), flat[src].ravel(), op.bands[p][src].ravel()
        ):
            entries.append((int(r) + 1, int(c) + 1, v))
    entries.sort(key=lambda e: (e[0], e[1]))
    lines = ["%%MatrixMarket-like complex sparse dump", f"{n} {n} {len(entries)}"]
    for r, c, v in entries:
        lines.append(f"{r} {c} {fmt_float(v.real)} {fmt_float(v.imag)}")
    return "\n".join(lines) + "\n"
