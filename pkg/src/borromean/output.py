"""Serialization of tables, reports and wave-function grids.

Every file carries the configuration that produced it and a hash of that
configuration; readers refuse files whose configuration block is missing or
does not match the hash.  Output is deterministic: keys are sorted, floats
are written with a fixed format and nothing time-dependent is recorded.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Sequence, TextIO

import numpy as np

from .errors import ProvenanceError
from .wavefunction import Space, WaveFieldGrid

CONFIG_PREFIX = "# config: "
HASH_COLUMN = "config_hash"


def canonical(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical(config).encode()).hexdigest()[:16]


def format_float(x) -> str:
    """Scientific notation with 15 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.14e}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dumps(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable, allow_nan=True) + "\n"


def write_table(rows: Sequence[dict], columns: Sequence[str], config: dict, fmt: str, stream: TextIO) -> None:
    h = config_hash(config)
    if fmt == "json":
        payload = {"config": config, HASH_COLUMN: h, "columns": list(columns),
                   "rows": [{c: r.get(c) for c in columns} for r in rows]}
        stream.write(_dumps(payload))
        return
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    stream.write(CONFIG_PREFIX + canonical(config) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(columns) + [HASH_COLUMN])
    for r in rows:
        writer.writerow([format_float(r.get(c)) for c in columns] + [h])


def read_table(source: str | Path | TextIO) -> tuple[dict, list[dict]]:
    """Rows of a CSV or JSON table, as strings (CSV) or JSON values."""
    text = _read_text(source)
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        config = payload.get("config")
        if config is None or payload.get(HASH_COLUMN) != config_hash(config):
            raise ProvenanceError("table has no matching configuration block")
        return config, payload["rows"]
    lines = text.splitlines()
    if not lines or not lines[0].startswith(CONFIG_PREFIX):
        raise ProvenanceError("table has no configuration block")
    config = json.loads(lines[0][len(CONFIG_PREFIX):])
    h = config_hash(config)
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    for r in rows:
        if r.get(HASH_COLUMN) != h:
            raise ProvenanceError("row provenance does not match the configuration block")
    return config, rows


def write_report(report: dict, config: dict, stream: TextIO) -> None:
    stream.write(_dumps({"config": config, HASH_COLUMN: config_hash(config), "report": report}))


def read_report(source: str | Path | TextIO) -> tuple[dict, dict]:
    payload = json.loads(_read_text(source))
    config = payload.get("config")
    if config is None or payload.get(HASH_COLUMN) != config_hash(config):
        raise ProvenanceError("report has no matching configuration block")
    return config, payload["report"]


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text()


def _axis_spec(axis: np.ndarray) -> dict:
    return {"start": float(axis[0]), "step": float(axis[1] - axis[0]), "n": int(len(axis))}


def write_grid_dump(field_: WaveFieldGrid, config: dict, path: str | Path) -> tuple[Path, Path]:
    """Grid samples as CSV plus a JSON sidecar ``<path>.json``.

    The CSV starts with header rows (axes, energy, space, config hash) and
    then lists the samples row-major as ``re,im`` pairs.
    """
    path = Path(path)
    h = config_hash(config)
    axes = [_axis_spec(a) for a in field_.axes]
    header = {"axes": axes, "energy": float(field_.energy), "space": field_.space.value, HASH_COLUMN: h}
    with path.open("w", newline="") as fh:
        for key in ("axes", "energy", "space", HASH_COLUMN):
            fh.write(f"# {key}: {json.dumps(header[key], sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["re", "im"])
        flat = field_.values.ravel()
        for z in flat:
            writer.writerow([format_float(z.real), format_float(z.imag)])
    sidecar = path.with_name(path.name + ".json")
    meta = {k: v for k, v in field_.metadata.items() if _serializable(v)}
    sidecar.write_text(_dumps({"config": config, HASH_COLUMN: h, "grid": header, "metadata": meta}))
    return path, sidecar


def _serializable(v: Any) -> bool:
    try:
        json.dumps(v, default=_jsonable)
        return True
    except (TypeError, ValueError):
        return False


def read_grid_dump(path: str | Path) -> WaveFieldGrid:
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    if not sidecar.exists():
        raise ProvenanceError(f"missing configuration sidecar {sidecar.name}")
    payload = json.loads(sidecar.read_text())
    config = payload.get("config")
    if config is None or payload.get(HASH_COLUMN) != config_hash(config):
        raise ProvenanceError("sidecar configuration does not match its hash")
    header = {}
    data_lines = []
    with path.open() as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                header[key] = json.loads(value)
            else:
                data_lines.append(line)
    if header.get(HASH_COLUMN) != payload[HASH_COLUMN]:
        raise ProvenanceError("grid file and sidecar come from different configurations")
    rows = list(csv.reader(data_lines[1:]))
    vals = np.array([float(r[0]) + 1j * float(r[1]) for r in rows])
    axes = tuple(a["start"] + a["step"] * np.arange(a["n"]) for a in header["axes"])
    values = vals.reshape(len(axes[0]), len(axes[1]))
    return WaveFieldGrid(axes, values, Space(header["space"]), header["energy"], payload.get("metadata", {}))
