"""CSV interchange, key=value configs and provenance stamps.

CSV layout: ``# key=value`` metadata lines, one header row, then data rows
with ``,`` separators.  Floats are written with 17 significant digits so a
write/read round trip is exact.
"""
from __future__ import annotations

import hashlib
import json
from importlib import metadata
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.16e"


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path, columns: dict, meta: dict | None = None) -> Path:
    """Write equal-length columns; metadata values must not contain newlines."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(n)}")
    lines = []
    for k, v in (meta or {}).items():
        s = _fmt(v)
        if "\n" in s or "=" in str(k):
            raise ValueError(f"metadata entry {k!r} cannot be stored on one line")
        lines.append(f"# {k}={s}")
    lines.append(",".join(names))
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _parse(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path) -> tuple[dict, dict]:
    """Return (metadata, columns); numeric columns come back as float arrays."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = _parse(v.strip())
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header row")
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = np.array(raw, dtype=object)
    return meta, cols


def load_config(path) -> dict[str, str]:
    """Line-based ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: _fmt(v) for k, v in sorted(cfg.items())}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "version": version()}
