"""JSON artifacts and the gzip table cache.

Field names match ``schemas.json`` in this package.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import os
from importlib import resources
from pathlib import Path

import numpy as np

from .coupling import CouplingTable, CutCertificate
from .errors import ParameterError
from .structures import ColumnLabel, StructureSpec

CACHE_ENV = "COUPLING_FORGE_CACHE"


def load_schemas() -> dict:
    return json.loads(resources.files(__package__).joinpath("schemas.json").read_text())


def _labels_to_json(labels):
    return [{"a": list(lab.a), "multiplicity": lab.multiplicity} for lab in labels]


def _labels_from_json(items):
    return [ColumnLabel(tuple(int(v) for v in it["a"]), int(it["multiplicity"])) for it in items]


def table_to_dict(table: CouplingTable) -> dict:
    return {
        "type": "coupling_table",
        "structure": table.spec.to_dict(),
        "n": table.n,
        "x": table.x,
        "flow_value": table.flow_value,
        "labels": _labels_to_json(table.labels),
        "entries": [[list(v), list(lab.a), m] for v, lab, m in table.entries()],
    }


def cut_to_dict(cut: CutCertificate) -> dict:
    return {
        "type": "cut_certificate",
        "structure": cut.spec.to_dict(),
        "n": cut.spec.n,
        "x": cut.x,
        "flow_value": cut.flow_value,
        "L": _labels_to_json(cut.labels),
        "nu_L": cut.nu_L,
        "mu_reachable": cut.mu_reachable,
        "gap": cut.gap,
    }


def table_from_dict(data: dict) -> CouplingTable:
    """Rebuild a table from its JSON form.  The result is not yet verified."""
    try:
        if data.get("type") != "coupling_table":
            raise ParameterError(f"expected a coupling_table, got type {data.get('type')!r}")
        spec = StructureSpec.from_dict(data["structure"])
        labels = _labels_from_json(data["labels"])
        index = {lab.a: k for k, lab in enumerate(labels)}
        n = spec.n
        rows = np.zeros((len(data["entries"]), n), dtype=np.int64)
        cols = np.zeros(len(data["entries"]), dtype=np.int64)
        mass = np.zeros(len(data["entries"]))
        for k, (v, a, m) in enumerate(data["entries"]):
            if len(v) != n:
                raise ParameterError(f"entry {k} has a row vector of length {len(v)}, expected {n}")
            rows[k] = v
            cols[k] = index[tuple(a)]
            mass[k] = float(m)
        return CouplingTable(spec, float(data["x"]), labels, rows, cols, mass, float(data["flow_value"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed coupling table: {exc!r}") from None


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON ({exc})") from None


def read_table(path) -> CouplingTable:
    return table_from_dict(read_json(path))


def cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def cache_key(spec: StructureSpec, x: float) -> str:
    payload = json.dumps(spec.to_dict(), sort_keys=True) + "|" + repr(float(x))
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def cache_path(spec: StructureSpec, x: float, directory=None) -> Path:
    directory = Path(directory) if directory is not None else cache_dir()
    if directory is None:
        raise ParameterError(f"no cache directory: set {CACHE_ENV}")
    return directory / f"table-{cache_key(spec, x)}.npy.gz"


def save_table_cache(table: CouplingTable, directory=None) -> Path:
    """Write ``table`` as gzip-compressed consecutive ``.npy`` arrays."""
    path = cache_path(table.spec, table.x, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "structure": table.spec.to_dict(),
        "x": table.x,
        "flow_value": table.flow_value,
        "labels": _labels_to_json(table.labels),
    }
    # mtime=0 and an empty name keep the file byte-stable across runs
    with open(path, "wb") as raw, gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
        np.save(fh, np.frombuffer(dumps(meta).encode(), dtype=np.uint8))
        np.save(fh, np.asarray(table.rows, dtype=np.int64))
        np.save(fh, np.asarray(table.cols, dtype=np.int64))
        np.save(fh, np.asarray(table.mass, dtype=np.float64))
    return path


def load_table_cache(spec: StructureSpec, x: float, directory=None) -> CouplingTable | None:
    """Cached table for ``(spec, x)``, or None when absent.  Not verified."""
    path = cache_path(spec, x, directory)
    if not path.exists():
        return None
    with gzip.open(path, "rb") as fh:
        meta = json.loads(np.load(fh).tobytes().decode())
        rows = np.load(fh)
        cols = np.load(fh)
        mass = np.load(fh)
    cached_spec = StructureSpec.from_dict(meta["structure"])
    if cached_spec != spec or float(meta["x"]) != float(x):
        return None
    return CouplingTable(
        cached_spec, float(meta["x"]), _labels_from_json(meta["labels"]), rows, cols, mass,
        float(meta["flow_value"]),
    )
