"""On-disk layout shared by the CLI and the HTTP service.

::

    <store>/catalog.json          database manifest
    <store>/selection.vidx        schema embedding index
    <store>/values/<db_id>/...    value memories
    <store>/state.json            fingerprints of what the indexes were built from
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .catalog import Catalog, serialize_schema
from .embedding import EmbeddingProvider, load_index, save_index
from .errors import ConfigError, DimensionMismatch
from .pipeline import Pipeline, Providers
from .selection import index_schemas
from .values import ValueMemory, build_value_memory, load_value_memory, save_value_memory

CATALOG_FILE = "catalog.json"
SELECTION_FILE = "selection.vidx"
VALUES_DIR = "values"
STATE_FILE = "state.json"


@dataclass(frozen=True)
class StorePaths:
    root: Path

    @property
    def catalog(self) -> Path:
        return self.root / CATALOG_FILE

    @property
    def selection(self) -> Path:
        return self.root / SELECTION_FILE

    @property
    def values(self) -> Path:
        return self.root / VALUES_DIR

    @property
    def state(self) -> Path:
        return self.root / STATE_FILE


def load_catalog(root: str | os.PathLike, missing_ok: bool = False) -> Catalog:
    paths = StorePaths(Path(root))
    if not paths.catalog.exists():
        if missing_ok:
            return Catalog()
        raise ConfigError(f"no catalog at {paths.catalog}; run `relmem catalog add` first")
    return Catalog.load_manifest(paths.catalog)


def _sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def schema_fingerprint(catalog: Catalog, embedder: EmbeddingProvider) -> str:
    h = hashlib.sha256(f"{embedder.name}:{embedder.dimension}\n".encode())
    for text in catalog.schema_texts():
        h.update(text.text.encode("utf-8") + b"\0")
    return h.hexdigest()


def values_fingerprint(catalog: Catalog, embedder: EmbeddingProvider) -> dict[str, str]:
    out = {}
    for entry in catalog:
        h = hashlib.sha256(f"{embedder.name}:{embedder.dimension}\n".encode())
        h.update(serialize_schema(entry).text.encode("utf-8") + b"\0")
        h.update(_sha256_file(entry.location).encode())
        out[entry.id] = h.hexdigest()
    return out


def _read_state(paths: StorePaths) -> dict:
    try:
        return json.loads(paths.state.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}


def _write_state(paths: StorePaths, state: dict) -> None:
    tmp = paths.state.with_name(STATE_FILE + ".tmp")
    tmp.write_text(json.dumps(state, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, paths.state)


def build_indexes(
    root: str | os.PathLike, embedder: EmbeddingProvider, schemas: bool = True, values: bool = True
) -> dict[str, str]:
    """Build whatever is stale; returns ``{part: "built" | "up-to-date"}``.

    A part is up to date when its recorded fingerprint matches and its files
    exist, in which case nothing is rewritten.
    """
    paths = StorePaths(Path(root))
    catalog = load_catalog(root)
    state = _read_state(paths)
    report = {}

    if schemas:
        fp = schema_fingerprint(catalog, embedder)
        if state.get("schemas") == fp and paths.selection.exists():
            report["schemas"] = "up-to-date"
        else:
            save_index(index_schemas(catalog, embedder), paths.selection)
            state["schemas"] = fp
            report["schemas"] = "built"

    if values:
        fps = values_fingerprint(catalog, embedder)
        old = state.get("values", {})
        stale = [
            db_id for db_id, fp in fps.items() if old.get(db_id) != fp or not (paths.values / db_id).is_dir()
        ]
        for db_id in stale:
            save_value_memory(build_value_memory(catalog.get(db_id), embedder), paths.values)
        state["values"] = fps
        report["values"] = f"built {len(stale)}" if stale else "up-to-date"

    if any(v != "up-to-date" for v in report.values()):
        _write_state(paths, state)
    return report


def load_pipeline(root: str | os.PathLike, providers: Providers, **kwargs) -> Pipeline:
    paths = StorePaths(Path(root))
    catalog = load_catalog(root)
    if not paths.selection.exists():
        raise ConfigError(f"no selection index at {paths.selection}; run `relmem index build` first")
    index = load_index(paths.selection)
    if index.dimension != providers.embedder.dimension:
        raise DimensionMismatch(
            f"selection index has dimension {index.dimension}, embedder produces {providers.embedder.dimension}"
        )
    missing = [db_id for db_id in catalog.ids if db_id not in index]
    if missing:
        raise ConfigError(f"selection index is missing {', '.join(missing)}; run `relmem index build`")
    memories: dict[str, ValueMemory] = {}
    for db_id in catalog.ids:
        if (paths.values / db_id).is_dir():
            memories[db_id] = load_value_memory(paths.values, db_id)
    return Pipeline(catalog, index, memories, providers, **kwargs)
