"""Data value memory: per-column embedding indexes over stored cell values.

Only text columns are indexed.  Values are deduplicated byte-exactly, so
``'LA'`` and ``'la'`` stay separate records and the stored spelling can
always be recovered for the correction prompt.
"""

from __future__ import annotations

import json
import os
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import DatabaseEntry, connect_readonly
from .embedding import EmbeddingProvider, VectorIndex, embed, load_index, save_index
from .errors import CorruptIndex, UnknownColumn, UnreadableDatabase

DEFAULT_K_VALUES = 10
MANIFEST_NAME = "values.json"


@dataclass(frozen=True, order=True)
class ColumnKey:
    db_id: str
    table: str
    column: str

    def __str__(self) -> str:
        return f"{self.db_id}:{self.table}.{self.column}"


@dataclass
class ValueMemory:
    db_id: str
    column_indexes: dict[ColumnKey, VectorIndex] = field(default_factory=dict)
    raw_values: dict[tuple[ColumnKey, str], str] = field(default_factory=dict)

    def resolve(self, table: str, column: str) -> ColumnKey | None:
        """Case-insensitive lookup of an indexed column."""
        want = (table.lower(), column.lower())
        for key in self.column_indexes:
            if (key.table.lower(), key.column.lower()) == want:
                return key
        return None

    def values(self, key: ColumnKey) -> list[str]:
        index = self.column_indexes[key]
        return [self.raw_values[(key, rid)] for rid in index.ids]


def _record_id(i: int) -> str:
    return f"v{i:08d}"


def _quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def distinct_text_values(conn: sqlite3.Connection, table: str, column: str) -> list[str]:
    """Distinct non-null string cells of a column, sorted by UTF-8 bytes."""
    cur = conn.execute(f"SELECT {_quote(column)} FROM {_quote(table)} WHERE {_quote(column)} IS NOT NULL")
    seen = set()
    for (value,) in cur:
        # whitespace-only cells cannot be embedded
        if isinstance(value, str) and value.strip():
            seen.add(value)
    return sorted(seen, key=lambda v: v.encode("utf-8"))


def build_value_memory(
    entry: DatabaseEntry, provider: EmbeddingProvider, max_values_per_column: int | None = None
) -> ValueMemory:
    memory = ValueMemory(entry.id)
    conn = connect_readonly(entry.location)
    try:
        for table in entry.tables:
            for col in table.columns:
                if col.declared_type != "text":
                    continue
                key = ColumnKey(entry.id, table.name, col.name)
                try:
                    values = distinct_text_values(conn, table.name, col.name)
                except sqlite3.DatabaseError as exc:
                    raise UnreadableDatabase(f"{entry.location}: {exc}") from exc
                if max_values_per_column is not None:
                    values = values[:max_values_per_column]
                index = VectorIndex(provider.dimension)
                for i, value in enumerate(values):
                    rid = _record_id(i)
                    index.add(rid, embed(provider, value))
                    memory.raw_values[(key, rid)] = value
                memory.column_indexes[key] = index
    finally:
        conn.close()
    return memory


def lookup_synonyms(
    memory: ValueMemory, key: ColumnKey, query_value: str, provider: EmbeddingProvider, k: int = DEFAULT_K_VALUES
) -> list[tuple[str, float]]:
    """Top-``k`` stored values of ``key`` closest to ``query_value``.

    At most ``k`` values leave the memory per call.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    index = memory.column_indexes.get(key)
    if index is None:
        raise UnknownColumn(f"no value index for {key}")
    if len(index) == 0 or not query_value.strip():
        return []
    hits = index.search(embed(provider, query_value), k)
    return [(memory.raw_values[(key, rid)], score) for rid, score in hits]


# persistence --------------------------------------------------------------


def save_value_memory(memory: ValueMemory, store: str | os.PathLike) -> Path:
    """Write ``<store>/<db_id>/<table>.<column>.vidx`` files plus a manifest."""
    root = Path(store) / memory.db_id
    root.mkdir(parents=True, exist_ok=True)
    columns = []
    for key in sorted(memory.column_indexes):
        index = memory.column_indexes[key]
        fname = f"{key.table}.{key.column}.vidx"
        save_index(index, root / fname)
        columns.append(
            {
                "table": key.table,
                "column": key.column,
                "file": fname,
                "values": {rid: memory.raw_values[(key, rid)] for rid in index.ids},
            }
        )
    manifest = root / MANIFEST_NAME
    tmp = manifest.with_name(MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps({"db_id": memory.db_id, "columns": columns}, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, manifest)
    return root


def load_value_memory(store: str | os.PathLike, db_id: str) -> ValueMemory:
    root = Path(store) / db_id
    try:
        data = json.loads((root / MANIFEST_NAME).read_text(encoding="utf-8"))
        if data["db_id"] != db_id:
            raise ValueError(f"manifest is for {data['db_id']!r}")
        columns = [(c["table"], c["column"], c["file"], dict(c["values"])) for c in data["columns"]]
    except FileNotFoundError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptIndex(f"{root / MANIFEST_NAME}: {exc}") from exc

    memory = ValueMemory(db_id)
    for table, column, fname, values in columns:
        key = ColumnKey(db_id, table, column)
        index = load_index(root / fname)
        if set(index.ids) != set(values):
            raise CorruptIndex(f"{root / fname}: record ids disagree with the manifest")
        memory.column_indexes[key] = index
        for rid in index.ids:
            if not isinstance(values[rid], str):
                raise CorruptIndex(f"{root / MANIFEST_NAME}: value for {rid} is not a string")
            memory.raw_values[(key, rid)] = values[rid]
    return memory
