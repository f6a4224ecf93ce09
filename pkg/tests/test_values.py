import sqlite3

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import distinct_text_values
from relmem.catalog import Catalog
from relmem.embedding import HashingEmbedder
from relmem.errors import CorruptIndex, UnknownColumn
from relmem.values import ColumnKey, build_value_memory, load_value_memory, lookup_synonyms, save_value_memory


def entry_for(tmp_path, ddl, rows, name="t"):
    path = tmp_path / f"{name}.sqlite"
    conn = sqlite3.connect(path)
    conn.execute(ddl)
    table = ddl.split()[2]
    if rows:
        conn.executemany(f"INSERT INTO {table} VALUES ({', '.join('?' * len(rows[0]))})", rows)
    conn.commit()
    conn.close()
    return Catalog().register_database(path, name), path


def test_location_distinct_count(tmp_path, embedder):
    entry, path = entry_for(tmp_path, "CREATE TABLE restaurant (name TEXT, location TEXT)", [("a", "LA"), ("b", "SF"), ("c", "LA")])
    mem = build_value_memory(entry, embedder)
    key = ColumnKey("t", "restaurant", "location")
    assert len(mem.column_indexes[key]) == len(distinct_text_values(path, "restaurant", "location")) == 2


def test_null_column_and_integer_column(tmp_path, embedder):
    entry, _ = entry_for(tmp_path, "CREATE TABLE t (note TEXT, n INTEGER)", [(None, 1), (None, 2)])
    mem = build_value_memory(entry, embedder)
    assert len(mem.column_indexes.get(ColumnKey("t", "t", "note"), [])) == 0
    assert ColumnKey("t", "t", "n") not in mem.column_indexes


def test_every_text_column_matches_select_distinct(demo_catalog, demo_paths, embedder):
    for entry in demo_catalog:
        mem = build_value_memory(entry, embedder)
        for table in entry.tables:
            for col in table.columns:
                if col.declared_type != "text":
                    continue
                key = ColumnKey(entry.id, table.name, col.name)
                stored = set(mem.values(key))
                assert stored == distinct_text_values(demo_paths[entry.id], table.name, col.name)


def test_case_variants_stay_separate(tmp_path, embedder):
    entry, _ = entry_for(tmp_path, "CREATE TABLE c (city TEXT)", [("LA",), ("la",), (" LA ",)])
    mem = build_value_memory(entry, embedder)
    assert sorted(mem.values(ColumnKey("t", "c", "city"))) == [" LA ", "LA", "la"]


def test_lookup_la(demo_catalog, embedder):
    mem = build_value_memory(demo_catalog.get("restaurant"), embedder)
    key = mem.resolve("RESTAURANT", "Location")
    hits = lookup_synonyms(mem, key, "la", embedder, k=10)
    assert hits[0][0] == "LA" and hits[0][1] == pytest.approx(1.0, abs=1e-6)
    assert lookup_synonyms(mem, key, "New York", embedder, k=1)[0][0] == "New York"


def test_lookup_unknown_column(demo_catalog, embedder):
    mem = build_value_memory(demo_catalog.get("restaurant"), embedder)
    with pytest.raises(UnknownColumn):
        lookup_synonyms(mem, ColumnKey("restaurant", "restaurant", "rating"), "x", embedder)


def test_rebuild_is_identical(demo_catalog, embedder):
    a = build_value_memory(demo_catalog.get("employee_hire_evaluation"), embedder)
    b = build_value_memory(demo_catalog.get("employee_hire_evaluation"), embedder)
    assert a.column_indexes == b.column_indexes
    assert a.raw_values == b.raw_values


def test_persistence_round_trip(tmp_path, demo_catalog, embedder):
    mem = build_value_memory(demo_catalog.get("restaurant"), embedder)
    save_value_memory(mem, tmp_path)
    again = load_value_memory(tmp_path, "restaurant")
    assert again.column_indexes == mem.column_indexes
    assert again.raw_values == mem.raw_values


def test_corrupt_value_store(tmp_path, demo_catalog, embedder):
    mem = build_value_memory(demo_catalog.get("restaurant"), embedder)
    root = save_value_memory(mem, tmp_path)
    vidx = sorted(root.glob("*.vidx"))[0]
    vidx.write_text(vidx.read_text()[:40])
    with pytest.raises(CorruptIndex):
        load_value_memory(tmp_path, "restaurant")
    save_value_memory(mem, tmp_path)
    (root / "values.json").write_text("{not json")
    with pytest.raises(CorruptIndex):
        load_value_memory(tmp_path, "restaurant")


@pytest.fixture(scope="module")
def big_column(tmp_path_factory):
    path = tmp_path_factory.mktemp("vals") / "v.sqlite"
    conn = sqlite3.connect(path)
    conn.execute("CREATE TABLE t (v TEXT)")
    conn.executemany("INSERT INTO t VALUES (?)", [(f"value {i % 37} {'x' * (i % 5)}",) for i in range(300)])
    conn.commit()
    conn.close()
    entry = Catalog().register_database(path, "v")
    emb = HashingEmbedder()
    return path, build_value_memory(entry, emb), emb


@settings(max_examples=40, deadline=None)
@given(st.text(min_size=1, max_size=20).filter(str.strip), st.integers(1, 50))
def test_lookup_privacy_bound_and_provenance(big_column, query, k):
    path, mem, emb = big_column
    key = ColumnKey("v", "t", "v")
    hits = lookup_synonyms(mem, key, query, emb, k)
    assert len(hits) <= k
    conn = sqlite3.connect(path)
    for value, _ in hits:
        assert conn.execute("SELECT count(*) FROM t WHERE v = ?", (value,)).fetchone()[0] >= 1
    conn.close()
