import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relmem.catalog import Catalog, serialize_schema
from relmem.demo import DEMO_DATABASES
from relmem.errors import InsufficientCatalog, UnknownDatabase
from relmem.selection import compose_training_data, index_schemas, select_top_k, training_jsonl

FIVE = ["restaurant", "singer", "employee_hire_evaluation", "city", "hospital"]


def sub_catalog(demo_paths, ids):
    cat = Catalog()
    for db_id in ids:
        cat.register_database(demo_paths[db_id], db_id)
    return cat


def test_index_counts(demo_paths, demo_catalog, embedder):
    assert len(index_schemas(sub_catalog(demo_paths, FIVE), embedder)) == 5
    assert len(index_schemas(demo_catalog, embedder)) == 20


def test_incremental_reindex_keeps_vectors(demo_paths, embedder):
    cat = sub_catalog(demo_paths, FIVE)
    idx = index_schemas(cat, embedder)
    before = {rid: idx.vector(rid).tobytes() for rid in idx.ids}
    cat.register_database(demo_paths["pets_1"], "pets_1")
    idx = index_schemas(cat, embedder, idx)
    assert len(idx) == 6
    assert all(idx.vector(rid).tobytes() == v for rid, v in before.items())


def test_hospital_question_returns_both(demo_paths, embedder):
    cat = sub_catalog(demo_paths, ["city", "hospital"])
    idx = index_schemas(cat, embedder)
    got = select_top_k("How many hospitals are located in city Seattle", idx, embedder, 5)
    assert {c.db_id for c in got} == {"city", "hospital"}


def test_candidates_non_increasing(demo_catalog, embedder):
    idx = index_schemas(demo_catalog, embedder)
    got = select_top_k("Show me all the Thai restaurants in New York", idx, embedder, 5)
    assert got[0].db_id == "restaurant"
    scores = [c.score for c in got]
    assert scores == sorted(scores, reverse=True)


def test_k_larger_than_catalog(demo_paths, embedder):
    cat = sub_catalog(demo_paths, FIVE)
    idx = index_schemas(cat, embedder)
    assert len(select_top_k("anything", idx, embedder, 50)) == 5


def test_schema_text_selects_itself(demo_catalog, embedder):
    idx = index_schemas(demo_catalog, embedder)
    for entry in demo_catalog:
        text = serialize_schema(entry).text
        assert select_top_k(text, idx, embedder, 1)[0].db_id == entry.id


def test_registration_order_invariance(demo_paths, embedder):
    ids = list(DEMO_DATABASES)
    a = index_schemas(sub_catalog(demo_paths, ids), embedder)
    b = index_schemas(sub_catalog(demo_paths, ids[::-1]), embedder)
    q = "Which singer has the highest net worth?"
    assert select_top_k(q, a, embedder, 7) == select_top_k(q, b, embedder, 7)


@settings(max_examples=25, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz _", min_size=3, max_size=40).filter(str.strip), st.integers(1, 19))
def test_monotone_containment(demo_catalog_session, q, k):
    cat, idx, emb = demo_catalog_session
    small = {c.db_id for c in select_top_k(q, idx, emb, k)}
    large = {c.db_id for c in select_top_k(q, idx, emb, k + 1)}
    assert small <= large


@pytest.fixture(scope="module")
def demo_catalog_session(demo_paths):
    from relmem.embedding import HashingEmbedder

    cat = sub_catalog(demo_paths, list(DEMO_DATABASES))
    emb = HashingEmbedder()
    return cat, index_schemas(cat, emb), emb


QA = [(f"question number {i}", db) for i, db in enumerate(["singer", "city", "hospital", "restaurant", "pets_1"] * 2)]


def test_ten_triples_twenty_records(demo_catalog):
    records = compose_training_data(QA, demo_catalog, negatives_per_positive=1)
    assert len(records) == 20
    assert sum(r.label for r in records) == 10


def test_positive_and_negative_schemas(demo_catalog):
    records = compose_training_data(QA, demo_catalog, negatives_per_positive=3, seed=4)
    gold = dict(QA)
    for r in records:
        gold_text = serialize_schema(demo_catalog.get(gold[r.question])).text
        if r.label:
            assert r.schema_text == gold_text
        else:
            assert r.schema_text != gold_text
    # negatives for one question are distinct
    for q, _ in QA:
        negs = [r.schema_text for r in records if r.question == q and not r.label]
        assert len(negs) == len(set(negs)) == 3


def test_composite_labels(demo_paths):
    cat = sub_catalog(demo_paths, ["singer", "city", "hospital"])
    qa = [("How many singers?", "singer"), ("Largest city?", "city")]
    records = compose_training_data(qa, cat, negatives_per_positive=1, composite_k=2, num_composites=1, seed=0)
    comp = [r for r in records if r.source == "composite"]
    assert {r.question for r in comp} in ({"How many singers?; Largest city?"}, {"Largest city?; How many singers?"})
    hospital = serialize_schema(cat.get("hospital")).text
    assert [r.label for r in comp if r.schema_text == hospital] == [0]
    assert sum(r.label for r in comp) == 2


def test_same_seed_same_bytes(demo_catalog, tmp_path):
    a = training_jsonl(compose_training_data(QA, demo_catalog, 2, seed=11, num_composites=3))
    b = training_jsonl(compose_training_data(QA, demo_catalog, 2, seed=11, num_composites=3))
    assert a == b
    assert all(json.loads(line)["label"] in (0, 1) for line in a.splitlines())


def test_training_errors(demo_paths, demo_catalog):
    with pytest.raises(InsufficientCatalog):
        compose_training_data([("q", "singer")], sub_catalog(demo_paths, ["singer"]))
    with pytest.raises(UnknownDatabase):
        compose_training_data([("q", "nowhere")], demo_catalog)
