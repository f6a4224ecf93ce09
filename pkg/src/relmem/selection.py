"""Database selection memory.

Schema texts are embedded into a :class:`~relmem.embedding.VectorIndex`; a
question is routed to the ``k`` databases whose schema embedding is most
similar.  :func:`compose_training_data` emits the labelled
question/schema pairs a relevance classifier would be trained on.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .catalog import Catalog, serialize_schema
from .embedding import EmbeddingProvider, VectorIndex, embed
from .errors import InsufficientCatalog, UnknownDatabase

DEFAULT_TOP_K = 5
COMPOSITE_SEPARATOR = "; "


@dataclass(frozen=True)
class SelectionCandidate:
    db_id: str
    score: float


@dataclass(frozen=True)
class SelectionTrainingRecord:
    question: str
    schema_text: str
    label: int
    source: str  # positive | negative | composite


def index_schemas(catalog: Catalog, provider: EmbeddingProvider, index: VectorIndex | None = None) -> VectorIndex:
    """Embed every schema text of ``catalog``.

    Passing an existing ``index`` only embeds databases it does not hold yet,
    which is how newly registered databases are added.
    """
    if len(catalog) == 0:
        raise ValueError("catalog is empty")
    if index is None:
        index = VectorIndex(provider.dimension)
    for entry in catalog:
        if entry.id not in index:
            index.add(entry.id, embed(provider, serialize_schema(entry).text))
    return index


def select_top_k(
    question: str, index: VectorIndex, provider: EmbeddingProvider, k: int = DEFAULT_TOP_K
) -> list[SelectionCandidate]:
    if k <= 0:
        raise ValueError("k must be positive")
    if len(index) == 0:
        raise ValueError("selection index is empty")
    hits = index.search(embed(provider, question), k)
    return [SelectionCandidate(db_id, score) for db_id, score in hits]


def compose_training_data(
    qa_triples: Sequence[tuple[str, str]],
    catalog: Catalog,
    negatives_per_positive: int = 1,
    composite_k: int = 2,
    seed: int = 0,
    num_composites: int = 0,
) -> list[SelectionTrainingRecord]:
    """Build labelled (question, schema) pairs from ``(question, gold_db_id)`` pairs.

    Every question yields one positive record and ``negatives_per_positive``
    negatives whose database is drawn uniformly without replacement from the
    non-gold databases.  Each of the ``num_composites`` composite questions
    joins ``composite_k`` distinct sampled questions with ``"; "`` and is
    paired with every gold database of its parts (label 1) plus, per gold
    database, ``negatives_per_positive`` sampled non-gold databases (label 0).
    Negative counts are clamped to the number of available databases.
    """
    if negatives_per_positive < 1:
        raise ValueError("negatives_per_positive must be >= 1")
    if composite_k < 2:
        raise ValueError("composite_k must be >= 2")
    if len(catalog) < 2:
        raise InsufficientCatalog("need at least two databases to sample negatives")
    for _, db_id in qa_triples:
        if db_id not in catalog:
            raise UnknownDatabase(f"gold database {db_id!r} is not in the catalog")
    if num_composites and len(qa_triples) < composite_k:
        raise ValueError(f"need at least {composite_k} questions to build composites")

    rng = random.Random(seed)
    db_ids = sorted(catalog.ids)
    schema = {db_id: serialize_schema(catalog.get(db_id)).text for db_id in db_ids}

    def negatives(gold: set[str], n: int) -> list[str]:
        pool = [d for d in db_ids if d not in gold]
        return rng.sample(pool, min(n, len(pool)))

    records = []
    for question, gold in qa_triples:
        records.append(SelectionTrainingRecord(question, schema[gold], 1, "positive"))
        for db_id in negatives({gold}, negatives_per_positive):
            records.append(SelectionTrainingRecord(question, schema[db_id], 0, "negative"))

    for _ in range(num_composites):
        parts = rng.sample(range(len(qa_triples)), composite_k)
        question = COMPOSITE_SEPARATOR.join(qa_triples[i][0] for i in parts)
        golds = sorted({qa_triples[i][1] for i in parts})
        for db_id in golds:
            records.append(SelectionTrainingRecord(question, schema[db_id], 1, "composite"))
        for db_id in negatives(set(golds), negatives_per_positive * len(golds)):
            records.append(SelectionTrainingRecord(question, schema[db_id], 0, "composite"))
    return records


def training_jsonl(records: Iterable[SelectionTrainingRecord]) -> str:
    return "".join(json.dumps(asdict(r), ensure_ascii=False) + "\n" for r in records)


def write_training_jsonl(records: Iterable[SelectionTrainingRecord], path: str | os.PathLike) -> None:
    Path(path).write_text(training_jsonl(records), encoding="utf-8")
