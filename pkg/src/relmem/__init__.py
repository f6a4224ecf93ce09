"""LLM-agnostic memory for answering questions over a collection of relational databases."""

from .catalog import Catalog, DatabaseEntry, SchemaText, TableSchema, serialize_schema
from .embedding import HashingEmbedder, HttpEmbeddingProvider, VectorIndex, embed, load_index, save_index
from .evalkit import EvalQuestion, EvalReport, run_eval
from .llm.providers import HttpCompletionProvider, ScriptedMock
from .pipeline import Pipeline, PipelineConfig, PipelineFailure, PipelineResponse, Providers
from .selection import compose_training_data, index_schemas, select_top_k
from .sqltools import SqlResult, execute_sql, extract_conditions, results_equal, truncate_result
from .values import ColumnKey, ValueMemory, build_value_memory, lookup_synonyms

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "ColumnKey",
    "DatabaseEntry",
    "EvalQuestion",
    "EvalReport",
    "HashingEmbedder",
    "HttpCompletionProvider",
    "HttpEmbeddingProvider",
    "Pipeline",
    "PipelineConfig",
    "PipelineFailure",
    "PipelineResponse",
    "Providers",
    "SchemaText",
    "ScriptedMock",
    "SqlResult",
    "TableSchema",
    "ValueMemory",
    "VectorIndex",
    "build_value_memory",
    "compose_training_data",
    "embed",
    "execute_sql",
    "extract_conditions",
    "index_schemas",
    "load_index",
    "lookup_synonyms",
    "results_equal",
    "run_eval",
    "save_index",
    "select_top_k",
    "serialize_schema",
    "truncate_result",
]
