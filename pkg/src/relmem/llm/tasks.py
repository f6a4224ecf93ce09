"""One function per LLM step of the pipeline: render, complete, parse, fall back."""

from __future__ import annotations

import enum
import logging
import re
from typing import Sequence

from ..catalog import SchemaText
from ..errors import ExecutionError, MalformedResponse
from ..sqltools import SqlResult
from . import prompts
from .prompts import RetrievalPlan
from .providers import CompletionProvider, complete

log = logging.getLogger(__name__)


class ContextDecision(enum.Enum):
    ANSWERABLE = "answerable"
    NEEDS_RETRIEVAL = "needs_retrieval"


def decide_context_switch(provider: CompletionProvider, question: str) -> ContextDecision:
    """Ask whether the question already carries its answer.

    Ambiguous responses default to retrieval: skipping wrongly loses the
    answer, retrieving wrongly only costs time.
    """
    text = complete(provider, prompts.render_context_switch(question))
    try:
        answerable = prompts.parse_context_switch(text)
    except MalformedResponse:
        log.info("context switch response had no decision token; retrieving")
        return ContextDecision.NEEDS_RETRIEVAL
    return ContextDecision.ANSWERABLE if answerable else ContextDecision.NEEDS_RETRIEVAL


def generate_plan(provider: CompletionProvider, question: str, candidate_schemas: Sequence[SchemaText]) -> RetrievalPlan:
    if not candidate_schemas:
        raise ValueError("at least one candidate schema is required")
    text = complete(provider, prompts.render_plan(question, candidate_schemas))
    plan = prompts.parse_plan(text, [s.db_id for s in candidate_schemas])
    for warning in plan.warnings:
        log.warning("plan: %s", warning)
    return plan


def correct_sql_with_values(
    provider: CompletionProvider,
    sql: str,
    candidates: Sequence[tuple[str, str, Sequence[str]]],
    question: str = "",
) -> str:
    """Let the LLM swap literals for stored values; the original SQL on any parse failure.

    ``candidates`` holds ``(table, column, values)`` triples.
    """
    if not candidates:
        return sql
    text = complete(provider, prompts.render_value_correction(sql, candidates, question))
    try:
        return prompts.parse_corrected_sql(text)
    except MalformedResponse:
        return sql


def correct_sql_with_error(
    provider: CompletionProvider, schema_text: str, question: str, sql: str, error: ExecutionError | str
) -> str:
    message = error.message if isinstance(error, ExecutionError) else str(error)
    if not message:
        raise ValueError("error message must be non-empty")
    text = complete(provider, prompts.render_error_correction(schema_text, question, sql, message))
    return prompts.extract_sql(text)


def is_goal_sql_equivalent(provider: CompletionProvider, goal: str, sql: str) -> bool:
    text = complete(provider, prompts.render_return_type(goal, sql))
    try:
        return prompts.parse_yes_no(text)
    except MalformedResponse:
        return False


def generate_output(provider: CompletionProvider, question: str, evidence: Sequence[tuple[str, SqlResult]]) -> str:
    return complete(provider, prompts.render_output(question, evidence)).strip()


def _fold(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().casefold()


def judge_equivalence(provider: CompletionProvider | None, gold_answer: str, answer: str) -> bool:
    """Are two answers equivalent?  Folded exact matches skip the provider."""
    if not gold_answer.strip() or not answer.strip():
        raise ValueError("both answers must be non-empty")
    if _fold(gold_answer) == _fold(answer):
        return True
    if provider is None:
        return False
    text = complete(provider, prompts.render_judge(gold_answer, answer))
    try:
        return prompts.parse_yes_no(text)
    except MalformedResponse:
        return False


def text_to_sql(provider: CompletionProvider, goal: str, schema_text: str, seed_sql: str | None = None) -> str:
    if not schema_text.strip():
        raise ValueError("schema text must be non-empty")
    text = complete(provider, prompts.render_text_to_sql(goal, schema_text, seed_sql))
    return prompts.extract_sql(text)
