"""Prompt templates and the parsers for their responses.

Templates live in ``templates/*.txt`` as ``str.format`` strings; every
substitution slot is named.  Parsers are total: any response maps to a value
or raises :class:`~relmem.errors.MalformedResponse`.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from ..catalog import SchemaText
from ..errors import MalformedResponse, NoSqlInResponse
from ..sqltools import SqlResult

TEMPLATE_VERSION = 1


class PromptKind(enum.Enum):
    CONTEXT_SWITCH = "context_switch"
    PLAN_GENERATION = "plan_generation"
    VALUE_CORRECTION = "value_correction"
    ERROR_CORRECTION = "error_correction"
    RETURN_TYPE_DECISION = "return_type_decision"
    OUTPUT_GENERATION = "output_generation"
    ANSWER_JUDGE = "answer_judge"
    TEXT_TO_SQL = "text_to_sql"


@lru_cache(maxsize=None)
def template(kind: PromptKind) -> str:
    text = resources.files(__package__).joinpath("templates", f"{kind.value}.txt").read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def render(kind: PromptKind, **slots: str) -> str:
    return template(kind).format(**slots)


# ---------------------------------------------------------------------------
# renderers


def render_context_switch(question: str) -> str:
    return render(PromptKind.CONTEXT_SWITCH, question=question)


def render_plan(question: str, schemas: Sequence[SchemaText]) -> str:
    blocks = "\n".join(f"Database {s.db_id}\nSchema: {s.body}" for s in schemas)
    return render(PromptKind.PLAN_GENERATION, schemas=blocks, question=question)


def format_candidate_values(candidates: Iterable[tuple[str, str, Sequence[str]]]) -> str:
    """One ``Table: t; Column: c; Values: [...]`` line per column."""
    return "\n".join(f"Table: {t}; Column: {c}; Values: {list(values)!r}" for t, c, values in candidates)


def render_value_correction(sql: str, candidates: Iterable[tuple[str, str, Sequence[str]]], question: str) -> str:
    values = "\n" + format_candidate_values(candidates)
    return render(PromptKind.VALUE_CORRECTION, sql=sql, candidate_values=values, question=question)


def render_error_correction(schema: str, question: str, sql: str, error: str) -> str:
    return render(PromptKind.ERROR_CORRECTION, schema=schema, question=question, sql=sql, error=error)


def render_return_type(question: str, sql: str) -> str:
    return render(PromptKind.RETURN_TYPE_DECISION, question=question, sql=sql)


def format_evidence(evidence: Iterable[tuple[str, SqlResult]]) -> str:
    parts = []
    for sql, result in evidence:
        parts.append(f"SQL: {sql}\nResult: {json.dumps(result.to_json(), ensure_ascii=False)}")
    return "\n".join(parts)


def render_output(question: str, evidence: Iterable[tuple[str, SqlResult]]) -> str:
    return render(PromptKind.OUTPUT_GENERATION, results=format_evidence(evidence), question=question)


def render_judge(gold_answer: str, answer: str) -> str:
    return render(PromptKind.ANSWER_JUDGE, gold_answer=gold_answer, answer=answer)


def render_text_to_sql(goal: str, schema: str, seed_sql: str | None = None) -> str:
    hint = f"Example SQL: {seed_sql}\n" if seed_sql else ""
    return render(PromptKind.TEXT_TO_SQL, schema=schema, goal=goal, hint=hint)


# ---------------------------------------------------------------------------
# parsers

_CONTEXT_TOKEN = re.compile(r"\((YES|NO)\)", re.I)


def parse_context_switch(text: str) -> bool:
    """True when ``(YES)`` occurs before any ``(NO)``."""
    m = _CONTEXT_TOKEN.search(text)
    if m is None:
        raise MalformedResponse("neither (YES) nor (NO) in context-switch response")
    return m.group(1).upper() == "YES"


_YES_NO = re.compile(r"\b(yes|no)\b", re.I)


def parse_yes_no(text: str) -> bool:
    m = _YES_NO.search(text)
    if m is None:
        raise MalformedResponse("no yes/no answer in response")
    return m.group(1).lower() == "yes"


@dataclass(frozen=True)
class RetrievalTarget:
    goal: str
    candidate_sql: str
    db_id: str


@dataclass
class RetrievalPlan:
    targets: list[RetrievalTarget] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


_PLAN_BLOCK = re.compile(
    r"Goal\s*:\s*(?P<goal>.*?)\*\s*Begin\s+SQL\s*\*(?P<sql>.*?)\*\s*End\s+SQL\s*\*(?P<dbline>\s*[^\n]*)",
    re.S | re.I,
)
_DB_LINE = re.compile(r"\s*(?:\d+[.)]\s*)?Database\s*(?:name)?\s*[:=-]?\s*(?P<name>.*)", re.I)


def _clean_db_name(raw: str) -> str:
    return raw.strip().strip("`'\"*[]().,;: ")


def parse_plan(text: str, candidate_ids: Sequence[str]) -> RetrievalPlan:
    """Parse ``Goal / *Begin SQL* ... *End SQL* / Database`` blocks.

    Blocks naming a database outside ``candidate_ids`` are dropped and a
    warning is recorded.  Database names match case-insensitively and are
    returned in their canonical spelling.
    """
    canon = {c.lower(): c for c in candidate_ids}
    plan = RetrievalPlan()
    for m in _PLAN_BLOCK.finditer(text):
        goal = re.split(r"Goal\s*:", m.group("goal"), flags=re.I)[-1].strip()
        sql = m.group("sql").strip().rstrip(";").strip()
        dm = _DB_LINE.match(m.group("dbline"))
        name = _clean_db_name(dm.group("name")) if dm else ""
        db_id = canon.get(name.lower()) or canon.get(name.split()[0].lower() if name.split() else "")
        if not sql:
            plan.warnings.append(f"dropped block with empty SQL (goal {goal!r})")
        elif db_id is None:
            plan.warnings.append(f"dropped block targeting unknown database {name!r}")
        else:
            plan.targets.append(RetrievalTarget(goal, sql, db_id))
    return plan


_FENCE = re.compile(r"```[ \t]*(?:sql|sqlite)?[ \t]*\n?(?P<body>.*?)```", re.S | re.I)
_SQL_START_LINE = re.compile(r"^[ \t>*-]*(?P<kw>SELECT|WITH)\b", re.I | re.M)
_SQL_START_ANY = re.compile(r"\b(?P<kw>SELECT)\b")
_STOP_LINE = re.compile(r"^\s*(Reasons?|Explanation|Note|Corrected SQL)\s*:", re.I)


def _cut_statement(text: str) -> str:
    """Text up to the first ``;`` outside quotes, a blank line, or a prose line."""
    quote = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == quote:
                quote = None
        elif ch in ("'", '"', "`"):
            quote = ch
        elif ch == ";":
            return text[:i]
        elif ch == "\n":
            rest = text[i + 1 :]
            if not rest.strip() or rest.lstrip(" \t").startswith("\n") or _STOP_LINE.match(rest) or rest.startswith("```"):
                return text[:i]
        i += 1
    return text


def extract_sql(text: str) -> str:
    """First SQL query in a response: fenced block first, then a line starting with SELECT/WITH."""
    for m in _FENCE.finditer(text):
        body = m.group("body").strip()
        if _SQL_START_LINE.match(body):
            sql = _cut_statement(body).strip()
            if sql:
                return sql
    m = _SQL_START_LINE.search(text) or _SQL_START_ANY.search(text)
    if m is None:
        raise NoSqlInResponse("no SQL statement in response")
    sql = _cut_statement(text[m.start("kw") :]).strip()
    if not sql:
        raise NoSqlInResponse("empty SQL statement in response")
    return sql


_CORRECTED_MARKER = re.compile(r"Corrected SQL\s*:", re.I)


def parse_corrected_sql(text: str) -> str:
    """Statement after the last ``Corrected SQL:`` marker.

    The value-correction prompt itself ends with that marker, so a response
    that opens directly with a query counts as following it.
    """
    markers = list(_CORRECTED_MARKER.finditer(text))
    if markers:
        return extract_sql(text[markers[-1].end() :])
    head = _FENCE.sub(lambda m: m.group("body"), text, count=1).lstrip()
    if re.match(r"(SELECT|WITH)\b", head, re.I):
        return extract_sql(text)
    raise MalformedResponse("no 'Corrected SQL:' marker in response")
