"""End-to-end question answering over the catalog.

Stages, in order: context switch, database selection, plan refinement,
per-target text-to-SQL with value grounding, execution with bounded error
correction, return-type decision, output generation.  Every stage is
recorded in the response trace.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .catalog import Catalog, SchemaText, serialize_schema
from .embedding import EmbeddingProvider, VectorIndex
from .errors import (
    AmbiguousColumn,
    ExecutionError,
    MalformedResponse,
    PromptTooLarge,
    ProviderUnavailable,
    RelmemError,
    SqlParseError,
    UnknownColumn,
)
from .llm import tasks
from .llm.prompts import RetrievalPlan, RetrievalTarget
from .llm.providers import CompletionProvider
from .selection import SelectionCandidate, index_schemas, select_top_k
from .sqltools import SqlResult, execute_sql, extract_conditions, truncate_result
from .values import ColumnKey, ValueMemory, build_value_memory, lookup_synonyms

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    k_databases: int = 5
    k_values: int = 10
    max_correction_attempts: int = 3
    result_truncation_rows: int = 10
    execution_timeout_secs: float = 5.0
    use_context_switch: bool = True
    use_value_memory: bool = True

    def __post_init__(self):
        checks = {
            "k_databases": 1 <= self.k_databases <= 1000,
            "k_values": 1 <= self.k_values <= 1000,
            "max_correction_attempts": 0 <= self.max_correction_attempts <= 20,
            "result_truncation_rows": 1 <= self.result_truncation_rows <= 10_000,
            "execution_timeout_secs": 0 < self.execution_timeout_secs <= 3600,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"{name}={getattr(self, name)!r} is out of range")


@dataclass
class Providers:
    llm: CompletionProvider
    embedder: EmbeddingProvider
    # defaults to ``llm`` when unset
    text_to_sql: CompletionProvider | None = None

    @property
    def sql_writer(self) -> CompletionProvider:
        return self.text_to_sql or self.llm


@dataclass(frozen=True)
class Excluded:
    reason: str


@dataclass
class RetrievalOutcome:
    target: RetrievalTarget
    final_sql: str
    result: SqlResult | Excluded
    correction_attempts: int = 0
    value_corrected: bool = False

    @property
    def ok(self) -> bool:
        return isinstance(self.result, SqlResult)

    def to_json(self) -> dict:
        out = {
            "db_id": self.target.db_id,
            "goal": self.target.goal,
            "final_sql": self.final_sql,
            "correction_attempts": self.correction_attempts,
            "value_corrected": self.value_corrected,
        }
        if isinstance(self.result, SqlResult):
            out["result"] = self.result.to_json()
        else:
            out["excluded"] = self.result.reason
        return out


@dataclass
class Stage:
    name: str
    inputs: dict[str, Any]
    outputs: dict[str, Any]
    duration_ms: float = 0.0

    def to_json(self, timing: bool = True) -> dict:
        out = {"stage": self.name, "inputs": self.inputs, "outputs": self.outputs}
        if timing:
            out["duration_ms"] = round(self.duration_ms, 3)
        return out


@dataclass
class PipelineResponse:
    question: str
    kind: str  # "text" | "sql_result"
    answer_text: str | None = None
    answer_result: SqlResult | None = None
    answer_sql: str | None = None
    answer_db_id: str | None = None
    candidates: list[SelectionCandidate] = field(default_factory=list)
    plan: RetrievalPlan | None = None
    outcomes: list[RetrievalOutcome] = field(default_factory=list)
    trace: list[Stage] = field(default_factory=list)

    def __post_init__(self):
        if self.kind == "text":
            if self.answer_text is None or self.answer_result is not None:
                raise ValueError("text responses carry answer_text only")
        elif self.kind == "sql_result":
            if self.answer_result is None or self.answer_text is not None:
                raise ValueError("sql_result responses carry answer_result only")
        else:
            raise ValueError(f"unknown response kind {self.kind!r}")

    @property
    def retrieved_results(self) -> list[SqlResult]:
        return [o.result for o in self.outcomes if isinstance(o.result, SqlResult)]

    @property
    def targeted_db_ids(self) -> list[str]:
        return [t.db_id for t in self.plan.targets] if self.plan else []

    def answer_json(self):
        if self.kind == "text":
            return self.answer_text
        return {"db_id": self.answer_db_id, "sql": self.answer_sql, "result": self.answer_result.to_json()}

    def to_json(self, trace: bool = True, timing: bool = True) -> dict:
        out = {"kind": self.kind, "answer": self.answer_json()}
        if trace:
            out["trace"] = [s.to_json(timing) for s in self.trace]
        return out


class PipelineFailure(RelmemError):
    """A provider became unreachable mid-run; carries the partial trace."""

    code = "pipeline_failure"

    def __init__(self, question: str, cause: Exception, trace: list[Stage]):
        super().__init__(f"{getattr(cause, 'code', type(cause).__name__)}: {cause}")
        self.question = question
        self.cause = cause
        self.trace = trace

    def to_json(self, timing: bool = True) -> dict:
        return {
            "error": {"code": getattr(self.cause, "code", "internal"), "message": str(self.cause)},
            "trace": [s.to_json(timing) for s in self.trace],
        }


class _Recorder:
    def __init__(self, clock: Callable[[], float]):
        self.clock = clock
        self.stages: list[Stage] = []

    def record(self, name: str, inputs: dict, outputs: dict, started: float) -> None:
        self.stages.append(Stage(name, inputs, outputs, (self.clock() - started) * 1000.0))


class Pipeline:
    """Answers questions against a fixed catalog and its memories.

    The catalog, selection index and value memories are treated as immutable,
    so one instance can serve concurrent :meth:`answer` calls.
    """

    def __init__(
        self,
        catalog: Catalog,
        selection_index: VectorIndex,
        value_memories: dict[str, ValueMemory],
        providers: Providers,
        config: PipelineConfig | None = None,
        clock: Callable[[], float] = time.perf_counter,
        trace_path: str | Path | None = None,
        trace_timing: bool = True,
    ):
        self.catalog = catalog
        self.selection_index = selection_index
        self.value_memories = value_memories
        self.providers = providers
        self.config = config or PipelineConfig()
        self.clock = clock
        self.trace_path = Path(trace_path) if trace_path else None
        # durations make trace files differ run to run
        self.trace_timing = trace_timing
        self._trace_lock = threading.Lock()

    @classmethod
    def build(cls, catalog: Catalog, providers: Providers, config: PipelineConfig | None = None, **kwargs) -> "Pipeline":
        index = index_schemas(catalog, providers.embedder)
        memories = {e.id: build_value_memory(e, providers.embedder) for e in catalog}
        return cls(catalog, index, memories, providers, config, **kwargs)

    # ------------------------------------------------------------------

    def answer(self, question: str) -> PipelineResponse:
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        rec = _Recorder(self.clock)
        try:
            response = self._answer(question, rec)
        except ProviderUnavailable as exc:
            failure = PipelineFailure(question, exc, rec.stages)
            self._write_trace(question, rec.stages, failure=failure)
            raise failure from exc
        self._write_trace(question, rec.stages)
        return response

    def answer_batch(self, questions: Sequence[str], parallelism: int = 1) -> list[PipelineResponse | PipelineFailure]:
        """Answer every question; failures are returned in place, order is preserved."""
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")

        def one(q: str) -> PipelineResponse | PipelineFailure:
            try:
                return self.answer(q)
            except PipelineFailure as failure:
                return failure
            except Exception as exc:  # isolate one bad question from the batch
                log.exception("question failed: %r", q)
                return PipelineFailure(q, exc, [])

        if parallelism == 1 or len(questions) <= 1:
            return [one(q) for q in questions]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(one, questions))

    # ------------------------------------------------------------------

    def _answer(self, question: str, rec: _Recorder) -> PipelineResponse:
        cfg = self.config
        llm = self.providers.llm

        if cfg.use_context_switch:
            t0 = rec.clock()
            decision = tasks.decide_context_switch(llm, question)
            rec.record("context_switch", {"question": question}, {"decision": decision.value}, t0)
            if decision is tasks.ContextDecision.ANSWERABLE:
                return self._text_answer(question, [], rec, candidates=[], plan=None, outcomes=[])

        t0 = rec.clock()
        candidates = select_top_k(question, self.selection_index, self.providers.embedder, cfg.k_databases)
        rec.record(
            "selection",
            {"question": question, "k": cfg.k_databases},
            {"candidates": [{"db_id": c.db_id, "score": round(c.score, 6)} for c in candidates]},
            t0,
        )

        plan = self._plan(question, candidates, rec)
        outcomes = [self._retrieve(target, rec) for target in plan.targets]
        successes = [o for o in outcomes if o.ok]

        for outcome in successes:
            t0 = rec.clock()
            equivalent = tasks.is_goal_sql_equivalent(llm, question, outcome.final_sql)
            rec.record(
                "return_type",
                {"db_id": outcome.target.db_id, "sql": outcome.final_sql},
                {"equivalent": equivalent},
                t0,
            )
            if equivalent:
                return PipelineResponse(
                    question,
                    "sql_result",
                    answer_result=outcome.result,
                    answer_sql=outcome.final_sql,
                    answer_db_id=outcome.target.db_id,
                    candidates=candidates,
                    plan=plan,
                    outcomes=outcomes,
                    trace=rec.stages,
                )
        return self._text_answer(question, successes, rec, candidates=candidates, plan=plan, outcomes=outcomes)

    def _text_answer(self, question, successes, rec, **fields) -> PipelineResponse:
        n = self.config.result_truncation_rows
        evidence = [(o.final_sql, truncate_result(o.result, n)) for o in successes]
        t0 = rec.clock()
        text = tasks.generate_output(self.providers.llm, question, evidence)
        rec.record("output_generation", {"question": question, "evidence": len(evidence)}, {"answer": text}, t0)
        return PipelineResponse(question, "text", answer_text=text, trace=rec.stages, **fields)

    def _plan(self, question: str, candidates: list[SelectionCandidate], rec: _Recorder) -> RetrievalPlan:
        schemas: list[SchemaText] = [serialize_schema(self.catalog.get(c.db_id)) for c in candidates]
        t0 = rec.clock()
        plan = RetrievalPlan()
        dropped: list[str] = []
        # drop the least relevant schemas until the prompt fits
        while schemas:
            try:
                plan = tasks.generate_plan(self.providers.llm, question, schemas)
                break
            except PromptTooLarge as exc:
                dropped.append(f"{exc}; dropping candidate {schemas[-1].db_id!r}")
                schemas = schemas[:-1]
        plan.warnings[:0] = dropped
        rec.record(
            "planning",
            {"question": question, "candidates": [s.db_id for s in schemas]},
            {
                "targets": [{"goal": t.goal, "sql": t.candidate_sql, "db_id": t.db_id} for t in plan.targets],
                "warnings": list(plan.warnings),
            },
            t0,
        )
        return plan

    def _retrieve(self, target: RetrievalTarget, rec: _Recorder) -> RetrievalOutcome:
        cfg = self.config
        llm = self.providers.llm
        entry = self.catalog.get(target.db_id)
        schema = serialize_schema(entry).text

        t0 = rec.clock()
        try:
            sql = tasks.text_to_sql(self.providers.sql_writer, target.goal, schema, target.candidate_sql)
            note = None
        except MalformedResponse as exc:
            sql, note = target.candidate_sql, f"{exc}; using the plan's SQL"
        rec.record("text_to_sql", {"db_id": target.db_id, "goal": target.goal}, {"sql": sql, "note": note}, t0)

        value_corrected = False
        memory = self.value_memories.get(target.db_id)
        if cfg.use_value_memory and memory is not None:
            corrected = self._ground_values(sql, target, memory, rec)
            value_corrected = corrected != sql
            sql = corrected

        attempts = 0
        while True:
            t0 = rec.clock()
            try:
                result = execute_sql(entry, sql, cfg.execution_timeout_secs)
            except ExecutionError as exc:
                rec.record("execution", {"db_id": target.db_id, "sql": sql}, {"error": exc.message}, t0)
                if attempts >= cfg.max_correction_attempts:
                    reason = f"still failing after {attempts} correction attempts: {exc.message}"
                    rec.record("exclusion", {"db_id": target.db_id, "sql": sql}, {"reason": reason}, rec.clock())
                    return RetrievalOutcome(target, sql, Excluded(reason), attempts, value_corrected)
                attempts += 1
                t0 = rec.clock()
                try:
                    sql = tasks.correct_sql_with_error(llm, schema, target.goal, sql, exc)
                    rec.record("error_correction", {"attempt": attempts, "error": exc.message}, {"sql": sql}, t0)
                except MalformedResponse as bad:
                    rec.record("error_correction", {"attempt": attempts, "error": exc.message}, {"failed": str(bad)}, t0)
                continue
            rec.record(
                "execution",
                {"db_id": target.db_id, "sql": sql},
                {"columns": list(result.columns), "rows": len(result.rows)},
                t0,
            )
            return RetrievalOutcome(target, sql, result, attempts, value_corrected)

    def _ground_values(self, sql: str, target: RetrievalTarget, memory: ValueMemory, rec: _Recorder) -> str:
        entry = self.catalog.get(target.db_id)
        t0 = rec.clock()
        try:
            conditions = extract_conditions(sql, entry)
        except (SqlParseError, UnknownColumn, AmbiguousColumn) as exc:
            rec.record("condition_extraction", {"sql": sql}, {"error": str(exc)}, t0)
            return sql
        rec.record(
            "condition_extraction",
            {"sql": sql},
            {"conditions": [[c.table, c.column, c.operator, c.literal] for c in conditions]},
            t0,
        )

        t0 = rec.clock()
        grouped: dict[ColumnKey, list[str]] = {}
        for cond in conditions:
            key = memory.resolve(cond.table, cond.column)
            if key is None:
                continue
            hits = lookup_synonyms(memory, key, cond.literal, self.providers.embedder, self.config.k_values)
            bucket = grouped.setdefault(key, [])
            for value, _ in hits:
                if value not in bucket:
                    bucket.append(value)
        candidates = [(k.table, k.column, vals) for k, vals in grouped.items() if vals]
        rec.record(
            "value_lookup",
            {"k": self.config.k_values},
            {"candidates": [[t, c, v] for t, c, v in candidates]},
            t0,
        )
        if not candidates:
            return sql

        t0 = rec.clock()
        corrected = tasks.correct_sql_with_values(self.providers.llm, sql, candidates, target.goal)
        rec.record("value_correction", {"sql": sql}, {"sql": corrected}, t0)
        return corrected

    # ------------------------------------------------------------------

    def _write_trace(self, question: str, stages: list[Stage], failure: PipelineFailure | None = None) -> None:
        if self.trace_path is None:
            return
        lines = [json.dumps({"type": "stage", "question": question, **s.to_json(self.trace_timing)}, ensure_ascii=False) for s in stages]
        if failure is not None:
            lines.append(json.dumps({"type": "failure", "question": question, **failure.to_json(self.trace_timing)["error"]}, ensure_ascii=False))
        with self._trace_lock, self.trace_path.open("a", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in lines))


def answer(
    question: str,
    catalog: Catalog,
    selection_index: VectorIndex,
    value_memories: dict[str, ValueMemory],
    providers: Providers,
    config: PipelineConfig | None = None,
) -> PipelineResponse:
    return Pipeline(catalog, selection_index, value_memories, providers, config).answer(question)
