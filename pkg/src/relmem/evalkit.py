"""Evaluation: question model, double-database composites, accuracy metrics, reports.

SQL accuracy asks whether the retrieval stage produced the gold results;
answer accuracy asks whether the final response is right.  Both are scored
per question type; unanswerable questions are counted but never scored.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .catalog import Catalog
from .errors import CoverageMismatch, ExecutionError, InvalidQuestion, NonScalarGold
from .llm.providers import CompletionProvider
from .llm.tasks import judge_equivalence
from .pipeline import Pipeline, PipelineFailure, PipelineResponse
from .sqltools import SqlResult, execute_sql, results_equal

QTYPES = ("zero_db", "single_db", "double_db", "unanswerable")
DOUBLE_TEMPLATE = "Which question has a larger number as its answer. Q1: {q1}; Q2: {q2}"


@dataclass
class EvalQuestion:
    id: str
    qtype: str
    question: str
    gold_db_ids: list[str] = field(default_factory=list)
    gold_sqls: list[str] = field(default_factory=list)
    gold_answer: str | None = None
    perturbation: str | None = None

    def __post_init__(self):
        if self.qtype not in QTYPES:
            raise InvalidQuestion(f"{self.id}: unknown qtype {self.qtype!r}")
        if len(self.gold_db_ids) != len(self.gold_sqls):
            raise InvalidQuestion(f"{self.id}: gold_db_ids and gold_sqls differ in length")
        expected = {"zero_db": 0, "single_db": 1, "double_db": 2, "unanswerable": 0}[self.qtype]
        if len(self.gold_sqls) != expected:
            raise InvalidQuestion(f"{self.id}: {self.qtype} needs {expected} gold SQL(s), got {len(self.gold_sqls)}")
        if self.qtype == "zero_db" and not self.gold_answer:
            raise InvalidQuestion(f"{self.id}: zero_db questions need a gold_answer")
        if self.qtype == "double_db" and not self.gold_answer:
            raise InvalidQuestion(f"{self.id}: double_db questions need a gold_answer")
        if self.qtype == "unanswerable" and self.gold_answer:
            raise InvalidQuestion(f"{self.id}: unanswerable questions carry no gold answer")

    def to_json(self) -> dict:
        d = asdict(self)
        if d["perturbation"] is None:
            del d["perturbation"]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "EvalQuestion":
        try:
            return cls(
                id=str(d["id"]),
                qtype=d["qtype"],
                question=d["question"],
                gold_db_ids=list(d.get("gold_db_ids") or []),
                gold_sqls=list(d.get("gold_sqls") or []),
                gold_answer=d.get("gold_answer"),
                perturbation=d.get("perturbation"),
            )
        except KeyError as exc:
            raise InvalidQuestion(f"missing field {exc}") from exc


def load_dataset(path: str | os.PathLike) -> list[EvalQuestion]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(EvalQuestion.from_json(json.loads(line)))
        except ValueError as exc:
            raise InvalidQuestion(f"{path}:{lineno}: {exc}") from exc
    return out


def dataset_jsonl(questions: Iterable[EvalQuestion]) -> str:
    return "".join(json.dumps(q.to_json(), ensure_ascii=False) + "\n" for q in questions)


def _numeric_scalar(result: SqlResult, qid: str):
    value = result.scalar()
    if value is None or isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NonScalarGold(f"{qid}: gold SQL does not return a single number")
    return value


def compose_double_db(q1: EvalQuestion, q2: EvalQuestion, catalog: Catalog) -> EvalQuestion:
    """Join two numeric single-database questions into a comparison question.

    The gold answer is ``"Q1"`` or ``"Q2"``, whichever gold result is
    larger; ties go to ``"Q1"``.
    """
    values = []
    for q in (q1, q2):
        if q.qtype != "single_db":
            raise InvalidQuestion(f"{q.id}: composites are built from single_db questions")
        result = execute_sql(catalog.get(q.gold_db_ids[0]), q.gold_sqls[0])
        values.append(_numeric_scalar(result, q.id))
    return EvalQuestion(
        id=f"{q1.id}+{q2.id}",
        qtype="double_db",
        question=DOUBLE_TEMPLATE.format(q1=q1.question, q2=q2.question),
        gold_db_ids=[q1.gold_db_ids[0], q2.gold_db_ids[0]],
        gold_sqls=[q1.gold_sqls[0], q2.gold_sqls[0]],
        gold_answer="Q2" if values[1] > values[0] else "Q1",
    )


def sample_double_db(
    singles: Sequence[EvalQuestion], catalog: Catalog, n: int, seed: int = 0
) -> list[EvalQuestion]:
    """Draw ``n`` composites from pairs of numeric questions on different databases."""
    numeric = []
    for q in singles:
        if q.qtype != "single_db":
            continue
        try:
            _numeric_scalar(execute_sql(catalog.get(q.gold_db_ids[0]), q.gold_sqls[0]), q.id)
        except (NonScalarGold, ExecutionError):
            continue
        numeric.append(q)
    pairs = [(a, b) for a in numeric for b in numeric if a.gold_db_ids[0] != b.gold_db_ids[0]]
    rng = random.Random(seed)
    chosen = rng.sample(pairs, min(n, len(pairs)))
    return [compose_double_db(a, b, catalog) for a, b in chosen]


# ---------------------------------------------------------------------------
# metrics


def _injective_match(golds: Sequence[SqlResult], retrieved: Sequence[SqlResult]) -> bool:
    """Can every distinct gold be matched by its own retrieved result?

    Golds equal to each other form one class and may share a match.
    """
    classes: list[SqlResult] = []
    for g in golds:
        if not any(results_equal(g, c) for c in classes):
            classes.append(g)
    adj = [[j for j, r in enumerate(retrieved) if results_equal(g, r)] for g in classes]
    owner: dict[int, int] = {}

    def augment(i: int, seen: set[int]) -> bool:
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in owner or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    return all(augment(i, set()) for i in range(len(classes)))


def sql_accuracy(q: EvalQuestion, retrieved: Sequence[SqlResult], golds: Sequence[SqlResult]) -> int:
    if q.qtype == "single_db":
        return int(any(results_equal(r, golds[0]) for r in retrieved))
    if q.qtype == "double_db":
        return int(_injective_match(golds, retrieved))
    raise ValueError(f"SQL accuracy is undefined for {q.qtype} questions")


def response_text(response: PipelineResponse) -> str:
    """Text form of a response; SQL results are rendered as JSON."""
    if response.kind == "text":
        return response.answer_text or ""
    return json.dumps(response.answer_result.to_json()["rows"], ensure_ascii=False)


def answer_accuracy(
    q: EvalQuestion, response: PipelineResponse, golds: Sequence[SqlResult], judge: CompletionProvider | None
) -> int:
    if q.qtype == "zero_db":
        text = response_text(response)
        return int(bool(text.strip()) and judge_equivalence(judge, q.gold_answer, text))
    if q.qtype == "single_db":
        return int(response.kind == "sql_result" and results_equal(response.answer_result, golds[0]))
    if q.qtype == "double_db":
        if not sql_accuracy(q, response.retrieved_results, golds):
            return 0
        text = response_text(response)
        return int(bool(text.strip()) and judge_equivalence(judge, q.gold_answer, text))
    raise ValueError(f"answer accuracy is undefined for {q.qtype} questions")


def selection_metrics(
    decisions: Iterable[tuple[str, str, bool]], gold: Iterable[tuple[str, str, bool]]
) -> tuple[float, float, float]:
    """Precision, recall and F1 of per-(question, database) retrieval decisions."""
    d = {(qid, db): bool(sel) for qid, db, sel in decisions}
    g = {(qid, db): bool(rel) for qid, db, rel in gold}
    if d.keys() != g.keys():
        missing = sorted(set(d) ^ set(g))[:3]
        raise CoverageMismatch(f"decisions and gold cover different pairs, e.g. {missing}")
    tp = sum(1 for k in d if d[k] and g[k])
    fp = sum(1 for k in d if d[k] and not g[k])
    fn = sum(1 for k in d if not d[k] and g[k])
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# ---------------------------------------------------------------------------
# report


@dataclass
class EvalReport:
    counts: dict[str, int]
    accuracy: dict[str, dict[str, float]]
    selection: dict[str, dict[str, float]]
    questions: list[dict]
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "counts": self.counts,
            "accuracy": self.accuracy,
            "selection": self.selection,
            "questions": self.questions,
            "notes": self.notes,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def table(self) -> str:
        """Fixed-width accuracy table: question type x {SQL Acc, Answer Acc}."""

        def cell(qtype: str, metric: str) -> str:
            v = self.accuracy.get(qtype, {}).get(metric)
            return "-" if v is None else f"{v:.2f}"

        header = ["", "Zero DB", "Single DB", "", "Double DB", ""]
        sub = ["", "Answer Acc", "SQL Acc", "Answer Acc", "SQL Acc", "Answer Acc"]
        row = [
            "ours",
            cell("zero_db", "answer_acc"),
            cell("single_db", "sql_acc"),
            cell("single_db", "answer_acc"),
            cell("double_db", "sql_acc"),
            cell("double_db", "answer_acc"),
        ]
        widths = [max(len(r[i]) for r in (header, sub, row)) for i in range(len(row))]
        lines = ["  ".join(r[i].ljust(widths[i]) for i in range(len(r))).rstrip() for r in (header, sub, row)]
        sel = self.selection
        for name in ("top_k", "refined"):
            if name in sel:
                s = sel[name]
                lines.append(f"selection[{name}]: precision={s['precision']:.2f} recall={s['recall']:.2f} f1={s['f1']:.2f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | os.PathLike) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.dumps(), encoding="utf-8")
        (out / "report.txt").write_text(self.table(), encoding="utf-8")


def _mean(xs: list[int]) -> float:
    return sum(xs) / len(xs)


def run_eval(
    dataset: Sequence[EvalQuestion],
    pipeline: Pipeline,
    judge: CompletionProvider | None,
    out_dir: str | os.PathLike | None = None,
    parallelism: int = 1,
) -> EvalReport:
    catalog = pipeline.catalog
    golds: dict[str, list[SqlResult]] = {}
    for q in dataset:
        golds[q.id] = [execute_sql(catalog.get(db), sql) for db, sql in zip(q.gold_db_ids, q.gold_sqls)]

    scored = [q for q in dataset if q.qtype != "unanswerable"]
    responses = pipeline.answer_batch([q.question for q in scored], parallelism=parallelism)

    counts = {t: 0 for t in QTYPES}
    for q in dataset:
        counts[q.qtype] += 1
    counts["total"] = len(dataset)

    per_type: dict[str, dict[str, list[int]]] = {}
    verdicts = []
    decisions_refined, decisions_topk, relevance = [], [], []
    notes = []
    for q, resp in zip(scored, responses):
        verdict: dict = {"id": q.id, "qtype": q.qtype}
        bucket = per_type.setdefault(q.qtype, {"sql_acc": [], "answer_acc": []})
        if isinstance(resp, PipelineFailure):
            verdict["failure"] = str(resp)
            sql_acc, ans_acc = 0, 0
            targeted, candidates = set(), set()
        else:
            verdict["kind"] = resp.kind
            sql_acc = sql_accuracy(q, resp.retrieved_results, golds[q.id]) if q.qtype != "zero_db" else None
            ans_acc = answer_accuracy(q, resp, golds[q.id], judge)
            targeted = set(resp.targeted_db_ids)
            candidates = {c.db_id for c in resp.candidates}
            if q.qtype == "double_db" and resp.kind == "sql_result":
                verdict["note"] = "double_db answered with a SQL result; judged on its JSON rows"
        if q.qtype != "zero_db":
            bucket["sql_acc"].append(sql_acc)
            verdict["sql_acc"] = sql_acc
        bucket["answer_acc"].append(ans_acc)
        verdict["answer_acc"] = ans_acc
        verdict["targeted"] = sorted(targeted)
        verdicts.append(verdict)
        for db in catalog.ids:
            relevance.append((q.id, db, db in q.gold_db_ids))
            decisions_refined.append((q.id, db, db in targeted))
            decisions_topk.append((q.id, db, db in candidates))

    accuracy = {}
    for qtype in ("zero_db", "single_db", "double_db"):
        if qtype not in per_type:
            continue
        b = per_type[qtype]
        accuracy[qtype] = {"answer_acc": _mean(b["answer_acc"])}
        if qtype != "zero_db":
            accuracy[qtype]["sql_acc"] = _mean(b["sql_acc"])

    selection = {}
    if scored:
        for name, decisions in (("top_k", decisions_topk), ("refined", decisions_refined)):
            p, r, f = selection_metrics(decisions, relevance)
            selection[name] = {"precision": p, "recall": r, "f1": f}
    if counts["unanswerable"]:
        notes.append(f"{counts['unanswerable']} unanswerable question(s) excluded from accuracy")
    if any(v.get("note") for v in verdicts):
        notes.append("some double_db questions returned SQL results; scored via the judge on stringified rows")

    report = EvalReport(counts, accuracy, selection, verdicts, notes)
    if out_dir is not None:
        report.write(out_dir)
    return report
