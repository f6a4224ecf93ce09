"""Scripted end-to-end scenarios shared by the pipeline and acceptance tests."""

from __future__ import annotations

from pathlib import Path

from relmem.demo import demo_catalog
from relmem.embedding import HashingEmbedder
from relmem.evalkit import EvalQuestion
from relmem.llm.providers import ScriptedMock
from relmem.pipeline import Pipeline, PipelineConfig, Providers

CONTEXT = "Does context of the question contain answer"
PLAN = "What is the minimum number of SQL queries"
TEXT_TO_SQL = "Return one SQL query only."
VALUES = "Candidate Values:"
ERROR = "Correct it based on the error message."
RETURN_TYPE = "Is the goal and SQL equivalent?"
OUTPUT = "# SQL Results"
JUDGE = "Are the following two answers"

LA_QUESTION = "Show me the restaurants located in Los Angeles"
LA_SQL = "SELECT name FROM restaurant WHERE location = 'Los Angeles'"
LA_GOLD = "SELECT name FROM restaurant WHERE location = 'LA'"

DOUBLE_QUESTION = (
    "Which question has a larger number as its answer. "
    "Q1: How many singers are there?; Q2: How many employees are there?"
)
HOSPITAL_QUESTION = "How many hospitals are located in city Seattle"


def fixed_clock():
    return 0.0


def pipeline_for(directory, ids, mock, config=None, **kwargs) -> Pipeline:
    catalog = demo_catalog(Path(directory) / "dbs", ids)
    kwargs.setdefault("clock", fixed_clock)
    return Pipeline.build(catalog, Providers(llm=mock, embedder=HashingEmbedder()), config, **kwargs)


def la_mock() -> ScriptedMock:
    return (
        ScriptedMock()
        .add(CONTEXT, "(NO) The context does not list any restaurants.")
        .add(
            PLAN,
            "Goal: find the names of restaurants located in Los Angeles\n"
            f"*Begin SQL* {LA_SQL} *End SQL*\nDatabase restaurant",
        )
        .add(TEXT_TO_SQL, LA_SQL)
        .add(VALUES, f"Corrected SQL: {LA_GOLD}\nReasons: the location column stores 'LA'.")
        .add(RETURN_TYPE, "Yes")
        .add(OUTPUT, "I could not find any restaurants in Los Angeles.")
    )


def la_pipeline(directory, use_value_memory=True, **kwargs) -> Pipeline:
    config = PipelineConfig(use_value_memory=use_value_memory)
    return pipeline_for(directory, None, la_mock(), config, **kwargs)


def double_mock() -> ScriptedMock:
    return (
        ScriptedMock()
        .add(CONTEXT, "(NO) The counts are not given in the question.")
        .add(
            PLAN,
            "Goal: count the number of singers\n"
            "*Begin SQL* SELECT count(*) FROM singer *End SQL*\n"
            "Database singer\n"
            "Goal: count the number of employees\n"
            "*Begin SQL* SELECT count(*) FROM employee *End SQL*\n"
            "Database employee_hire_evaluation",
        )
        .add(r"Goal: count the number of singers\n.*" + TEXT_TO_SQL.replace(".", r"\."), "SELECT count(*) FROM singer", regex=True)
        .add(r"Goal: count the number of employees\n.*" + TEXT_TO_SQL.replace(".", r"\."), "SELECT count(*) FROM employee", regex=True)
        .add(RETURN_TYPE, "No. The SQL counts only one side of the comparison.")
        .add(OUTPUT, "There are 3 singers and 5 employees, so Q2 has the larger number.")
        .add(JUDGE, "yes")
    )


def double_pipeline(directory, **kwargs) -> Pipeline:
    return pipeline_for(directory, None, double_mock(), **kwargs)


def hospital_mock() -> ScriptedMock:
    return (
        ScriptedMock()
        .add(CONTEXT, "(NO) The context is empty")
        .add(
            PLAN,
            "Goal: count hospitals whose city is Seattle\n"
            "*Begin SQL* SELECT count(*) FROM hospital WHERE city = 'Seattle' *End SQL*\n"
            "Database hospital",
        )
        .add(TEXT_TO_SQL, "SELECT count(*) FROM hospital WHERE city = 'Seattle'")
        .add(VALUES, "Corrected SQL: SELECT count(*) FROM hospital WHERE city = 'Seattle'")
        .add(RETURN_TYPE, "Yes")
    )


def hospital_pipeline(directory, **kwargs) -> Pipeline:
    return pipeline_for(directory, ["city", "hospital"], hospital_mock(), **kwargs)


def correction_mock(repair_on: int | None) -> ScriptedMock:
    """Execution fails until the ``repair_on``-th error correction (never when None)."""
    bad = "SELECT nam FROM singer"
    mock = (
        ScriptedMock()
        .add(CONTEXT, "(NO)")
        .add(PLAN, f"Goal: list singer names\n*Begin SQL* {bad} *End SQL*\nDatabase singer")
        .add(TEXT_TO_SQL, bad)
    )
    if repair_on is None:
        mock.add(ERROR, f"```sql\n{bad}\n```")
    else:
        for _ in range(repair_on - 1):
            mock.add(ERROR, f"```sql\n{bad}\n```", once=True)
        mock.add(ERROR, "```sql\nSELECT name FROM singer\n```", once=True)
    return mock.add(RETURN_TYPE, "Yes").add(OUTPUT, "I could not retrieve the singer names.")


def correction_pipeline(directory, repair_on, **kwargs) -> Pipeline:
    return pipeline_for(directory, ["singer"], correction_mock(repair_on), **kwargs)


# A four-question dataset over city + hospital + singer + employee_hire_evaluation.
EVAL_IDS = ["city", "hospital", "singer", "employee_hire_evaluation"]


def eval_dataset() -> list[EvalQuestion]:
    return [
        EvalQuestion("z1", "zero_db", "The color of grass is {?}.", gold_answer="green"),
        EvalQuestion("s1", "single_db", HOSPITAL_QUESTION, ["hospital"], ["SELECT count(*) FROM hospital WHERE city = 'Seattle'"]),
        EvalQuestion(
            "d1",
            "double_db",
            DOUBLE_QUESTION,
            ["singer", "employee_hire_evaluation"],
            ["SELECT count(*) FROM singer", "SELECT count(*) FROM employee"],
            gold_answer="Q2",
        ),
        EvalQuestion("u1", "unanswerable", "What will the weather be in Seattle next year?"),
    ]


def eval_mock() -> ScriptedMock:
    double = double_mock().rules
    return (
        ScriptedMock()
        .add(CONTEXT, "(NO) The context is empty")
        .add("Input Question: The color of grass", "No database is needed for this question.")
        .add("Input Question: How many hospitals", hospital_mock().rules[1].response)
        .add("Input Question: Which question", double[1].response)
        .add("Goal: count hospitals", "SELECT count(*) FROM hospital WHERE city = 'Seattle'")
        .add(double[2].match, double[2].response, regex=True)
        .add(double[3].match, double[3].response, regex=True)
        .add(VALUES, "Corrected SQL: SELECT count(*) FROM hospital WHERE city = 'Seattle'")
        .add(r"Question: How many hospitals[^\n]*\nSQL:", "Yes", regex=True)
        .add(RETURN_TYPE, "No")
        .add(r"(?s)Question: The color of grass.*Let's think", "Grass is green.", regex=True)
        .add(OUTPUT, double[5].response)
        .add(JUDGE, "yes")
    )


def eval_pipeline(directory, **kwargs) -> Pipeline:
    return pipeline_for(directory, EVAL_IDS, eval_mock(), **kwargs)

