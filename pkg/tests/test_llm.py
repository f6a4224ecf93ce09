import json
import threading

import httpx
import pytest

from relmem.catalog import serialize_schema
from relmem.errors import (
    ConfigError,
    ExecutionError,
    NoSqlInResponse,
    PromptTooLarge,
    ProviderUnavailable,
    UnmatchedPrompt,
)
from relmem.llm import (
    ContextDecision,
    HttpCompletionProvider,
    ScriptedMock,
    TracingProvider,
    complete,
    correct_sql_with_error,
    correct_sql_with_values,
    decide_context_switch,
    generate_output,
    generate_plan,
    is_goal_sql_equivalent,
    judge_equivalence,
    text_to_sql,
)
from relmem.sqltools import SqlResult, execute_sql


def test_context_switch_examples():
    mock = (
        ScriptedMock()
        .add(r"Question: [^\n]*universities in SF[^\n]*\Z", "(YES) The number of universities in SF is explicitly given at position 30.", regex=True)
        .add(r"Question: [^\n]*color of grass[^\n]*\Z", "(NO) The context is empty", regex=True)
    )
    q1 = "LA has 2 universities, SF has 3 universities. The number of universities in SF is {?}"
    assert decide_context_switch(mock, q1) is ContextDecision.ANSWERABLE
    assert decide_context_switch(mock, "The color of grass is {?}") is ContextDecision.NEEDS_RETRIEVAL
    assert decide_context_switch(ScriptedMock().add("", "maybe"), "x") is ContextDecision.NEEDS_RETRIEVAL


def test_generate_plan_prunes_city(demo_catalog):
    schemas = [serialize_schema(demo_catalog.get(i)) for i in ("city", "hospital")]
    mock = ScriptedMock().add(
        "minimum number of SQL",
        "Goal: count hospitals in Seattle\n*Begin SQL* SELECT count(*) FROM hospital WHERE city = 'Seattle' *End SQL*\nDatabase hospital",
    )
    plan = generate_plan(mock, "How many hospitals are located in city Seattle", schemas)
    assert [t.db_id for t in plan.targets] == ["hospital"]
    with pytest.raises(ValueError):
        generate_plan(mock, "q", [])


def test_value_correction_examples():
    sql = "SELECT name FROM restaurant WHERE location = 'Los Angeles'"
    cands = [("restaurant", "location", ["LA", "SF"])]
    fixed = ScriptedMock().add("Candidate Values", "Corrected SQL: SELECT name FROM restaurant WHERE location = 'LA'")
    assert "'LA'" in correct_sql_with_values(fixed, sql, cands)
    echo = ScriptedMock().add("Candidate Values", f"Corrected SQL: {sql}")
    assert correct_sql_with_values(echo, sql, cands) == sql
    prose = ScriptedMock().add("Candidate Values", "Everything looks fine to me.")
    assert correct_sql_with_values(prose, sql, cands) == sql
    silent = ScriptedMock()
    assert correct_sql_with_values(silent, sql, []) == sql and silent.calls == []


def test_error_correction_examples(demo_catalog):
    entry = demo_catalog.get("restaurant")
    schema = serialize_schema(entry).text
    err = ExecutionError("no such column: nam", "SELECT nam FROM restaurant")
    mock = ScriptedMock().add("no such column: nam", "```sql\nSELECT name FROM restaurant\n```")
    fixed = correct_sql_with_error(mock, schema, "list restaurant names", "SELECT nam FROM restaurant", err)
    assert fixed == "SELECT name FROM restaurant"
    assert len(execute_sql(entry, fixed).rows) == 8
    with pytest.raises(NoSqlInResponse):
        correct_sql_with_error(ScriptedMock().add("", "Sorry, no idea."), schema, "q", "SELECT nam FROM restaurant", err)
    echo = ScriptedMock().add("", "SELECT name FROM restaurant")
    assert correct_sql_with_error(echo, schema, "q", "SELECT name FROM restaurant", "spurious") == "SELECT name FROM restaurant"


def test_return_type_examples():
    sql = "SELECT count(*) FROM singer"
    assert is_goal_sql_equivalent(ScriptedMock().add("", "Yes"), "count of singers", sql) is True
    assert is_goal_sql_equivalent(ScriptedMock().add("", "No, the SQL filters by country."), "count of singers", sql) is False
    assert is_goal_sql_equivalent(ScriptedMock().add("", "It depends."), "count of singers", sql) is False


def test_output_examples():
    mock = ScriptedMock().add('"rows": [[5]]', "employees").add("# SQL Results", "A lemon is yellow.")
    evidence = [
        ("SELECT count(*) FROM singer", SqlResult.of(["count(*)"], [[3]])),
        ("SELECT count(*) FROM employee", SqlResult.of(["count(*)"], [[5]])),
    ]
    assert generate_output(mock, "Are there more singers or employees?", evidence) == "employees"
    assert generate_output(mock, "What color is a lemon?", []) == "A lemon is yellow."
    assert "ignore the SQL and directly answer" in mock.calls[-1][0]


def test_judge_examples():
    untouched = ScriptedMock()
    assert judge_equivalence(untouched, "Paris", "paris ") and untouched.calls == []
    assert judge_equivalence(ScriptedMock().add("", "yes"), "5", "five")
    assert not judge_equivalence(ScriptedMock().add("", "no"), "5", "7")
    assert not judge_equivalence(None, "5", "five")
    with pytest.raises(ValueError):
        judge_equivalence(None, "", "x")


def test_text_to_sql_examples(demo_catalog):
    entry = demo_catalog.get("singer")
    schema = serialize_schema(entry).text
    mock = ScriptedMock().add("number of singers", "SELECT count(*) FROM singer").add("", "```sql\nSELECT * FROM concerts\n```")
    sql = text_to_sql(mock, "number of singers", schema)
    assert sql == "SELECT count(*) FROM singer" and execute_sql(entry, sql).rows == ((3,),)
    passthrough = text_to_sql(mock, "number of concerts", schema, seed_sql="SELECT 1")
    assert passthrough == "SELECT * FROM concerts"
    assert "Example SQL: SELECT 1" in mock.calls[-1][0]
    with pytest.raises(ExecutionError):
        execute_sql(entry, passthrough)


def test_scripted_mock_mechanics(tmp_path):
    mock = ScriptedMock().add("once", "first", once=True).add(r"t\w+o", "regex", regex=True)
    assert mock.complete("once upon") == "first"
    with pytest.raises(UnmatchedPrompt):
        mock.complete("once more")
    assert mock.complete("two") == "regex"
    assert isinstance(UnmatchedPrompt("x"), ProviderUnavailable)

    path = tmp_path / "m.jsonl"
    path.write_text(mock.to_jsonl())
    again = ScriptedMock.from_jsonl(path)
    assert [(r.match, r.response, r.regex, r.once) for r in again.rules] == [
        (r.match, r.response, r.regex, r.once) for r in mock.rules
    ]
    path.write_text('{"response": "x"}\n')
    with pytest.raises(ConfigError):
        ScriptedMock.from_jsonl(path)


def test_scripted_mock_is_thread_safe():
    mock = ScriptedMock().add("", "ok")
    threads = [threading.Thread(target=lambda: [mock.complete("p") for _ in range(200)]) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(mock.calls) == 1600


def test_prompt_too_large():
    mock = ScriptedMock(max_prompt_chars=10).add("", "x")
    with pytest.raises(PromptTooLarge):
        complete(mock, "a" * 11)
    assert mock.calls == []


def test_empty_completion_is_unavailable():
    with pytest.raises(ProviderUnavailable):
        complete(ScriptedMock().add("", ""), "hello")


def test_tracing_provider(tmp_path):
    path = tmp_path / "t.jsonl"
    traced = TracingProvider(ScriptedMock().add("", "pong"), path)
    assert complete(traced, "ping") == "pong"
    assert json.loads(path.read_text()) == {"type": "completion", "provider": "scripted-mock", "prompt": "ping", "response": "pong"}


def _http(handler):
    provider = HttpCompletionProvider("http://llm.test")
    provider._client = httpx.Client(transport=httpx.MockTransport(handler))
    return provider


def test_http_completion():
    ok = _http(lambda req: httpx.Response(200, json={"text": json.loads(req.content)["prompt"].upper()}))
    assert complete(ok, "hi") == "HI"
    with pytest.raises(ProviderUnavailable):
        complete(_http(lambda req: httpx.Response(500)), "hi")
    with pytest.raises(ProviderUnavailable):
        complete(_http(lambda req: httpx.Response(200, json={"nope": 1})), "hi")
    with pytest.raises(ProviderUnavailable):
        complete(HttpCompletionProvider("http://127.0.0.1:9", timeout=0.5), "hi")
