"""Using relmem as a library, with the scripted mock standing in for a model.

Run from the repository root:  python3 demos/library_usage.py
"""

import tempfile
from pathlib import Path

from relmem import HashingEmbedder, Pipeline, Providers, ScriptedMock
from relmem.demo import demo_catalog

HERE = Path(__file__).parent

with tempfile.TemporaryDirectory() as tmp:
    catalog = demo_catalog(tmp, ["restaurant", "singer", "employee_hire_evaluation", "city", "hospital"])
    providers = Providers(llm=ScriptedMock.from_jsonl(HERE / "mock_script.jsonl"), embedder=HashingEmbedder())
    pipeline = Pipeline.build(catalog, providers)

    response = pipeline.answer("How many hospitals are located in city Seattle")
    print(response.kind, response.answer_sql, response.answer_result.rows)

    # every stage leaves a record behind
    for stage in response.trace:
        print(f"  {stage.name:<20} {stage.outputs}")
