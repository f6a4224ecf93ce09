from .prompts import PromptKind, RetrievalPlan, RetrievalTarget, extract_sql, render, template
from .providers import (
    CompletionProvider,
    HttpCompletionProvider,
    Rule,
    ScriptedMock,
    TracingProvider,
    complete,
)
from .tasks import (
    ContextDecision,
    correct_sql_with_error,
    correct_sql_with_values,
    decide_context_switch,
    generate_output,
    generate_plan,
    is_goal_sql_equivalent,
    judge_equivalence,
    text_to_sql,
)

__all__ = [
    "CompletionProvider",
    "ContextDecision",
    "HttpCompletionProvider",
    "PromptKind",
    "RetrievalPlan",
    "RetrievalTarget",
    "Rule",
    "ScriptedMock",
    "TracingProvider",
    "complete",
    "correct_sql_with_error",
    "correct_sql_with_values",
    "decide_context_switch",
    "extract_sql",
    "generate_output",
    "generate_plan",
    "is_goal_sql_equivalent",
    "judge_equivalence",
    "render",
    "template",
    "text_to_sql",
]
