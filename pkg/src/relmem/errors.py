"""Exception types shared across the engine.

Every error carries a short machine-readable ``code`` so the CLI and the HTTP
service can report it as ``error: <code>: <message>``.
"""

from __future__ import annotations


class RelmemError(Exception):
    code = "relmem_error"


# catalog
class UnreadableDatabase(RelmemError):
    code = "unreadable_database"


class DuplicateId(RelmemError):
    code = "duplicate_id"


class UnknownDatabase(RelmemError):
    code = "unknown_database"


class CorruptManifest(RelmemError):
    code = "corrupt_manifest"


# embedding / vector index
class EmptyInput(RelmemError):
    code = "empty_input"


class DimensionMismatch(RelmemError):
    code = "dimension_mismatch"


class CorruptIndex(RelmemError):
    code = "corrupt_index"


class ProviderUnavailable(RelmemError):
    """A remote provider could not be reached or returned garbage."""

    code = "provider_unavailable"


# selection memory
class InsufficientCatalog(RelmemError):
    code = "insufficient_catalog"


# value memory
class UnknownColumn(RelmemError):
    code = "unknown_column"


# sql tools
class SqlParseError(RelmemError):
    code = "parse_error"


class AmbiguousColumn(RelmemError):
    code = "ambiguous_column"


class ExecutionError(RelmemError):
    """Raised when the database engine rejects or aborts a query.

    ``message`` is the engine's own error text; ``sql`` the offending query.
    """

    code = "execution_error"

    def __init__(self, message: str, sql: str):
        super().__init__(message)
        self.message = message or "unknown execution error"
        self.sql = sql


class WriteAttempt(ExecutionError):
    code = "write_attempt"


class SqlTimeout(ExecutionError):
    code = "timeout"


# llm
class MalformedResponse(RelmemError):
    code = "malformed_response"


class NoSqlInResponse(MalformedResponse):
    code = "no_sql_in_response"


class PromptTooLarge(RelmemError):
    code = "prompt_too_large"


class UnmatchedPrompt(ProviderUnavailable):
    """The scripted mock has no rule for a prompt.

    Subclasses ProviderUnavailable so an incomplete script aborts a pipeline
    run loudly instead of being absorbed by a fail-safe.
    """

    code = "unmatched_prompt"


# evaluation
class NonScalarGold(RelmemError):
    code = "non_scalar_gold"


class CoverageMismatch(RelmemError):
    code = "coverage_mismatch"


class InvalidQuestion(RelmemError):
    code = "invalid_question"


class ConfigError(RelmemError):
    code = "config_error"
