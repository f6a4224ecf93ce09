"""INI configuration for the command line and the HTTP service.

Precedence, strongest first: command-line flags, the config file,
``RELMEM_*`` environment variables, built-in defaults.  The environment only
seeds defaults; it never overrides the file.

Example::

    [store]
    dir = .relmem

    [pipeline]
    k_databases = 5
    k_values = 10

    [providers]
    mock_script = demos/mock_script.jsonl
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .embedding import EmbeddingProvider, HashingEmbedder, HttpEmbeddingProvider
from .errors import ConfigError
from .llm.providers import CompletionProvider, HttpCompletionProvider, ScriptedMock, TracingProvider
from .pipeline import PipelineConfig

ENV_PREFIX = "RELMEM_"

# key -> (section, type)
KEYS: dict[str, tuple[str, type]] = {
    "store_dir": ("store", str),
    "k_databases": ("pipeline", int),
    "k_values": ("pipeline", int),
    "max_correction_attempts": ("pipeline", int),
    "result_truncation_rows": ("pipeline", int),
    "execution_timeout_secs": ("pipeline", float),
    "use_context_switch": ("pipeline", bool),
    "use_value_memory": ("pipeline", bool),
    "llm_url": ("providers", str),
    "text_to_sql_url": ("providers", str),
    "embedding_url": ("providers", str),
    "embedding_dim": ("providers", int),
    "mock_script": ("providers", str),
    "provider_trace": ("providers", str),
    "trace_path": ("trace", str),
    "trace_timing": ("trace", bool),
}

# file keys use the bare name inside their section
_FILE_NAMES = {"store_dir": "dir", "trace_path": "path", "trace_timing": "timing"}


@dataclass(frozen=True)
class CliConfig:
    store_dir: str = ".relmem"
    k_databases: int = 5
    k_values: int = 10
    max_correction_attempts: int = 3
    result_truncation_rows: int = 10
    execution_timeout_secs: float = 5.0
    use_context_switch: bool = True
    use_value_memory: bool = True
    llm_url: str | None = None
    text_to_sql_url: str | None = None
    embedding_url: str | None = None
    embedding_dim: int = 256
    mock_script: str | None = None
    provider_trace: str | None = None
    trace_path: str | None = None
    trace_timing: bool = True
    config_file: str | None = None

    @property
    def store(self) -> Path:
        return Path(self.store_dir)

    def pipeline_config(self) -> PipelineConfig:
        names = {f.name for f in fields(PipelineConfig)}
        try:
            return PipelineConfig(**{k: getattr(self, k) for k in names})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def embedder(self) -> EmbeddingProvider:
        if self.embedding_url:
            return HttpEmbeddingProvider(self.embedding_url, self.embedding_dim)
        return HashingEmbedder(self.embedding_dim)

    def completion_provider(self, url: str | None = None) -> CompletionProvider:
        if self.mock_script:
            try:
                provider: CompletionProvider = ScriptedMock.from_jsonl(self.mock_script)
            except OSError as exc:
                raise ConfigError(f"cannot read mock script {self.mock_script}: {exc.strerror}") from exc
        elif url or self.llm_url:
            provider = HttpCompletionProvider(url or self.llm_url)
        else:
            raise ConfigError("no completion provider configured (set providers.llm_url or providers.mock_script)")
        if self.provider_trace:
            provider = TracingProvider(provider, self.provider_trace)
        return provider


def _coerce(key: str, raw: Any, source: str) -> Any:
    kind = KEYS[key][1]
    if not isinstance(raw, str):
        return raw
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip()) if kind is not str else raw
    except ValueError:
        raise ConfigError(f"{source}: {key} expects {kind.__name__}, got {raw!r}") from None


def _from_env(env: Mapping[str, str]) -> dict[str, Any]:
    out = {}
    for key in KEYS:
        name = ENV_PREFIX + key.upper()
        if name in env:
            out[key] = _coerce(key, env[name], f"${name}")
    return out


def _from_file(path: Path) -> dict[str, Any]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc.message}") from exc

    known = {(section, _FILE_NAMES.get(key, key)): key for key, (section, _) in KEYS.items()}
    out = {}
    for section in parser.sections():
        for name, raw in parser.items(section):
            key = known.get((section, name))
            if key is None:
                raise ConfigError(f"{path}: unknown key [{section}] {name}")
            out[key] = _coerce(key, raw, str(path))
    # relative paths in the file are relative to the file
    for key in ("store_dir", "mock_script", "provider_trace", "trace_path"):
        if key in out and out[key] and not os.path.isabs(out[key]):
            out[key] = str((path.parent / out[key]).resolve())
    return out


def load_config(
    path: str | os.PathLike | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> CliConfig:
    """Merge defaults, environment, file and flag overrides (``None`` means unset)."""
    env = os.environ if env is None else env
    values: dict[str, Any] = _from_env(env)
    if path is None and env.get(ENV_PREFIX + "CONFIG"):
        path = env[ENV_PREFIX + "CONFIG"]
    if path is not None:
        values.update(_from_file(Path(path)))
        values["config_file"] = str(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in KEYS:
                raise ConfigError(f"unknown setting {key}")
            values[key] = _coerce(key, value, "flag")
    config = CliConfig(**values)
    config.pipeline_config()  # range checks
    if config.embedding_dim < 1:
        raise ConfigError("embedding_dim must be positive")
    return config


def replace(config: CliConfig, **changes) -> CliConfig:
    return dataclasses.replace(config, **changes)
