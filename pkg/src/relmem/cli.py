"""``relmem`` command line.

Exit codes: 0 success, 1 runtime error, 2 pipeline failure (``ask``),
64 usage error, 78 configuration error.  Errors are printed to standard
error as ``error: <code>: <message>``.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import evalkit, store
from .config import CliConfig, load_config
from .errors import ConfigError, RelmemError
from .pipeline import PipelineFailure, PipelineResponse, Providers
from .selection import compose_training_data, training_jsonl

EXIT_FAILURE = 1
EXIT_PIPELINE = 2
EXIT_USAGE = 64
EXIT_CONFIG = 78


def _fail(code: str, message: str, status: int):
    click.echo(f"error: {code}: {message}", err=True)
    sys.exit(status)


class RelmemGroup(click.Group):
    """Maps exceptions to the documented exit codes and error line."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as exc:
            _fail("usage", exc.format_message(), EXIT_USAGE)
        except click.Abort:
            _fail("aborted", "interrupted", EXIT_FAILURE)
        except click.ClickException as exc:
            _fail("usage", exc.format_message(), EXIT_USAGE)
        except ConfigError as exc:
            _fail(exc.code, str(exc), EXIT_CONFIG)
        except PipelineFailure as exc:
            _fail(getattr(exc.cause, "code", exc.code), str(exc.cause), EXIT_PIPELINE)
        except RelmemError as exc:
            _fail(exc.code, str(exc), EXIT_FAILURE)
        except FileNotFoundError as exc:
            _fail("not_found", f"{exc.filename}: {exc.strerror}", EXIT_FAILURE)
        sys.exit(rv if isinstance(rv, int) else 0)


class Context:
    def __init__(self, config_path: str | None, overrides: dict):
        self.config_path = config_path
        self.overrides = overrides
        self._config: CliConfig | None = None

    @property
    def config(self) -> CliConfig:
        if self._config is None:
            self._config = load_config(self.config_path, self.overrides)
        return self._config

    def providers(self) -> Providers:
        cfg = self.config
        llm = cfg.completion_provider()
        writer = cfg.completion_provider(cfg.text_to_sql_url) if cfg.text_to_sql_url and not cfg.mock_script else None
        return Providers(llm=llm, embedder=cfg.embedder(), text_to_sql=writer)

    def pipeline(self):
        cfg = self.config
        return store.load_pipeline(
            cfg.store,
            self.providers(),
            config=cfg.pipeline_config(),
            trace_path=cfg.trace_path,
            trace_timing=cfg.trace_timing,
        )


pass_ctx = click.make_pass_decorator(Context)


@click.group(cls=RelmemGroup, context_settings={"help_option_names": ["-h", "--help"], "terminal_width": 80})
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI config file (default: $RELMEM_CONFIG).")
@click.option("--store", "store_dir", help="Store directory holding the catalog and indexes.")
@click.option("--k-databases", type=int, help="Candidate databases returned by selection.")
@click.option("--k-values", type=int, help="Value synonyms looked up per condition.")
@click.option("--max-correction-attempts", type=int, help="Error-correction rounds before a target is excluded.")
@click.option("--result-truncation-rows", type=int, help="Rows of each result shown to the LLM.")
@click.option("--execution-timeout", "execution_timeout_secs", type=float, help="Per-query timeout in seconds.")
@click.option("--context-switch/--no-context-switch", "use_context_switch", default=None, help="Ask first whether retrieval is needed.")
@click.option("--value-memory/--no-value-memory", "use_value_memory", default=None, help="Ground SQL literals in stored values.")
@click.option("--llm-url", help="Completion endpoint base URL.")
@click.option("--text-to-sql-url", help="Separate completion endpoint for text-to-SQL.")
@click.option("--embedding-url", help="Embedding endpoint base URL (default: built-in hashing embedder).")
@click.option("--embedding-dim", type=int, help="Embedding dimension.")
@click.option("--mock-script", type=click.Path(dir_okay=False), help="JSON-lines scripted mock used instead of a completion endpoint.")
@click.option("--provider-trace", type=click.Path(dir_okay=False), help="Append every prompt and response to this file.")
@click.option("--trace-file", "trace_path", type=click.Path(dir_okay=False), help="Append pipeline stage records to this file.")
@click.option("--trace-timing/--no-trace-timing", default=None, help="Include stage durations in traces.")
@click.option("-v", "--verbose", is_flag=True, help="Log diagnostics to standard error.")
@click.version_option("0.1.0", prog_name="relmem")
@click.pass_context
def cli(ctx, config_path, verbose, **overrides):
    """Answer questions over a collection of SQLite databases."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = Context(config_path, overrides)


# ---------------------------------------------------------------------------
# catalog


@cli.group()
def catalog():
    """Manage the database manifest."""


@catalog.command("add")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--id", "db_id", required=True, help="Unique database id.")
@click.option("--name", help="Display name (default: the id).")
@pass_ctx
def catalog_add(obj: Context, path, db_id, name):
    """Register the SQLite file PATH."""
    root = obj.config.store
    cat = store.load_catalog(root, missing_ok=True)
    entry = cat.register_database(Path(path).resolve(), db_id, name)
    cat.save_manifest(store.StorePaths(root).catalog)
    click.echo(f"added {entry.id} ({len(entry.tables)} tables)")


@catalog.command("list")
@click.option("--json", "as_json", is_flag=True, help="Print one JSON object per database.")
@pass_ctx
def catalog_list(obj: Context, as_json):
    """List registered databases."""
    cat = store.load_catalog(obj.config.store, missing_ok=True)
    for entry in cat:
        if as_json:
            click.echo(json.dumps({"id": entry.id, "name": entry.name, "path": entry.location, "tables": [t.name for t in entry.tables]}))
        else:
            click.echo(f"{entry.id}\t{len(entry.tables)} tables\t{entry.location}")


# ---------------------------------------------------------------------------
# index


@cli.group()
def index():
    """Build the selection and value memories."""


@index.command("build")
@click.option("--schemas", is_flag=True, help="Build only the schema selection index.")
@click.option("--values", is_flag=True, help="Build only the value memories.")
@pass_ctx
def index_build(obj: Context, schemas, values):
    """Build stale indexes; both kinds when neither flag is given."""
    if not schemas and not values:
        schemas = values = True
    report = store.build_indexes(obj.config.store, obj.config.embedder(), schemas=schemas, values=values)
    for part, status in report.items():
        click.echo(f"{part}: {status}")


# ---------------------------------------------------------------------------
# ask / repl


def format_response(response: PipelineResponse) -> str:
    if response.kind == "text":
        return f"[text]\n{response.answer_text}\n"
    result = response.answer_result
    lines = [f"[sql_result] {response.answer_db_id}", f"sql: {response.answer_sql}", "\t".join(result.columns)]
    for row in result.rows:
        lines.append("\t".join("NULL" if v is None else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _emit(response: PipelineResponse, trace: bool, as_json: bool, timing: bool) -> None:
    if as_json:
        click.echo(json.dumps(response.to_json(trace=trace, timing=timing), ensure_ascii=False))
        return
    click.echo(format_response(response), nl=False)
    if trace:
        click.echo("[trace]")
        for stage in response.trace:
            click.echo(json.dumps(stage.to_json(timing), ensure_ascii=False))


@cli.command()
@click.argument("question")
@click.option("--trace", is_flag=True, help="Print the stage trace after the answer.")
@click.option("--json", "as_json", is_flag=True, help="Print the response as one JSON object.")
@pass_ctx
def ask(obj: Context, question, trace, as_json):
    """Answer QUESTION once."""
    if not question.strip():
        raise click.UsageError("question must be non-empty")
    pipeline = obj.pipeline()
    _emit(pipeline.answer(question), trace, as_json, obj.config.trace_timing)


@cli.command()
@click.option("--trace", is_flag=True, help="Print the stage trace after each answer.")
@pass_ctx
def repl(obj: Context, trace):
    """Answer one question per input line; each line is independent."""
    pipeline = obj.pipeline()
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            click.echo("relmem> ", nl=False)
        line = sys.stdin.readline()
        if not line:
            break
        question = line.strip()
        if not question:
            continue
        if question in ("exit", "quit"):
            break
        try:
            _emit(pipeline.answer(question), trace, False, obj.config.trace_timing)
        except PipelineFailure as exc:
            click.echo(f"error: {getattr(exc.cause, 'code', exc.code)}: {exc.cause}", err=True)


# ---------------------------------------------------------------------------
# datasets


def _write_out(text: str, out: str) -> None:
    if out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _read_qa(path: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            if "db_id" in d:
                pairs.append((str(d["question"]), str(d["db_id"])))
            elif d.get("qtype") == "single_db":
                pairs.append((str(d["question"]), str(d["gold_db_ids"][0])))
        except (ValueError, KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"{path}:{lineno}: expected {{\"question\", \"db_id\"}}: {exc}") from exc
    return pairs


@cli.command("compose-train")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True, dir_okay=False), help="JSON lines of {question, db_id} (single_db dataset lines also accepted).")
@click.option("--out", default="-", show_default=True, help="Output JSON-lines file.")
@click.option("--negatives", default=1, show_default=True, type=click.IntRange(min=1), help="Negatives per positive.")
@click.option("--composites", default=0, show_default=True, type=click.IntRange(min=0), help="Composite questions to add.")
@click.option("--composite-k", default=2, show_default=True, type=click.IntRange(min=2), help="Questions joined per composite.")
@click.option("--seed", default=0, show_default=True, type=int, help="Sampling seed.")
@pass_ctx
def compose_train(obj: Context, qa_path, out, negatives, composites, composite_k, seed):
    """Emit labelled (question, schema) pairs for a selection model."""
    cat = store.load_catalog(obj.config.store)
    records = compose_training_data(_read_qa(qa_path), cat, negatives, composite_k, seed, composites)
    _write_out(training_jsonl(records), out)


@cli.command("compose-double")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False), help="Dataset with single_db questions.")
@click.option("--n", "count", default=10, show_default=True, type=click.IntRange(min=1), help="Composites to draw.")
@click.option("--seed", default=0, show_default=True, type=int, help="Sampling seed.")
@click.option("--out", default="-", show_default=True, help="Output JSON-lines file.")
@pass_ctx
def compose_double(obj: Context, dataset, count, seed, out):
    """Emit double_db comparison questions built from numeric single_db ones."""
    cat = store.load_catalog(obj.config.store)
    singles = evalkit.load_dataset(dataset)
    _write_out(evalkit.dataset_jsonl(evalkit.sample_double_db(singles, cat, count, seed)), out)


# ---------------------------------------------------------------------------
# eval


@cli.group("eval")
def eval_group():
    """Evaluate the pipeline on a dataset."""


@eval_group.command("run")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False), help="JSON-lines dataset.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Directory for report.json and report.txt.")
@click.option("--parallelism", default=1, show_default=True, type=click.IntRange(min=1), help="Questions answered concurrently.")
@pass_ctx
def eval_run(obj: Context, dataset, out, parallelism):
    """Score the pipeline and write a report."""
    questions = evalkit.load_dataset(dataset)
    pipeline = obj.pipeline()
    report = evalkit.run_eval(questions, pipeline, pipeline.providers.llm, out_dir=out, parallelism=parallelism)
    click.echo(report.table(), nl=False)


# ---------------------------------------------------------------------------
# serve


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True, help="Interface to bind.")
@click.option("--port", default=8080, show_default=True, type=click.IntRange(1, 65535), help="Port to listen on.")
@pass_ctx
def serve(obj: Context, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(obj.pipeline(), timing=obj.config.trace_timing)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
