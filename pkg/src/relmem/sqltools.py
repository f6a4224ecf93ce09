"""SQL machinery: condition extraction, read-only execution, result comparison."""

from __future__ import annotations

import math
import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import sqlglot
from sqlglot import exp

from .catalog import DatabaseEntry, TableSchema, connect_readonly
from .errors import AmbiguousColumn, ExecutionError, SqlParseError, SqlTimeout, UnknownColumn, WriteAttempt

DEFAULT_TIMEOUT_SECS = 5.0
REL_TOL = 1e-6


@dataclass(frozen=True)
class SqlCondition:
    table: str
    column: str
    operator: str  # one of =, !=, LIKE, IN
    literal: str


@dataclass(frozen=True)
class SqlResult:
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]
    truncated: bool = False

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row {row!r} does not have {width} cells")

    @classmethod
    def of(cls, columns, rows, truncated: bool = False) -> "SqlResult":
        return cls(tuple(columns), tuple(tuple(r) for r in rows), truncated)

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows], "truncated": self.truncated}

    @classmethod
    def from_json(cls, data: dict) -> "SqlResult":
        return cls.of(data["columns"], data["rows"], bool(data.get("truncated", False)))

    def scalar(self):
        """The single cell of a 1x1 result, else ``None``."""
        if len(self.columns) == 1 and len(self.rows) == 1:
            return self.rows[0][0]
        return None


# ---------------------------------------------------------------------------
# condition extraction


@dataclass
class _Scope:
    # alias (lower) -> real TableSchema, or None for derived tables / CTEs
    sources: dict[str, TableSchema | None] = field(default_factory=dict)

    @property
    def has_derived(self) -> bool:
        return any(t is None for t in self.sources.values())


_OPS = {exp.EQ: "=", exp.NEQ: "!=", exp.Like: "LIKE", exp.In: "IN"}


def _parse_single_query(sql: str) -> exp.Expression:
    try:
        trees = [t for t in sqlglot.parse(sql, read="sqlite") if t is not None]
    except sqlglot.errors.SqlglotError as exc:
        raise SqlParseError(str(exc).splitlines()[0]) from exc
    if len(trees) != 1:
        raise SqlParseError(f"expected one statement, found {len(trees)}")
    tree = trees[0]
    if not isinstance(tree, exp.Query):
        raise SqlParseError(f"not a SELECT statement: {tree.key.upper()}")
    return tree


def _from_clause(select: exp.Select):
    return select.args.get("from_") or select.args.get("from")


def _build_scope(select: exp.Select, entry: DatabaseEntry, cte_names: set[str]) -> _Scope:
    scope = _Scope()
    items = []
    frm = _from_clause(select)
    if frm is not None:
        items.append(frm.this)
        items.extend(frm.expressions or [])
    for join in select.args.get("joins") or []:
        items.append(join.this)
    for item in items:
        alias = item.alias_or_name.lower() if item.alias_or_name else ""
        if isinstance(item, exp.Table) and item.name.lower() not in cte_names:
            table = entry.table(item.name)
            if table is None:
                raise UnknownColumn(f"unknown table {item.name!r}")
            scope.sources[alias or table.name.lower()] = table
        elif alias:
            scope.sources[alias] = None
    return scope


def _resolve(col: exp.Column, chain: list[_Scope]) -> tuple[str, str] | None:
    """Map a column reference to ``(table, column)`` using canonical names.

    ``None`` means the column comes from a derived table and is skipped.
    """
    name = col.name
    qualifier = col.table.lower() if col.table else ""
    if qualifier:
        for scope in chain:
            if qualifier in scope.sources:
                table = scope.sources[qualifier]
                if table is None:
                    return None
                found = table.column(name)
                if found is None:
                    raise UnknownColumn(f"no column {name!r} in table {table.name!r}")
                return table.name, found.name
        raise UnknownColumn(f"unknown table or alias {col.table!r}")
    for scope in chain:
        hits = {}
        for table in scope.sources.values():
            if table is not None and table.column(name) is not None:
                hits[table.name] = table.column(name).name
        if len(hits) > 1:
            raise AmbiguousColumn(f"column {name!r} is ambiguous among {sorted(hits)}")
        if hits:
            ((tname, cname),) = hits.items()
            return tname, cname
        if scope.has_derived:
            return None
    raise UnknownColumn(f"unknown column {name!r}")


def _string_value(node: exp.Expression, chain: list[_Scope]) -> str | None:
    if isinstance(node, exp.Literal) and node.is_string:
        return node.this
    # SQLite reads an unresolvable "double-quoted" identifier as a string
    if isinstance(node, exp.Column) and not node.table and node.this.args.get("quoted"):
        try:
            _resolve(node, chain)
        except UnknownColumn:
            return node.name
    return None


def extract_conditions(sql: str, entry: DatabaseEntry) -> list[SqlCondition]:
    """String-literal comparisons in WHERE/HAVING, subqueries included.

    Aliases are expanded and unqualified columns resolved against the schema.
    Join equalities and numeric comparisons are ignored.
    """
    tree = _parse_single_query(sql)
    cte_names = {cte.alias.lower() for cte in tree.find_all(exp.CTE)}
    scopes: dict[int, _Scope] = {}

    def chain_for(select: exp.Select) -> list[_Scope]:
        chain = []
        node: exp.Expression | None = select
        while node is not None:
            if isinstance(node, exp.Select):
                if id(node) not in scopes:
                    scopes[id(node)] = _build_scope(node, entry, cte_names)
                chain.append(scopes[id(node)])
            node = node.parent
        return chain

    out: list[SqlCondition] = []
    for select in tree.find_all(exp.Select, bfs=False):
        chain = chain_for(select)
        for clause_name in ("where", "having"):
            clause = select.args.get(clause_name)
            if clause is None:
                continue
            for pred in clause.find_all(*_OPS, bfs=False):
                if pred.find_ancestor(exp.Select) is not select or isinstance(pred.parent, exp.Not):
                    continue
                out.extend(_conditions_of(pred, chain))
    return out


def _conditions_of(pred: exp.Expression, chain: list[_Scope]) -> list[SqlCondition]:
    op = _OPS[type(pred)]
    if isinstance(pred, exp.In):
        col = pred.this
        if not isinstance(col, exp.Column) or pred.args.get("query") is not None:
            return []
        literals = [v for v in (_string_value(e, chain) for e in pred.expressions) if v is not None]
        if not literals:
            return []
        target = _resolve(col, chain)
        if target is None:
            return []
        return [SqlCondition(target[0], target[1], op, lit) for lit in literals]

    left, right = pred.this, pred.expression
    pairs = [(left, right)] if isinstance(pred, exp.Like) else [(left, right), (right, left)]
    for col, other in pairs:
        if not isinstance(col, exp.Column):
            continue
        value = _string_value(other, chain)
        if value is None:
            continue
        if _string_value(col, chain) is not None:
            continue
        target = _resolve(col, chain)
        if target is None:
            return []
        return [SqlCondition(target[0], target[1], op, value)]
    return []


# ---------------------------------------------------------------------------
# execution

_file_locks: dict[str, threading.Lock] = {}
_file_locks_guard = threading.Lock()
_LEADING_JUNK = re.compile(r"^(\s+|--[^\n]*\n?|/\*.*?\*/|\()+", re.S)
_READ_KEYWORDS = {"SELECT", "WITH", "VALUES"}


def _lock_for(location: str) -> threading.Lock:
    key = str(Path(location).resolve())
    with _file_locks_guard:
        return _file_locks.setdefault(key, threading.Lock())


def _first_keyword(sql: str) -> str:
    rest = _LEADING_JUNK.sub("", sql)
    m = re.match(r"[A-Za-z]+", rest)
    return m.group(0).upper() if m else ""


def _cell(value):
    if isinstance(value, bytes):
        return value.hex()
    return value


def execute_sql(entry: DatabaseEntry, sql: str, timeout: float = DEFAULT_TIMEOUT_SECS) -> SqlResult:
    """Run a read-only query and materialize the whole result.

    Engine failures raise :class:`ExecutionError` carrying the engine's own
    message; queries running past ``timeout`` seconds raise
    :class:`SqlTimeout`.  Blob cells come back as hex strings.
    """
    if _first_keyword(sql) not in _READ_KEYWORDS:
        raise WriteAttempt("only SELECT statements may be executed", sql)
    with _lock_for(entry.location):
        conn = connect_readonly(entry.location)
        deadline = time.monotonic() + timeout
        timed_out = False

        def check_deadline():
            nonlocal timed_out
            if time.monotonic() > deadline:
                timed_out = True
                return 1
            return 0

        conn.set_progress_handler(check_deadline, 1000)
        try:
            cur = conn.execute(sql)
            rows = cur.fetchall()
            columns = [d[0] for d in cur.description or ()]
        except (sqlite3.Error, ValueError) as exc:
            if timed_out:
                raise SqlTimeout(f"query exceeded the {timeout:g} s time limit", sql) from exc
            raise ExecutionError(str(exc), sql) from exc
        finally:
            conn.close()
    return SqlResult.of(columns, [tuple(_cell(v) for v in row) for row in rows])


# ---------------------------------------------------------------------------
# comparison


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def cells_equal(a, b) -> bool:
    if _is_number(a) and _is_number(b):
        if a == b:
            return True
        return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=0.0)
    if _is_number(a) or _is_number(b):
        return False
    return a == b and type(a) is type(b)


def _rows_close(r1, r2) -> bool:
    return all(cells_equal(x, y) for x, y in zip(r1, r2))


def _shape_key(row) -> tuple:
    # non-numeric cells must match exactly, so they partition the rows
    return tuple(("#",) if _is_number(v) else (type(v).__name__, v) for v in row)


def _sort_key(row) -> tuple:
    return tuple(v if _is_number(v) else 0 for v in row)


def results_equal(a: SqlResult, b: SqlResult) -> bool:
    """Order-insensitive multiset comparison of two results.

    Numbers compare with relative tolerance 1e-6, text and null exactly.
    """
    if len(a.columns) != len(b.columns) or len(a.rows) != len(b.rows):
        return False
    groups_a: dict[tuple, list] = {}
    groups_b: dict[tuple, list] = {}
    for row in a.rows:
        groups_a.setdefault(_shape_key(row), []).append(row)
    for row in b.rows:
        groups_b.setdefault(_shape_key(row), []).append(row)
    if groups_a.keys() != groups_b.keys():
        return False
    for key, rows_a in groups_a.items():
        rows_b = groups_b[key]
        if len(rows_a) != len(rows_b):
            return False
        sa = sorted(rows_a, key=_sort_key)
        sb = sorted(rows_b, key=_sort_key)
        if all(_rows_close(x, y) for x, y in zip(sa, sb)):
            continue
        if not _perfect_matching(sa, sb):
            return False
    return True


def _perfect_matching(rows_a: list, rows_b: list) -> bool:
    """Is there a bijection pairing every row with a close row?"""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    n = len(rows_a)
    ii, jj = [], []
    for i, ra in enumerate(rows_a):
        for j, rb in enumerate(rows_b):
            if _rows_close(ra, rb):
                ii.append(i)
                jj.append(j)
    if not ii:
        return False
    graph = csr_matrix(([1] * len(ii), (ii, jj)), shape=(n, n))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool((match >= 0).all())


def truncate_result(result: SqlResult, n: int) -> SqlResult:
    if n <= 0:
        raise ValueError("n must be positive")
    if len(result.rows) <= n:
        return result
    return replace(result, rows=result.rows[:n], truncated=True)
