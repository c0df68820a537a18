"""Task corpus: bundle types, manifest loading, and the difficulty model.

A corpus is a directory holding ``manifest.jsonl`` with one record per task:

    {"task_id": ..., "language": "sql" | "python", "question": ...,
     "gold_code": ..., "context": {...}, "difficulty": "easy"?}

SQL contexts carry ``{"database_ref": "relative/path.db"}`` pointing at a
SQLite file next to the manifest; the schema listing and up-to-3 sample rows
per table are rendered from the database at load time.  Python contexts carry
``{"test_cases": [{"assertion": ..., "expected": ...}, ...]}`` inline.
"""

from __future__ import annotations

import ast
import difflib
import json
import sqlite3
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DanglingDatabaseRef, MalformedTask, MissingManifest
from .sqledits import sql_edit_count

MANIFEST_NAME = "manifest.jsonl"
SAMPLE_ROWS_PER_TABLE = 3


class Language(str, Enum):
    SQL = "sql"
    PYTHON = "python"


class Origin(str, Enum):
    SPIDER_STYLE = "spider_style"
    MBPP_STYLE = "mbpp_style"
    CUSTOM = "custom"


class Difficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


# Edit-count boundaries: <=2 easy, 3-5 medium, >5 hard.
EASY_MAX_EDITS = 2
MEDIUM_MAX_EDITS = 5


@dataclass(frozen=True)
class TestCase:
    assertion: str
    expected: str = ""


@dataclass(frozen=True)
class TaskContext:
    """Either a database reference (SQL) or inline test cases (Python)."""

    database_ref: Path | None = None
    schema_text: str = ""
    sample_rows: dict[str, list[tuple]] = field(default_factory=dict)
    test_cases: tuple[TestCase, ...] = ()


@dataclass(frozen=True)
class DifficultyRating:
    level: Difficulty
    edit_count: int | None
    rationale: str


@dataclass(frozen=True)
class TaskBundle:
    task_id: str
    language: Language
    question: str
    context: TaskContext
    gold_code: str
    origin: Origin = Origin.CUSTOM
    difficulty: DifficultyRating | None = None

    def validate(self) -> None:
        if not self.question.strip():
            raise MalformedTask(self.task_id, "question is empty")
        if not self.gold_code.strip():
            raise MalformedTask(self.task_id, "gold_code is empty")
        if self.language is Language.SQL:
            if self.context.database_ref is None:
                raise MalformedTask(self.task_id, "sql task lacks database_ref")
        else:
            if not self.context.test_cases:
                raise MalformedTask(self.task_id, "python task lacks test cases")


def load_corpus(path: str | Path, origin: Origin = Origin.CUSTOM) -> list[TaskBundle]:
    """Load and validate every task in the manifest, in manifest order."""
    root = Path(path)
    manifest = root / MANIFEST_NAME if root.is_dir() else root
    if not manifest.is_file():
        raise MissingManifest(str(manifest))
    base = manifest.parent
    bundles: list[TaskBundle] = []
    for line_no, line in enumerate(manifest.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedTask(f"line {line_no}", f"invalid JSON: {exc}") from exc
        bundles.append(_bundle_from_record(record, base, origin))
    return bundles


def _bundle_from_record(record: dict, base: Path, origin: Origin) -> TaskBundle:
    task_id = str(record.get("task_id", "")).strip()
    if not task_id:
        raise MalformedTask("<missing id>", "record lacks task_id")
    try:
        language = Language(record["language"])
    except (KeyError, ValueError):
        raise MalformedTask(task_id, f"bad language: {record.get('language')!r}")
    question = record.get("question", "")
    gold_code = record.get("gold_code", "")
    raw_context = record.get("context") or {}

    if language is Language.SQL:
        ref = raw_context.get("database_ref")
        if not ref:
            raise MalformedTask(task_id, "sql context lacks database_ref")
        db_path = (base / ref).resolve()
        if not db_path.is_file():
            raise DanglingDatabaseRef(task_id, str(ref))
        schema_text, sample_rows = render_database_context(db_path)
        context = TaskContext(
            database_ref=db_path, schema_text=schema_text, sample_rows=sample_rows
        )
    else:
        cases = []
        for raw in raw_context.get("test_cases") or []:
            if isinstance(raw, str):
                cases.append(TestCase(assertion=raw))
            else:
                cases.append(
                    TestCase(
                        assertion=raw.get("assertion", ""),
                        expected=raw.get("expected", ""),
                    )
                )
        if not cases or any(not c.assertion.strip() for c in cases):
            raise MalformedTask(task_id, "python context lacks usable test cases")
        context = TaskContext(test_cases=tuple(cases))

    difficulty = None
    if record.get("difficulty"):
        try:
            level = Difficulty(record["difficulty"])
        except ValueError:
            raise MalformedTask(task_id, f"bad difficulty: {record['difficulty']!r}")
        difficulty = DifficultyRating(
            level=level, edit_count=None, rationale="declared in manifest"
        )

    bundle = TaskBundle(
        task_id=task_id,
        language=language,
        question=question,
        context=context,
        gold_code=gold_code,
        origin=origin,
        difficulty=difficulty,
    )
    bundle.validate()
    return bundle


def render_database_context(db_path: Path) -> tuple[str, dict[str, list[tuple]]]:
    """Render a table/column listing plus up to 3 sample rows per table."""
    uri = f"file:{db_path}?mode=ro"
    with sqlite3.connect(uri, uri=True) as conn:
        tables = [
            row[0]
            for row in conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' "
                "AND name NOT LIKE 'sqlite_%' ORDER BY name"
            )
        ]
        lines: list[str] = []
        samples: dict[str, list[tuple]] = {}
        for table in tables:
            cols = conn.execute(f'PRAGMA table_info("{table}")').fetchall()
            col_desc = ", ".join(f"{c[1]} {c[2]}".strip() for c in cols)
            lines.append(f"table {table} ({col_desc})")
            samples[table] = [
                tuple(row)
                for row in conn.execute(
                    f'SELECT * FROM "{table}" LIMIT {SAMPLE_ROWS_PER_TABLE}'
                )
            ]
    return "\n".join(lines), samples


def classify_difficulty(task: TaskBundle, predicted: str) -> DifficultyRating:
    """Rate how much work separates ``predicted`` from the task's gold code."""
    if task.language is Language.SQL:
        edits = sql_edit_count(predicted, task.gold_code)
        level = _level_from_edits(edits)
        return DifficultyRating(
            level=level,
            edit_count=edits,
            rationale=f"{edits} token edit action(s) from predicted to gold",
        )
    return _classify_python(task, predicted)


def _level_from_edits(edits: int) -> Difficulty:
    if edits <= EASY_MAX_EDITS:
        return Difficulty.EASY
    if edits <= MEDIUM_MAX_EDITS:
        return Difficulty.MEDIUM
    return Difficulty.HARD


def _classify_python(task: TaskBundle, predicted: str) -> DifficultyRating:
    changed = changed_line_count(predicted, task.gold_code)
    marker = _rewrite_marker(predicted, task.gold_code)
    if marker:
        return DifficultyRating(
            level=Difficulty.HARD,
            edit_count=None,
            rationale=f"{changed} changed line(s); rewrite marker: {marker}",
        )
    level = _level_from_edits(changed)
    return DifficultyRating(
        level=level, edit_count=None, rationale=f"{changed} changed line(s)"
    )


def changed_line_count(predicted: str, gold: str) -> int:
    """Lines touched by a minimal line diff; a replaced block counts its wider side."""
    a = [ln.rstrip() for ln in predicted.strip().splitlines()]
    b = [ln.rstrip() for ln in gold.strip().splitlines()]
    changed = 0
    matcher = difflib.SequenceMatcher(a=a, b=b, autojunk=False)
    for op, i1, i2, j1, j2 in matcher.get_opcodes():
        if op != "equal":
            changed += max(i2 - i1, j2 - j1)
    return changed


def _rewrite_marker(predicted: str, gold: str) -> str | None:
    """Syntax features whose appearance or loss signals a wholesale rewrite."""
    try:
        pred_tree = ast.parse(predicted)
        gold_tree = ast.parse(gold)
    except SyntaxError:
        return None  # fall back to the line-count heuristic
    pred_depth = _max_loop_depth(pred_tree)
    gold_depth = _max_loop_depth(gold_tree)
    if abs(gold_depth - pred_depth) >= 2:
        return f"loop nesting depth changes by {abs(gold_depth - pred_depth)}"
    pred_rec = _uses_recursion(pred_tree)
    gold_rec = _uses_recursion(gold_tree)
    if pred_rec != gold_rec:
        return "recursion introduced" if gold_rec else "recursion removed"
    return None


def _max_loop_depth(tree: ast.AST) -> int:
    def depth(node: ast.AST, current: int) -> int:
        best = current
        for child in ast.iter_child_nodes(node):
            bump = 1 if isinstance(child, (ast.For, ast.While, ast.AsyncFor)) else 0
            best = max(best, depth(child, current + bump))
        return best

    return depth(tree, 0)


def _uses_recursion(tree: ast.AST) -> bool:
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            for inner in ast.walk(node):
                if (
                    isinstance(inner, ast.Call)
                    and isinstance(inner.func, ast.Name)
                    and inner.func.id == node.name
                ):
                    return True
    return False
