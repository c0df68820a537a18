"""Prompt assembly for every model call the engine makes.

All builders are pure: the same inputs always produce byte-identical message
lists and therefore the same fingerprint.  Demonstrations live in a YAML
store so researchers can swap them without touching code; the shipped
default store must carry exactly 13 restatement triplets, 8 description
pairs, and 4 correction demos per language.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import yaml

from .errors import EmptyFeedback, MalformedDemoStore, MissingDemos
from .tasks import Language, TaskBundle

RESTATEMENT_INSTRUCTION = (
    "Translate the following SQL into question. The question should be "
    "consistent with the SQL and follow a similar style as the original question."
)
DESCRIPTION_INSTRUCTION = (
    "You are an expert Python programmer. Your task is to write a description "
    "for the following Python program. The description should be accurate, "
    "concise, and easily understood by non-programmers."
)
CORRECTION_INSTRUCTION = (
    "You will be shown a piece of code, a plain-language explanation of what "
    "it does, and user feedback pointing out what is wrong. Rewrite the code "
    "so that it addresses the feedback. Reply with the corrected code only."
)
CODEGEN_SQL_INSTRUCTION = (
    "Write a SQLite query that answers the question, given the database "
    "schema and sample rows. Reply with the SQL only."
)
CODEGEN_PYTHON_INSTRUCTION = (
    "Write a Python function that solves the task described by the question "
    "and passes the given test cases. Reply with the code only."
)
VANILLA_INSTRUCTION = "You are a helpful assistant."

REQUIRED_RESTATEMENT_TRIPLETS = 13
REQUIRED_DESCRIPTION_PAIRS = 8
REQUIRED_CORRECTION_DEMOS = 4

# Hard ceiling on assembled prompt size; not a token budget, just a tripwire.
MAX_PROMPT_CHARS = 200_000


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class Purpose(str, Enum):
    CODE_GEN = "code_gen"
    RESTATE_EXPLAIN = "restate_explain"
    DESCRIBE_EXPLAIN = "describe_explain"
    ERROR_CORRECT = "error_correct"
    VANILLA_CHAT = "vanilla_chat"


@dataclass(frozen=True)
class Message:
    role: Role
    content: str


@dataclass(frozen=True)
class PromptBundle:
    messages: tuple[Message, ...]
    purpose: Purpose
    fingerprint: str

    def rendered(self) -> str:
        return "\n\n".join(f"[{m.role.value}]\n{m.content}" for m in self.messages)


def _bundle(messages: list[Message], purpose: Purpose) -> PromptBundle:
    if not messages:
        raise ValueError("prompt bundle must carry at least one message")
    if messages[0].role is Role.ASSISTANT:
        raise ValueError("first message must be system or user")
    total = sum(len(m.content) for m in messages)
    if total > MAX_PROMPT_CHARS:
        raise ValueError(f"prompt too large: {total} chars")
    return PromptBundle(
        messages=tuple(messages),
        purpose=purpose,
        fingerprint=fingerprint_messages(messages),
    )


def fingerprint_messages(messages: list[Message] | tuple[Message, ...]) -> str:
    payload = json.dumps(
        [[m.role.value, m.content] for m in messages],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# -- demo store ----------------------------------------------------------------


@dataclass(frozen=True)
class RestatementTriplet:
    sql: str
    original_question: str
    restated_question: str


@dataclass(frozen=True)
class DescriptionPair:
    program: str
    description: str


@dataclass(frozen=True)
class CorrectionDemo:
    code: str
    explanation: str
    feedback: str
    corrected_code: str


@dataclass(frozen=True)
class CodegenDemo:
    question: str
    context: str
    code: str


@dataclass(frozen=True)
class DemoStore:
    restatement_triplets: tuple[RestatementTriplet, ...]
    description_pairs: tuple[DescriptionPair, ...]
    correction_demos: dict[Language, tuple[CorrectionDemo, ...]]
    codegen_demos: dict[Language, tuple[CodegenDemo, ...]]

    @classmethod
    def load(cls, path: str | Path) -> "DemoStore":
        raw = yaml.safe_load(Path(path).read_text())
        return cls.from_mapping(raw, source=str(path))

    @classmethod
    def load_default(cls) -> "DemoStore":
        text = (
            resources.files("explainloop").joinpath("data/demos.yaml").read_text()
        )
        return cls.from_mapping(yaml.safe_load(text), source="<packaged default>")

    @classmethod
    def from_mapping(cls, raw: dict, source: str = "<mapping>") -> "DemoStore":
        if not isinstance(raw, dict):
            raise MalformedDemoStore(f"{source}: top level must be a mapping")
        triplets = tuple(
            RestatementTriplet(
                sql=d["sql"],
                original_question=d["original_question"],
                restated_question=d["restated_question"],
            )
            for d in raw.get("restatement_triplets", [])
        )
        pairs = tuple(
            DescriptionPair(program=d["program"], description=d["description"])
            for d in raw.get("description_pairs", [])
        )
        corrections: dict[Language, tuple[CorrectionDemo, ...]] = {}
        for lang_key, demos in (raw.get("correction_demos") or {}).items():
            corrections[Language(lang_key)] = tuple(
                CorrectionDemo(
                    code=d["code"],
                    explanation=d["explanation"],
                    feedback=d["feedback"],
                    corrected_code=d["corrected_code"],
                )
                for d in demos
            )
        codegen: dict[Language, tuple[CodegenDemo, ...]] = {}
        for lang_key, demos in (raw.get("codegen_demos") or {}).items():
            codegen[Language(lang_key)] = tuple(
                CodegenDemo(
                    question=d["question"],
                    context=d.get("context", ""),
                    code=d["code"],
                )
                for d in demos
            )
        store = cls(
            restatement_triplets=triplets,
            description_pairs=pairs,
            correction_demos=corrections,
            codegen_demos=codegen,
        )
        store._check_counts(source)
        return store

    def _check_counts(self, source: str) -> None:
        problems = []
        if len(self.restatement_triplets) != REQUIRED_RESTATEMENT_TRIPLETS:
            problems.append(
                f"{len(self.restatement_triplets)} restatement triplets "
                f"(need {REQUIRED_RESTATEMENT_TRIPLETS})"
            )
        if len(self.description_pairs) != REQUIRED_DESCRIPTION_PAIRS:
            problems.append(
                f"{len(self.description_pairs)} description pairs "
                f"(need {REQUIRED_DESCRIPTION_PAIRS})"
            )
        for lang in Language:
            demos = self.correction_demos.get(lang, ())
            if len(demos) != REQUIRED_CORRECTION_DEMOS:
                problems.append(
                    f"{len(demos)} correction demos for {lang.value} "
                    f"(need {REQUIRED_CORRECTION_DEMOS})"
                )
        if problems:
            raise MalformedDemoStore(f"{source}: " + "; ".join(problems))


# -- builders ------------------------------------------------------------------


def build_codegen_prompt(task: TaskBundle, store: DemoStore) -> PromptBundle:
    """Few-shot code generation from the task question plus its context."""
    demos = store.codegen_demos.get(task.language)
    if not demos:
        raise MissingDemos(f"codegen demos for {task.language.value}")
    instruction = (
        CODEGEN_SQL_INSTRUCTION
        if task.language is Language.SQL
        else CODEGEN_PYTHON_INSTRUCTION
    )
    messages = [Message(Role.SYSTEM, instruction)]
    for demo in demos:
        messages.append(Message(Role.USER, _codegen_block(demo.question, demo.context)))
        messages.append(Message(Role.ASSISTANT, demo.code))
    messages.append(
        Message(Role.USER, _codegen_block(task.question, render_task_context(task)))
    )
    return _bundle(messages, Purpose.CODE_GEN)


def _codegen_block(question: str, context: str) -> str:
    if context:
        return f"Question: {question}\n{context}"
    return f"Question: {question}"


def render_task_context(task: TaskBundle) -> str:
    """Context block shown to the model: schema + sample rows, or test cases."""
    if task.language is Language.SQL:
        lines = ["Schema:", task.context.schema_text]
        for table, rows in task.context.sample_rows.items():
            lines.append(f"Sample rows for {table}:")
            for row in rows:
                lines.append("  " + ", ".join(repr(v) for v in row))
        return "\n".join(lines)
    lines = ["Test cases:"]
    for case in task.context.test_cases:
        lines.append(f"  {case.assertion}")
    return "\n".join(lines)


def build_restatement_prompt(
    sql: str, original_question: str, store: DemoStore
) -> PromptBundle:
    """Restate generated SQL as a question in the style of the original one."""
    if not sql.strip():
        raise ValueError("sql must be non-empty")
    if not store.restatement_triplets:
        raise MissingDemos("restatement triplets")
    messages = [Message(Role.SYSTEM, RESTATEMENT_INSTRUCTION)]
    for demo in store.restatement_triplets:
        messages.append(
            Message(Role.USER, _restatement_block(demo.sql, demo.original_question))
        )
        messages.append(Message(Role.ASSISTANT, demo.restated_question))
    messages.append(Message(Role.USER, _restatement_block(sql, original_question)))
    return _bundle(messages, Purpose.RESTATE_EXPLAIN)


def _restatement_block(sql: str, original_question: str) -> str:
    return f"SQL: {sql}\nOriginal Question: {original_question}"


def build_description_prompt(python_code: str, store: DemoStore) -> PromptBundle:
    """Describe a Python program concisely for non-programmers."""
    if not python_code.strip():
        raise ValueError("python_code must be non-empty")
    if not store.description_pairs:
        raise MissingDemos("description pairs")
    messages = [Message(Role.SYSTEM, DESCRIPTION_INSTRUCTION)]
    for demo in store.description_pairs:
        messages.append(Message(Role.USER, f"Python Program:\n{demo.program}"))
        messages.append(Message(Role.ASSISTANT, demo.description))
    messages.append(Message(Role.USER, f"Python Program:\n{python_code}"))
    return _bundle(messages, Purpose.DESCRIBE_EXPLAIN)


def build_correction_prompt(
    code: str,
    explanation: str,
    feedback: str,
    task: TaskBundle,
    store: DemoStore,
) -> PromptBundle:
    """Refine code given its explanation and the user's corrective feedback."""
    if not feedback.strip():
        raise EmptyFeedback("feedback is empty; ask the user again")
    if not code.strip() or not explanation.strip():
        raise ValueError("code and explanation must be non-empty")
    demos = store.correction_demos.get(task.language)
    if not demos:
        raise MissingDemos(f"correction demos for {task.language.value}")
    messages = [Message(Role.SYSTEM, CORRECTION_INSTRUCTION)]
    for demo in demos:
        messages.append(
            Message(
                Role.USER,
                _correction_block(demo.code, demo.explanation, demo.feedback, ""),
            )
        )
        messages.append(Message(Role.ASSISTANT, demo.corrected_code))
    messages.append(
        Message(
            Role.USER,
            _correction_block(code, explanation, feedback, render_task_context(task)),
        )
    )
    return _bundle(messages, Purpose.ERROR_CORRECT)


def _correction_block(code: str, explanation: str, feedback: str, context: str) -> str:
    parts = [f"Code:\n{code}", f"Explanation: {explanation}", f"Feedback: {feedback}"]
    if context:
        parts.append(context)
    return "\n".join(parts)


def build_vanilla_prompt(history: list[Message]) -> PromptBundle:
    """Free chat: pass the running conversation through unmodified."""
    messages = [Message(Role.SYSTEM, VANILLA_INSTRUCTION), *history]
    return _bundle(messages, Purpose.VANILLA_CHAT)
