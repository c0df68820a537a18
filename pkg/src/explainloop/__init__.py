"""Conversational code generation with execution-grounded NL explanations.

The loop: generate code for a question, execute it, explain the code in
plain language, collect corrective feedback, refine — until the user
completes, skips, or time runs out.
"""

from .gateway import Cassette, CompletionRecord, Gateway, GatewayMode, ModelConfig
from .prompts import DemoStore, Message, PromptBundle, Purpose, Role
from .sandbox import (
    ExecStatus,
    ExecutionOutcome,
    SuccessVerdict,
    VerdictReason,
    judge_python,
    judge_sql,
    run_python,
    run_sql,
)
from .session import (
    Session,
    SessionEngine,
    SessionMode,
    SessionState,
    SkipReason,
    TerminalKind,
    Turn,
)
from .tasks import (
    Difficulty,
    Language,
    TaskBundle,
    classify_difficulty,
    load_corpus,
)

__version__ = "0.3.1"

__all__ = [
    "Cassette",
    "CompletionRecord",
    "DemoStore",
    "Difficulty",
    "ExecStatus",
    "ExecutionOutcome",
    "Gateway",
    "GatewayMode",
    "Language",
    "Message",
    "ModelConfig",
    "PromptBundle",
    "Purpose",
    "Role",
    "Session",
    "SessionEngine",
    "SessionMode",
    "SessionState",
    "SkipReason",
    "SuccessVerdict",
    "TaskBundle",
    "TerminalKind",
    "Turn",
    "VerdictReason",
    "classify_difficulty",
    "judge_python",
    "judge_sql",
    "load_corpus",
    "run_python",
    "run_sql",
]
