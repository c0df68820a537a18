"""Token-level edit distance between SQL queries.

One "edit action" is an insert, delete, or replace of a single normalized
token.  Normalization is deliberately coarse so that one action corresponds
to one reviewer-visible correction:

* keywords and identifiers are lowercased, whitespace and comments dropped;
* a quoted literal is one token (quote style folded to single quotes);
* commas and semicolons are list separators, not tokens, so striking a
  select item out of a list is one action, not two;
* a function application such as ``MAX(Percentage)`` collapses to one token;
* ``GROUP BY`` / ``ORDER BY`` fuse into one keyword token;
* dotted names (``T1.state``) are one token.

Parentheses that do not belong to a function call (subqueries, grouping)
stay as individual tokens, so rewrites inside a nested query cost per token.
"""

from __future__ import annotations

import re

from .errors import UnlexableInput

# Keywords never treated as function names even when followed by "(".
_KEYWORDS = frozenset(
    """
    select from where group by order having limit offset join inner left
    right full outer cross on as and or not in exists between like glob is
    null distinct union all intersect except case when then else end asc
    desc with recursive values insert update delete set into
    """.split()
)

_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?|\.\d+")
_TWO_CHAR_OPS = ("<=", ">=", "<>", "!=", "||")
_ONE_CHAR_OPS = "=<>+-*/%"


def tokenize(sql: str, which: str = "input") -> list[str]:
    """Lex ``sql`` into normalized tokens.

    Raises UnlexableInput on unterminated quotes or characters outside the
    SQL subset we lex.  Full grammar parsing is out of scope; this is a
    lexer only.
    """
    tokens: list[str] = []
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            i += 1
            continue
        if ch in ",;":
            i += 1
            continue
        if sql.startswith("--", i):
            nl = sql.find("\n", i)
            i = n if nl == -1 else nl + 1
            continue
        if sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            if end == -1:
                raise UnlexableInput(which, i, "unterminated block comment")
            i = end + 2
            continue
        if ch in "'\"`":
            literal, i = _read_quoted(sql, i, which)
            tokens.append(literal)
            continue
        m = _WORD_RE.match(sql, i)
        if m:
            word = m.group(0).lower()
            i = m.end()
            if word not in _KEYWORDS:
                word, i = _extend_name(sql, word, i, which)
            tokens.append(word)
            continue
        m = _NUMBER_RE.match(sql, i)
        if m:
            tokens.append(m.group(0))
            i = m.end()
            continue
        if sql.startswith(_TWO_CHAR_OPS, i):
            tokens.append(sql[i : i + 2])
            i += 2
            continue
        if ch in _ONE_CHAR_OPS or ch in "()":
            tokens.append(ch)
            i += 1
            continue
        raise UnlexableInput(which, i, f"unexpected character {ch!r}")
    return _fuse_compound_keywords(tokens)


def _read_quoted(sql: str, start: int, which: str) -> tuple[str, int]:
    quote = sql[start]
    i = start + 1
    buf: list[str] = []
    while i < len(sql):
        if sql[i] == quote:
            if i + 1 < len(sql) and sql[i + 1] == quote:  # doubled-quote escape
                buf.append(quote)
                i += 2
                continue
            body = "".join(buf)
            if quote == "`":  # backtick always quotes an identifier
                return body.lower(), i + 1
            return "'" + body + "'", i + 1
        buf.append(sql[i])
        i += 1
    raise UnlexableInput(which, start, "unterminated quoted literal")


def _extend_name(sql: str, word: str, i: int, which: str) -> tuple[str, int]:
    """Fold dotted qualifiers and a trailing call-argument list into one token."""
    n = len(sql)
    while i < n and sql[i] == ".":
        i += 1
        if i < n and sql[i] == "*":
            word += ".*"
            i += 1
            break
        m = _WORD_RE.match(sql, i)
        if not m:
            raise UnlexableInput(which, i, "dangling '.' in qualified name")
        word += "." + m.group(0).lower()
        i = m.end()
    j = i
    while j < n and sql[j].isspace():
        j += 1
    if j < n and sql[j] == "(":
        inner, i = _read_balanced(sql, j, which)
        args = tokenize(inner, which)
        word += "(" + " ".join(args) + ")"
    return word, i


def _read_balanced(sql: str, start: int, which: str) -> tuple[str, int]:
    depth = 0
    i = start
    while i < len(sql):
        ch = sql[i]
        if ch in "'\"`":
            _, i = _read_quoted(sql, i, which)
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return sql[start + 1 : i], i + 1
        i += 1
    raise UnlexableInput(which, start, "unbalanced parentheses")


def _fuse_compound_keywords(tokens: list[str]) -> list[str]:
    fused: list[str] = []
    for tok in tokens:
        if tok == "by" and fused and fused[-1] in ("group", "order"):
            fused[-1] = fused[-1] + " by"
        else:
            fused.append(tok)
    return fused


def sql_edit_count(predicted: str, gold: str) -> int:
    """Minimum number of token edit actions turning ``predicted`` into ``gold``."""
    a = tokenize(predicted, "predicted")
    b = tokenize(gold, "gold")
    return token_edit_distance(a, b)


def token_edit_distance(a: list[str], b: list[str]) -> int:
    """Levenshtein distance over token sequences (two-row DP)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[len(b)]


def has_top_level_order_by(sql: str) -> bool:
    """True when the query orders its outermost result set."""
    depth = 0
    i = 0
    n = len(sql)
    saw_order = False
    while i < n:
        ch = sql[i]
        if ch in "'\"`":
            try:
                _, i = _read_quoted(sql, i, "input")
            except UnlexableInput:
                return False
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        m = _WORD_RE.match(sql, i)
        if m:
            word = m.group(0).lower()
            if depth == 0:
                if saw_order and word == "by":
                    return True
                saw_order = word == "order"
            i = m.end()
            continue
        if not ch.isspace():
            saw_order = False
        i += 1
    return False
