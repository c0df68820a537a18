#!/usr/bin/env python3
"""Derive expected edit counts for the difficulty fixtures.

Uses a plain recursive (memoized) edit distance, deliberately independent of
the two-row DP in explainloop.sqledits, to compute the values that the test
suite freezes.  Run from the repo root:

    python scripts/derive_edit_counts.py
"""

from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from explainloop.sqledits import tokenize  # noqa: E402


def brute_force_distance(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    return go(0, 0)


PAIRS = {
    "easy (drop select item)": (
        "SELECT ID, grade FROM Highschooler",
        "SELECT grade FROM Highschooler",
    ),
    "medium (countrylanguage)": (
        "SELECT COUNT(*) FROM countrylanguage WHERE IsOfficial='T'",
        'SELECT COUNT(*), MAX(Percentage) FROM countrylanguage '
        'WHERE LANGUAGE="Spanish" GROUP BY CountryCode',
    ),
    "count-2 (drop two select items)": (
        "SELECT name, age, grade FROM Highschooler",
        "SELECT grade FROM Highschooler",
    ),
    "count-3 (append desc + limit)": (
        "SELECT name FROM singer ORDER BY age",
        "SELECT name FROM singer ORDER BY age DESC LIMIT 1",
    ),
    "count-6 (medium plus distinct aggregate)": (
        "SELECT COUNT(*) FROM countrylanguage WHERE IsOfficial='T'",
        "SELECT COUNT(DISTINCT CountryCode), MAX(Percentage) FROM countrylanguage "
        'WHERE LANGUAGE="Spanish" GROUP BY CountryCode',
    ),
}


def main() -> None:
    for label, (pred, gold) in PAIRS.items():
        ta = tuple(tokenize(pred, "predicted"))
        tb = tuple(tokenize(gold, "gold"))
        print(f"{label}:")
        print(f"  predicted tokens: {list(ta)}")
        print(f"  gold tokens:      {list(tb)}")
        print(f"  brute-force distance = {brute_force_distance(ta, tb)}")


if __name__ == "__main__":
    main()
