#!/usr/bin/env python3
"""Materialize the fixture SQLite databases from their checked-in DDL.

The .sql sources are the versioned artifacts; the .sqlite files they produce
are build outputs (conftest invokes this before tests that need them).
Rebuilding is idempotent: each database is dropped and recreated so content
always matches the DDL exactly.
"""

from __future__ import annotations

import sqlite3
import sys
from pathlib import Path

DB_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "sql" / "db"


def build_all(db_dir: Path = DB_DIR) -> list[Path]:
    built = []
    for ddl in sorted(db_dir.glob("*.sql")):
        target = ddl.with_suffix(".sqlite")
        if target.exists():
            target.unlink()
        conn = sqlite3.connect(target)
        try:
            conn.executescript(ddl.read_text())
            conn.commit()
        finally:
            conn.close()
        built.append(target)
    return built


if __name__ == "__main__":
    for path in build_all():
        print(f"built {path}", file=sys.stderr)
