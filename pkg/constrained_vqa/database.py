import json
import logging
import os
import sqlite3
from contextlib import closing
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


def init_manifest(db_path: str):
    """Create the runs table of a sweep manifest if it does not exist"""
    os.makedirs(os.path.dirname(os.path.abspath(db_path)), exist_ok=True)
    with closing(sqlite3.connect(db_path)) as conn:
        conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                spec_hash TEXT PRIMARY KEY,
                spec TEXT NOT NULL,
                status TEXT NOT NULL,
                result_path TEXT,
                error TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        conn.commit()
    logger.info(f"Using manifest database: {db_path}")


def record_run(
    db_path: str,
    spec_hash: str,
    spec: Dict[str, Any],
    status: str,
    result_path: Optional[str] = None,
    error: Optional[str] = None,
) -> bool:
    """
    Insert or update the manifest row of one run

    Args:
        db_path: Manifest database file
        spec_hash: Content hash of the run spec
        spec: The run spec as a dict
        status: completed or failed
        result_path: Result file relative to the sweep directory
        error: Error text for failed runs

    Returns:
        bool: True if successful
    """
    try:
        with closing(sqlite3.connect(db_path)) as conn:
            conn.execute("""
                INSERT INTO runs (spec_hash, spec, status, result_path, error, created_at, updated_at)
                VALUES (?, ?, ?, ?, ?, ?, ?)
                ON CONFLICT(spec_hash) DO UPDATE SET
                    status = excluded.status,
                    result_path = excluded.result_path,
                    error = excluded.error,
                    updated_at = excluded.updated_at
            """, (spec_hash, json.dumps(spec, sort_keys=True), status, result_path, error, datetime.now(), datetime.now()))
            conn.commit()
        return True
    except Exception as e:
        logger.error(f"Error recording run {spec_hash}: {e}")
        return False


def completed_hashes(db_path: str) -> set:
    """Spec hashes whose runs finished successfully"""
    if not os.path.exists(db_path):
        return set()
    try:
        with closing(sqlite3.connect(db_path)) as conn:
            results = conn.execute("SELECT spec_hash FROM runs WHERE status = 'completed'").fetchall()
        return {row[0] for row in results}
    except Exception as e:
        logger.error(f"Error reading manifest: {e}")
        return set()


def list_runs(db_path: str) -> List[Dict[str, Any]]:
    """
    List every run of a sweep, ordered by spec hash

    Returns:
        List of run info dicts
    """
    try:
        with closing(sqlite3.connect(db_path)) as conn:
            results = conn.execute("""
                SELECT spec_hash, spec, status, result_path, error
                FROM runs
                ORDER BY spec_hash
            """).fetchall()

        runs = []
        for spec_hash, spec_json, status, result_path, error in results:
            runs.append({
                "spec_hash": spec_hash,
                "spec": json.loads(spec_json),
                "status": status,
                "result_path": result_path,
                "error": error,
            })
        return runs
    except Exception as e:
        logger.error(f"Error listing runs: {e}")
        return []


def export_manifest(db_path: str, json_path: str) -> int:
    """Write manifest.json (runs sorted by spec hash, no timestamps); returns the run count"""
    runs = list_runs(db_path)
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"runs": runs}, f, indent=2, sort_keys=True)
    return len(runs)
