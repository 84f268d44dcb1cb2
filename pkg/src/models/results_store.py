"""
SQLite store for per-dataset experiment runs (lets long experiments resume)
"""

import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Set

from ..utils.constants import RunStatus


@dataclass(frozen=True)
class ExperimentRun:
    """Outcome of fitting one synthetic dataset"""
    protocol: str
    base_seed: int
    config_digest: str
    dataset_index: int
    dataset_seed: int
    status: str = RunStatus.COMPLETED
    edc_auc: Optional[float] = None
    original_auc: Optional[float] = None
    equation: str = ""
    runtime: float = 0.0
    error_message: str = ""

    @property
    def is_complete(self) -> bool:
        return self.status == RunStatus.COMPLETED


class ResultStore:
    """SQLite database handler for experiment runs"""

    def __init__(self, db_path: Path):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_db()

    def _get_connection(self) -> sqlite3.Connection:
        conn = sqlite3.connect(str(self.db_path))
        conn.row_factory = sqlite3.Row
        return conn

    def _init_db(self):
        conn = self._get_connection()
        cursor = conn.cursor()
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                protocol TEXT NOT NULL,
                base_seed TEXT NOT NULL,
                config_digest TEXT NOT NULL,
                dataset_index INTEGER NOT NULL,
                dataset_seed TEXT NOT NULL,
                status TEXT NOT NULL,
                edc_auc REAL,
                original_auc REAL,
                equation TEXT DEFAULT '',
                runtime REAL DEFAULT 0,
                error_message TEXT DEFAULT '',
                PRIMARY KEY (protocol, base_seed, config_digest, dataset_index)
            )
        ''')
        conn.commit()
        conn.close()

    def record_run(self, run: ExperimentRun):
        """Save or replace the run for its (protocol, seed, config, index) key"""
        conn = self._get_connection()
        cursor = conn.cursor()
        # seeds are 64-bit unsigned, beyond SQLite's signed INTEGER range
        cursor.execute('''
            INSERT OR REPLACE INTO runs
            (protocol, base_seed, config_digest, dataset_index, dataset_seed, status,
             edc_auc, original_auc, equation, runtime, error_message)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        ''', (
            run.protocol,
            str(run.base_seed),
            run.config_digest,
            run.dataset_index,
            str(run.dataset_seed),
            run.status,
            run.edc_auc,
            run.original_auc,
            run.equation,
            run.runtime,
            run.error_message,
        ))
        conn.commit()
        conn.close()

    def runs_for(self, protocol: str, base_seed: int, config_digest: str) -> List[ExperimentRun]:
        """All stored runs of one experiment, ordered by dataset index"""
        conn = self._get_connection()
        cursor = conn.cursor()
        cursor.execute('''
            SELECT * FROM runs
            WHERE protocol = ? AND base_seed = ? AND config_digest = ?
            ORDER BY dataset_index
        ''', (protocol, str(base_seed), config_digest))
        rows = cursor.fetchall()
        conn.close()
        return [self._row_to_run(row) for row in rows]

    def completed_indices(self, protocol: str, base_seed: int, config_digest: str) -> Set[int]:
        return {
            run.dataset_index
            for run in self.runs_for(protocol, base_seed, config_digest)
            if run.is_complete
        }

    def _row_to_run(self, row: sqlite3.Row) -> ExperimentRun:
        return ExperimentRun(
            protocol=row['protocol'],
            base_seed=int(row['base_seed']),
            config_digest=row['config_digest'],
            dataset_index=row['dataset_index'],
            dataset_seed=int(row['dataset_seed']),
            status=row['status'],
            edc_auc=row['edc_auc'],
            original_auc=row['original_auc'],
            equation=row['equation'] or '',
            runtime=row['runtime'] or 0.0,
            error_message=row['error_message'] or '',
        )
