"""
File utility functions for dataset, grid and prediction exports
"""

import asyncio
import csv
import io
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import aiofiles
import numpy as np

from .synth import FEATURE_NAMES, SyntheticDataset


logger = logging.getLogger(__name__)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows as CSV text; floats keep their shortest round-trip repr"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


async def write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, 'w', encoding='utf-8', newline='') as f:
        await f.write(text)


def dataset_paths(outdir: Path, protocol: str, index: int) -> Tuple[Path, Path]:
    """CSV and sidecar paths for dataset `index` of a protocol"""
    stem = f"{protocol}_{index:03d}"
    return Path(outdir) / f"{stem}.csv", Path(outdir) / f"{stem}.txt"


def dataset_csv(dataset: SyntheticDataset) -> str:
    rows = (
        (float(x[0]), float(x[1]), int(label))
        for x, label in zip(dataset.X, dataset.y)
    )
    return rows_to_csv((*FEATURE_NAMES, "label"), rows)


async def write_dataset(dataset: SyntheticDataset, outdir: Path, index: int) -> Path:
    csv_path, sidecar_path = dataset_paths(outdir, dataset.protocol, index)
    await asyncio.gather(
        write_text(csv_path, dataset_csv(dataset)),
        write_text(sidecar_path, dataset.sidecar_text()),
    )
    logger.debug(f"Wrote {csv_path} ({dataset.n_points} rows)")
    return csv_path


async def write_datasets(datasets: Sequence[Tuple[int, SyntheticDataset]], outdir: Path) -> List[Path]:
    """Write (index, dataset) pairs concurrently; paths come back in input order"""
    return await asyncio.gather(*(write_dataset(ds, outdir, i) for i, ds in datasets))


def export_datasets(datasets: Sequence[Tuple[int, SyntheticDataset]], outdir: Path) -> List[Path]:
    return asyncio.run(write_datasets(datasets, outdir))


def grid_csv(grid: np.ndarray, value_columns: Sequence[str] = ("f",)) -> str:
    """Grid rows (x1, x2, value...) as CSV"""
    rows = ([float(v) for v in row] for row in grid)
    return rows_to_csv((*FEATURE_NAMES, *value_columns), rows)


def export_grid(path: Path, grid: np.ndarray, value_columns: Sequence[str] = ("f",)):
    asyncio.run(write_text(path, grid_csv(grid, value_columns)))


def predictions_csv(probabilities: np.ndarray, labels: np.ndarray) -> str:
    rows = (
        (row_id, float(p), int(label))
        for row_id, (p, label) in enumerate(zip(probabilities, labels))
    )
    return rows_to_csv(("row_id", "probability", "label"), rows)


def export_text(path: Path, text: str):
    asyncio.run(write_text(path, text))
