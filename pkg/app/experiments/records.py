from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
import yaml

from app.core.logging_config import get_logger
from app.models.experiment import RunRecord

logger = get_logger('app.experiments.records')

RECORD_FILE = "record.yaml"
TABLE_DIR = "tables"


def plain(value: Any) -> Any:
    """numpy scalars and arrays to built-in types, recursively."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def write_record(record: RunRecord, tables: Dict[str, pd.DataFrame], out_dir: Union[str, Path]) -> Path:
    """One directory per run: record.yaml plus tables/<name>.csv with a header row."""
    out_dir = Path(out_dir)
    table_dir = out_dir / TABLE_DIR
    table_dir.mkdir(parents=True, exist_ok=True)
    for name, frame in tables.items():
        frame.to_csv(table_dir / f"{name}.csv", index=False)
    with open(out_dir / RECORD_FILE, "w", encoding="utf-8") as handle:
        yaml.safe_dump(plain(record.model_dump(mode="json")), handle, sort_keys=False)
    logger.info(f"💾 Record written to {out_dir}")
    return out_dir


def load_record(path: Union[str, Path]) -> RunRecord:
    path = Path(path)
    if path.is_dir():
        path = path / RECORD_FILE
    with open(path, "r", encoding="utf-8") as handle:
        return RunRecord(**yaml.safe_load(handle))


def load_table(run_dir: Union[str, Path], name: str) -> pd.DataFrame:
    return pd.read_csv(Path(run_dir) / TABLE_DIR / f"{name}.csv")
