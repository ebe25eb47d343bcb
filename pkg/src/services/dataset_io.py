"""CSV ingestion of subject records and CSV emission of result tables"""

import io
import logging
from pathlib import Path
from typing import TextIO

import numpy as np
import pandas as pd

from src.core.app_config import app_config
from src.core.errors import DataFormatError
from src.models.models import Dataset

logger = logging.getLogger(__name__)

COLUMNS = ["group", "response", "time"]
# Header occupies line 1; row labels count physical lines after it
FIRST_DATA_LINE = 2


def _first_bad_line(bad: pd.Series) -> int:
    return int(bad.index[bad.to_numpy()][0]) + FIRST_DATA_LINE


def _drop_blank_rows(frame: pd.DataFrame) -> pd.DataFrame:
    """Remove empty lines while keeping each row's original label"""
    blank = (np.char.strip(frame.to_numpy(dtype=str)) == "").all(axis=1)
    return frame[~blank]


def parse_frame(frame: pd.DataFrame) -> Dataset:
    """Validate a string-typed ``group,response,time`` frame"""
    header = [str(c).strip().lower() for c in frame.columns]
    if header != COLUMNS:
        raise DataFormatError(f"expected header {','.join(COLUMNS)}, got {','.join(header)}", 1)

    group = frame["group"].str.strip().str.upper()
    bad_group = ~group.isin(["E", "C"])
    if bad_group.any():
        line = _first_bad_line(bad_group)
        raise DataFormatError(
            f"group must be E or C, got {frame['group'][bad_group].iloc[0]!r}", line
        )

    response = frame["response"].str.strip()
    bad_response = ~response.isin(["0", "1"])
    if bad_response.any():
        line = _first_bad_line(bad_response)
        raise DataFormatError(
            f"response must be 0 or 1, got {frame['response'][bad_response].iloc[0]!r}", line
        )

    time = pd.to_numeric(frame["time"].str.strip(), errors="coerce")
    bad_time = ~(np.isfinite(time) & (time > 0))
    if bad_time.any():
        line = _first_bad_line(bad_time)
        raise DataFormatError(
            f"time must be a positive number, got {frame['time'][bad_time].iloc[0]!r}", line
        )

    return Dataset(
        (group == "E").to_numpy(), (response == "1").to_numpy(), time.to_numpy(dtype=float)
    )


def read_dataset(source: str | Path | TextIO) -> Dataset:
    """Read a ``group,response,time`` CSV file

    Raises :class:`DataFormatError` with the offending line number; a missing
    file surfaces as ``OSError``.
    """
    try:
        frame = pd.read_csv(
            source, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("input file is empty") from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"malformed CSV: {e}") from e
    except UnicodeDecodeError as e:
        raise DataFormatError(f"input is not valid UTF-8: {e.reason} at byte {e.start}") from e

    data = parse_frame(_drop_blank_rows(frame.fillna("")))
    logger.info(f"Read {len(data)} records from {source}")
    return data


def dataset_frame(data: Dataset) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "group": np.where(data.experimental, "E", "C"),
            "response": data.responder.astype(int),
            "time": data.time,
        },
        columns=COLUMNS,
    )


def to_csv_text(frame: pd.DataFrame) -> str:
    """RFC 4180 text with CRLF line ends and the configured significant digits"""
    buffer = io.StringIO()
    frame.to_csv(
        buffer, index=False, float_format=f"%.{app_config.float_digits}g", lineterminator="\r\n"
    )
    return buffer.getvalue()


def write_table(frame: pd.DataFrame, path: str | Path) -> None:
    Path(path).write_bytes(to_csv_text(frame).encode("utf-8"))
    logger.info(f"Wrote {len(frame)} rows to {path}")


def write_dataset(data: Dataset, path: str | Path) -> None:
    write_table(dataset_frame(data), path)
