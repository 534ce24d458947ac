# nougat/core/csv_io.py
"""
CSV input and output

Dialect: comma separated, optional header row, '.' decimal point. Lines
starting with '#' and blank lines are skipped. Floats are written with
settings.FLOAT_DIGITS significant digits so values read back bit-exact.
"""

import csv
import logging
import re
import sys
from collections import deque
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..config import settings
from ..schemas.kernel import KernelParams
from .errors import CsvParseError, DataError, EmptyInputError
from .kernel_dict import Dictionary

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
STDIO = "-"

_HEADER_PARAM = re.compile(r"(\w+)\s*=\s*([^\s,]+)")


# =============================================================================
# Formatting
# =============================================================================

def format_value(value) -> str:
    """One CSV cell: ints and bools as integers, floats with full precision"""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return "nan"
    return format(value, settings.float_format)


@contextmanager
def open_text(path: Optional[PathLike], mode: str = "r") -> Iterator[IO[str]]:
    """File handle for path; None or '-' means stdin/stdout"""
    if path is None or str(path) == STDIO:
        yield sys.stdin if "r" in mode else sys.stdout
        return
    with open(path, mode, newline="", encoding="utf-8") as handle:
        yield handle


# =============================================================================
# Reading
# =============================================================================

def _parse_row(cells: List[str], row: int) -> np.ndarray:
    try:
        return np.array([float(c) for c in cells], dtype=float)
    except ValueError:
        bad = next(c for c in cells if not _is_number(c))
        raise CsvParseError(row, f"non-numeric value {bad!r}")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def iter_rows(handle: IO[str]) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Numeric rows of a CSV stream as (row number, values)

    Row numbers count physical lines from 1. A first non-comment row that is
    not numeric is taken as the header.
    """
    width: Optional[int] = None
    seen_data = False
    for row, cells in enumerate(csv.reader(handle), start=1):
        cells = [c.strip() for c in cells]
        if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
            continue
        if not seen_data and width is None and not all(_is_number(c) for c in cells):
            width = len(cells)
            logger.debug(f"CSV header at row {row}: {cells}")
            continue
        if width is not None and len(cells) != width:
            raise CsvParseError(row, f"expected {width} columns, got {len(cells)}")
        values = _parse_row(cells, row)
        if not np.all(np.isfinite(values)):
            raise CsvParseError(row, "non-finite value")
        width = len(cells)
        seen_data = True
        yield row, values


def read_series(path: Optional[PathLike]) -> np.ndarray:
    """Whole CSV as an (n, d) array"""
    with open_text(path) as handle:
        rows = [values for _, values in iter_rows(handle)]
    if not rows:
        raise EmptyInputError(f"No data rows in {path or 'stdin'}")
    data = np.vstack(rows)
    logger.info(f"Read {data.shape[0]} rows with {data.shape[1]} columns from {path or 'stdin'}")
    return data


# =============================================================================
# Time-delay embedding
# =============================================================================

def embed(series, k: int) -> np.ndarray:
    """
    Stack k consecutive values: y_t = (x_t, ..., x_{t+k-1})

    Output has len(series) - k + 1 rows. k = 1 returns the series as
    column vectors.
    """
    if k < 1:
        raise DataError(f"Embedding dimension must be >= 1, got {k}")
    x = np.asarray(series, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            if k == 1:
                return x
            raise DataError(f"Embedding needs a scalar series, got {x.shape[1]} columns")
        x = x[:, 0]
    if x.shape[0] < k:
        raise DataError(f"Series of length {x.shape[0]} is shorter than the embedding dimension {k}")
    return sliding_window_view(x, k).copy()


class DelayEmbedder:
    """Streaming counterpart of embed()"""

    def __init__(self, k: int):
        if k < 1:
            raise DataError(f"Embedding dimension must be >= 1, got {k}")
        self.k = k
        self._buffer: deque = deque(maxlen=k)

    def push(self, values: np.ndarray) -> Optional[np.ndarray]:
        values = np.atleast_1d(values)
        if self.k == 1:
            return values
        if values.shape[0] != 1:
            raise DataError(f"Embedding needs a scalar series, got {values.shape[0]} columns")
        self._buffer.append(float(values[0]))
        if len(self._buffer) < self.k:
            return None
        return np.array(self._buffer)


# =============================================================================
# Writing
# =============================================================================

class CsvWriter:
    """
    Row writer over a file or stdout

    ``flush_rows`` flushes after every row so piped consumers see results
    as they are produced.
    """

    def __init__(self, handle: IO[str], header: Sequence[str], flush_rows: bool = False):
        self._handle = handle
        self._writer = csv.writer(handle, lineterminator="\n")
        self._flush_rows = flush_rows
        self.rows = 0
        self._writer.writerow(list(header))

    def write(self, values: Iterable) -> None:
        self._writer.writerow([format_value(v) for v in values])
        self.rows += 1
        if self._flush_rows:
            self._handle.flush()


def write_table(
    path: Optional[PathLike],
    header: Sequence[str],
    columns: Sequence[Sequence],
    integer_columns: Optional[Set[str]] = None,
    comments: Sequence[str] = (),
) -> None:
    """
    Column-oriented table

    Columns named in integer_columns are written as ints; each comment
    becomes a leading '# ' line.
    """
    integer_columns = integer_columns or set()
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise DataError(f"Columns have different lengths: {sorted(lengths)}")
    as_int = [name in integer_columns for name in header]
    with open_text(path, "w") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        writer = CsvWriter(handle, header)
        for row in zip(*columns):
            writer.write(int(v) if cast else v for cast, v in zip(as_int, row))
    logger.info(f"Wrote {writer.rows} rows to {path or 'stdout'}")


# =============================================================================
# Dictionaries
# =============================================================================

def save_dictionary(dictionary: Dictionary, path: PathLike) -> None:
    """Atoms one per row, kernel parameters in a comment header"""
    with open_text(path, "w") as handle:
        handle.write(f"# sigma={format_value(dictionary.sigma)} eta0={format_value(dictionary.eta0)}\n")
        writer = CsvWriter(handle, [f"x{i}" for i in range(dictionary.dim)])
        for atom in dictionary.atoms:
            writer.write(atom)
    logger.info(f"Saved dictionary with L={dictionary.size} atoms to {path}")


def _header_params(path: PathLike) -> dict:
    params = {}
    with open_text(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            params.update({k: v for k, v in _HEADER_PARAM.findall(line)})
    return params


def load_dictionary(
    path: PathLike,
    params: Optional[KernelParams] = None,
    eta0: Optional[float] = None,
    max_size: Optional[int] = None,
) -> Dictionary:
    """
    Dictionary from a CSV of atoms

    Explicit params/eta0 take precedence over the values in the file header.
    """
    header = _header_params(path)
    if params is None:
        if "sigma" not in header:
            raise DataError(f"{path} has no sigma header and no kernel parameters were given")
        params = KernelParams(sigma=float(header["sigma"]))
    if eta0 is None:
        eta0 = float(header.get("eta0", 1.0))
    atoms = read_series(path)
    return Dictionary(atoms, params, eta0, max_size)
