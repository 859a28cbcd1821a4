"""Shared TSV plumbing: header-checked streaming reads, deterministic writes.

All tables are UTF-8, tab-separated, one header row. Paths ending in
".gz" are transparently (de)compressed; written gzip members carry no
mtime so equal content yields equal bytes.
"""

from __future__ import annotations

import csv
import gzip
import io
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path

from .errors import IngestError


def _is_gz(path: str | Path) -> bool:
    return str(path).endswith(".gz")


@contextmanager
def open_text_read(path: str | Path):
    if _is_gz(path):
        with gzip.open(path, "rt", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            yield fh


@contextmanager
def open_text_write(path: str | Path):
    if _is_gz(path):
        # mtime=0 and an empty embedded name keep the byte stream
        # independent of when or where the file was written.
        with open(path, "wb") as raw:
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                with io.TextIOWrapper(gz, encoding="utf-8", newline="") as fh:
                    yield fh
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def read_rows(path: str | Path, columns: Sequence[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield (row_number, fields) per data row after validating the header.

    Row numbers are 1-based over data rows (the header is row 0).
    A row with the wrong number of fields raises IngestError.
    """
    expected = list(columns)
    with open_text_read(path) as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise IngestError("empty file, expected a header row", path=str(path))
        if header != expected:
            raise IngestError(
                f"bad header {header!r}, expected {expected!r}", path=str(path)
            )
        for row_no, fields in enumerate(reader, start=1):
            if not fields:
                continue
            if len(fields) != len(expected):
                raise IngestError(
                    f"expected {len(expected)} columns, got {len(fields)}",
                    row=row_no,
                    path=str(path),
                )
            yield row_no, fields


def write_rows(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    """Write a header plus rows. Fields must be free of tabs and newlines."""
    with open_text_write(path) as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            for field in row:
                if "\t" in field or "\n" in field or "\r" in field:
                    raise ValueError(f"field {field!r} contains a tab or newline")
            fh.write("\t".join(row) + "\n")
