"""Line-oriented readers and writers shared by the pipeline modules (JSONL, CSV, TSV)."""

import csv
import json
from collections.abc import Iterable, Iterator, Sequence
from io import StringIO
from typing import Any, Final

from jacforecast.cli import io, text
from jacforecast.cli.types import ErrorReporter, JsonObject


def format_csv_row(values: Iterable[Any]) -> str:
    """Return ``values`` rendered as one CSV line without a line terminator."""
    buffer = StringIO()

    csv.writer(buffer, lineterminator="").writerow(values)

    return buffer.getvalue()


def format_jsonl_record(record: JsonObject) -> str:
    """Return ``record`` as one compact JSON line (insertion-ordered keys, UTF-8 kept as-is)."""
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def iter_csv_records(path: str, *, required: Sequence[str],
                     on_error: ErrorReporter) -> Iterator[tuple[int, dict[str, str]]]:
    """
    Yield ``(line_number, row)`` for each data row of a CSV file with a header line.

    - ``on_error(message)`` is invoked for a missing file, an empty file, a header lacking a ``required`` column,
      and rows whose field count differs from the header; malformed rows are skipped.
    - Line numbers are physical: blank lines count, and a row spanning lines is numbered by its first line.
    """
    for file_info in io.read_text_files([path], on_error=on_error):
        reader = csv.reader(file_info.text_stream)
        header = next(reader, None)

        if header is None:
            on_error(f"{path!r}: empty file (header expected)")
            return

        if missing := [column for column in required if column not in header]:
            on_error(f"{path!r}: line 1: missing column(s) {', '.join(missing)}")
            return

        line_number = reader.line_num + 1

        for row in reader:
            # A quoted field may span lines; rows are numbered by the line they start on.
            start, line_number = line_number, reader.line_num + 1

            if not row:
                continue

            if len(row) != len(header):
                on_error(f"{path!r}: line {start}: expected {len(header)} fields, found {len(row)}")
                continue

            yield start, dict(zip(header, row))


def iter_jsonl_records(path: str, *, on_error: ErrorReporter) -> Iterator[tuple[int, JsonObject]]:
    """
    Yield ``(line_number, object)`` for each non-blank line of a JSONL file.

    - ``on_error(message)`` is invoked for a missing file, lines that are not valid JSON, and JSON values that are not
      objects; those lines are skipped.
    """
    for file_info in io.read_text_files([path], on_error=on_error):
        for line_number, line in text.iter_numbered_lines(file_info.text_stream):
            if not line.strip():
                continue

            try:
                record = json.loads(line)
            except json.JSONDecodeError as error:
                on_error(f"{path!r}: line {line_number}: invalid JSON ({error.msg})")
                continue

            if not isinstance(record, dict):
                on_error(f"{path!r}: line {line_number}: expected a JSON object")
                continue

            yield line_number, record


def iter_tsv_fields(path: str, *, on_error: ErrorReporter) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` for each non-blank line of a tab-separated file."""
    for file_info in io.read_text_files([path], on_error=on_error):
        for line_number, line in text.iter_numbered_lines(file_info.text_stream):
            if line.strip():
                yield line_number, line.split("\t")


def read_json(path: str, *, on_error: ErrorReporter) -> JsonObject | None:
    """Return the JSON object stored in ``path``, or ``None`` after reporting an unreadable or non-object file."""
    for file_info in io.read_text_files([path], on_error=on_error):
        try:
            document = json.load(file_info.text_stream)
        except json.JSONDecodeError as error:
            on_error(f"{path!r}: line {error.lineno}: invalid JSON ({error.msg})")
            return None

        if not isinstance(document, dict):
            on_error(f"{path!r}: expected a JSON object")
            return None

        return document

    return None


def write_csv(path: str, *, header: Sequence[str], rows: Iterable[Iterable[Any]], on_error: ErrorReporter) -> bool:
    """Write a header line followed by ``rows`` as CSV; returns ``True`` on success."""
    lines = (format_csv_row(row) for row in rows)

    return io.write_text_file(path, lines=_prepend(format_csv_row(header), lines), on_error=on_error)


def write_json(path: str, document: JsonObject, *, indent: int | None = 2, on_error: ErrorReporter) -> bool:
    """Write ``document`` as sorted-key JSON (one line when ``indent`` is ``None``); returns ``True`` on success."""
    return io.write_text_file(path, lines=json.dumps(document, indent=indent, sort_keys=True).splitlines(),
                              on_error=on_error)


def write_jsonl(path: str, *, records: Iterable[JsonObject], on_error: ErrorReporter) -> bool:
    """Write one JSON object per line; returns ``True`` on success."""
    return io.write_text_file(path, lines=(format_jsonl_record(record) for record in records), on_error=on_error)


def _prepend(first: str, rest: Iterable[str]) -> Iterator[str]:
    """Yield ``first`` followed by every element of ``rest``."""
    yield first
    yield from rest


__all__: Final[tuple[str, ...]] = (
    "format_csv_row",
    "format_jsonl_record",
    "iter_csv_records",
    "iter_jsonl_records",
    "iter_tsv_fields",
    "read_json",
    "write_csv",
    "write_json",
    "write_jsonl",
)
