"""Utilities for parsing, splitting, and normalizing text from files and option values."""

from collections.abc import Iterable, Iterator
from typing import Final


def iter_numbered_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    """
    Yield ``(line_number, line)`` pairs with one trailing newline (and carriage return) removed.

    - Line numbers are 1-based.
    - Blank lines are yielded; callers decide whether they are legal.
    """
    for line_number, line in enumerate(lines, start=1):
        yield line_number, strip_trailing_newline(line).removesuffix("\r")


def parse_float_list(text: str, *, separator: str = ",") -> tuple[float, ...]:
    """Return floats parsed from ``text`` split on ``separator``; raises ``ValueError`` on bad entries."""
    return tuple(float(entry) for entry in split_list(text, separator=separator))


def parse_int_list(text: str, *, separator: str = ",") -> tuple[int, ...]:
    """Return integers parsed from ``text`` split on ``separator``; raises ``ValueError`` on bad entries."""
    return tuple(int(entry) for entry in split_list(text, separator=separator))


def split_key_value(text: str) -> tuple[str, str]:
    """
    Split ``KEY=VALUE`` into a normalized key and a stripped value.

    - The key is lowercased with dashes replaced by underscores.
    - Raises ``ValueError`` when no ``=`` is present or the key is empty.
    """
    key, separator, value = text.partition("=")
    key = key.strip().lower().replace("-", "_")

    if not separator or not key:
        raise ValueError(f"expected KEY=VALUE: {text!r}")

    return key, value.strip()


def split_list(text: str, *, separator: str = ",") -> list[str]:
    """Return values split on a separator, stripped, ignoring empty entries."""
    return [entry for part in text.split(separator) if (entry := part.strip())]


def strip_trailing_newline(line: str) -> str:
    """Remove one trailing newline, if present."""
    return line.removesuffix("\n")


__all__: Final[tuple[str, ...]] = (
    "iter_numbered_lines",
    "parse_float_list",
    "parse_int_list",
    "split_key_value",
    "split_list",
    "strip_trailing_newline",
)
