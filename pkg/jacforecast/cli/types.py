"""Type aliases for the CLI framework."""

from collections.abc import Callable
from typing import Any, Final

#: Callback for reporting error messages.
type ErrorReporter = Callable[[str], None]

#: A decoded JSON object represented as a dictionary.
type JsonObject = dict[str, Any]

__all__: Final[tuple[str, ...]] = (
    "ErrorReporter",
    "JsonObject",
)
