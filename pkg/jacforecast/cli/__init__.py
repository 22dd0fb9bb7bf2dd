"""Public API for the command-line interface framework."""

from typing import Final

from .ansi import (
    ForegroundColors,
    RESET,
)
from .cli_program import CLIProgram, USAGE_EXIT_CODE
from .ini import (
    get_section_options,
    parse_bool,
    read_options,
)
from .io import (
    FileInfo,
    ensure_directory,
    read_text_files,
    write_text_file,
)
from .os_info import IS_WINDOWS
from .progress import ProgressBar
from .render import (
    style,
    style_when,
)
from .reporters import raises
from .terminal import (
    stderr_is_terminal,
    stdout_is_terminal,
)
from .text import (
    iter_numbered_lines,
    parse_float_list,
    parse_int_list,
    split_key_value,
    split_list,
    strip_trailing_newline,
)
from .types import (
    ErrorReporter,
    JsonObject,
)

__all__: Final[tuple[str, ...]] = (
    # ansi
    "ForegroundColors",
    "RESET",

    # base classes
    "CLIProgram",
    "USAGE_EXIT_CODE",

    # ini
    "get_section_options",
    "parse_bool",
    "read_options",

    # io
    "FileInfo",
    "ensure_directory",
    "read_text_files",
    "write_text_file",

    # os_info
    "IS_WINDOWS",

    # progress
    "ProgressBar",

    # render
    "style",
    "style_when",

    # reporters
    "raises",

    # terminal
    "stderr_is_terminal",
    "stdout_is_terminal",

    # text
    "iter_numbered_lines",
    "parse_float_list",
    "parse_int_list",
    "split_key_value",
    "split_list",
    "strip_trailing_newline",

    # types
    "ErrorReporter",
    "JsonObject",
)
