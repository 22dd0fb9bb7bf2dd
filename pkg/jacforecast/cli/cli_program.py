"""Abstract base class for command-line programs with a standard parse-configure-execute lifecycle."""

import argparse
import json
import sys
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any, ClassVar, Final, final

from jacforecast import __version__
from . import ini, text
from .ansi import ForegroundColors
from .os_info import IS_WINDOWS
from .render import style_when
from .terminal import stderr_is_terminal, stdout_is_terminal
from .types import JsonObject

# Unix exit codes for errors, usage errors, and signal termination.
_DEFAULT_ERROR_EXIT_CODE: Final[int] = 1
_USAGE_EXIT_CODE: Final[int] = 2
_KEYBOARD_INTERRUPT_EXIT_CODE: Final[int] = 130
_SIGPIPE_EXIT_CODE: Final[int] = 141


class CLIProgram(ABC):
    """
    Base class for command-line programs with a standard parse-configure-execute lifecycle.

    Attributes:
        args: Parsed command-line arguments.
        error_exit_code: Exit code when an error occurs (default: ``1``).
        has_errors: Whether the program has encountered errors.
        name: Name of the program.
        print_color: Whether color output is enabled for diagnostics.
        summary: Counters and paths reported on the JSON summary line after a successful run.
        version: Program version.
    """

    #: Exception types that are reported as diagnostics and mapped to ``error_exit_code``.
    handled_errors: ClassVar[tuple[type[Exception], ...]] = ()

    def __init__(self, *, name: str, error_exit_code: int = _DEFAULT_ERROR_EXIT_CODE) -> None:
        """Initialize a new instance."""
        self.args: argparse.Namespace | None = None
        self.error_exit_code: Final[int] = error_exit_code
        self.has_errors: bool = False
        self.name: Final[str] = name
        self.print_color: bool = False
        self.summary: JsonObject = {}
        self.version: Final[str] = __version__

    def _apply_configuration(self, parser: argparse.ArgumentParser, argv: Sequence[str] | None) -> None:
        """
        Reparse arguments after installing option defaults from ``--config`` and ``--set``.

        - Precedence: explicit flag > ``--set`` > config file section > built-in default.
        - Unknown keys and unconvertible values are usage errors.
        """
        overrides: dict[str, str] = {}

        if getattr(self.args, "config", None):
            if not ini.read_options(self.args.config, on_error=self.print_error_and_exit):
                return

            overrides.update(ini.get_section_options(self.name.split()[-1]))

        for assignment in getattr(self.args, "set", None) or ():
            try:
                key, value = text.split_key_value(assignment)
            except ValueError as error:
                parser.error(str(error))

            overrides[key] = value

        if not overrides:
            return

        actions = {action.dest: action for action in parser._actions}  # No public accessor for registered actions.
        defaults: dict[str, Any] = {}

        for key, value in overrides.items():
            action = actions.get(key)

            if action is None or key in ("config", "set", "help", "version") or action.nargs not in (None, 0):
                parser.error(f"unknown configuration key: {key!r}")

            defaults[key] = self._convert_option_value(parser, action, value)

        parser.set_defaults(**defaults)
        self.args = parser.parse_args(argv)

    @staticmethod
    def _convert_option_value(parser: argparse.ArgumentParser, action: argparse.Action, value: str) -> Any:
        """Convert a configuration string to the value type of ``action``, or raise a usage error."""
        if action.nargs == 0:
            flag = ini.parse_bool(value)

            if flag is None:
                parser.error(f"invalid boolean for {action.dest!r}: {value!r}")

            return flag if action.const is True else not flag

        try:
            converted = action.type(value) if callable(action.type) else value
        except (TypeError, ValueError, argparse.ArgumentTypeError):
            parser.error(f"invalid value for {action.dest!r}: {value!r}")

        if action.choices is not None and converted not in action.choices:
            parser.error(f"invalid choice for {action.dest!r}: {value!r}")

        return converted

    def _parse_arguments(self, argv: Sequence[str] | None) -> None:
        """Parse command-line arguments, then apply configuration defaults."""
        parser = self.build_arguments()

        self.args = parser.parse_args(argv)
        self._apply_configuration(parser, argv)

    def _prepare_runtime_state(self) -> None:
        """Prepare the runtime state by running the option lifecycle hooks in order."""
        self.check_option_dependencies()
        self.validate_option_ranges()
        self.normalize_options()
        self.initialize_runtime_state()

    @abstractmethod
    def build_arguments(self) -> argparse.ArgumentParser:
        """Build and return an argument parser."""
        ...

    def check_option_dependencies(self) -> None:
        """Enforce relationships and mutual constraints between command-line options."""
        pass  # Optional hook; no action by default.

    @abstractmethod
    def execute(self) -> None:
        """Execute the command using the prepared runtime state."""
        ...

    def exit_if_errors(self) -> None:
        """Raise ``SystemExit(error_exit_code)`` if the error flag is set."""
        if self.has_errors:
            raise SystemExit(self.error_exit_code)

    def initialize_runtime_state(self) -> None:
        """Initialize internal state derived from parsed options."""
        # Disable color if standard error is redirected.
        self.print_color = getattr(self.args, "color", "off") == "on" and stderr_is_terminal()

    def normalize_options(self) -> None:
        """Apply derived defaults and adjust option values for consistent internal use."""
        pass  # Optional hook; no action by default.

    @final
    def print_error(self, error_message: str) -> None:
        """Set the error flag and print to standard error unless ``args.no_messages`` is enabled."""
        self.has_errors = True

        # --no-messages is a Unix convention to suppress per-record diagnostics but still set the error flag.
        if not getattr(self.args, "no_messages", False):
            print(f"{self.render_prefix()}: error: {error_message}", file=sys.stderr)

    @final
    def print_error_and_exit(self, error_message: str) -> None:
        """Print to standard error and raise ``SystemExit`` immediately."""
        print(f"{self.render_prefix()}: error: {error_message}", file=sys.stderr)
        raise SystemExit(self.error_exit_code)

    @final
    def print_message(self, message: str) -> None:
        """Print an informational message to standard error when ``args.verbose`` is enabled."""
        if getattr(self.args, "verbose", False):
            print(f"{self.render_prefix()}: {message}", file=sys.stderr)

    @final
    def print_summary(self) -> None:
        """Print the one-line JSON summary of a successful run to standard output."""
        summary = {"command": self.name, "status": "ok", **self.summary}

        print(json.dumps(summary, sort_keys=True))

    @final
    def render_prefix(self) -> str:
        """Return the program name, styled for diagnostics when color is enabled."""
        return style_when(self.name, ansi_style=ForegroundColors.BRIGHT_RED, enabled=self.print_color)

    @final
    def run_program(self, argv: Sequence[str] | None = None) -> int:
        """
        Run the full program lifecycle and normalize process termination.

        - Configures the environment.
        - Parses ``argv`` (default: ``sys.argv[1:]``), applies ``--config``/``--set`` defaults, and prepares runtime
          state by running the option lifecycle hooks in order:

          - ``check_option_dependencies()``
          - ``validate_option_ranges()``
          - ``normalize_options()``
          - ``initialize_runtime_state()``
        - Executes the command and prints the JSON summary line.
        - Reports ``handled_errors`` as diagnostics.
        - Returns ``0`` on success.
        - Raises ``SystemExit`` with a non-zero code on failure (``2`` for usage errors).
        """
        try:
            # Enable ANSI color support on Windows (via colorama).
            if IS_WINDOWS:
                from colorama import just_fix_windows_console

                just_fix_windows_console()
            else:
                # Prevent broken pipe errors (not supported on Windows).
                from signal import SIG_DFL, SIGPIPE, signal

                signal(SIGPIPE, SIG_DFL)

            self._parse_arguments(argv)
            self._prepare_runtime_state()
            self.execute()
            self.exit_if_errors()
            self.print_summary()
        except BrokenPipeError:
            raise SystemExit(self.error_exit_code if IS_WINDOWS else _SIGPIPE_EXIT_CODE)
        except KeyboardInterrupt:
            # Add a newline after Ctrl-C if standard output is attached to a terminal.
            if stdout_is_terminal():
                print()

            raise SystemExit(self.error_exit_code if IS_WINDOWS else _KEYBOARD_INTERRUPT_EXIT_CODE)
        except Exception as error:
            if isinstance(error, self.handled_errors):
                self.print_error_and_exit(str(error))

            if isinstance(error, OSError):
                # Normalize unexpected OS errors to a clean exit code.
                self.print_error_and_exit(f"{error.strerror or error}")

            raise

        return 0

    def validate_option_ranges(self) -> None:
        """Validate that option values fall within their allowed numeric or logical ranges."""
        pass  # Optional hook; no action by default.


#: Exit code for usage errors (unknown subcommand, invalid flags).
USAGE_EXIT_CODE: Final[int] = _USAGE_EXIT_CODE

__all__: Final[tuple[str, ...]] = (
    "CLIProgram",
    "USAGE_EXIT_CODE",
)
