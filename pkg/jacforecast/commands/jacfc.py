"""Implements the ``jacfc`` entry point that dispatches to the pipeline subcommands."""

import sys
from collections.abc import Callable, Mapping, Sequence
from types import MappingProxyType
from typing import Final

from jacforecast import __version__
from jacforecast.cli import USAGE_EXIT_CODE, CLIProgram
from .evaluate import Evaluate
from .featurize import Featurize
from .forecast_ts import ForecastTs
from .generate import Generate
from .predict import Predict
from .report_series import ReportSeries
from .serialize import Serialize
from .train import Train

#: Subcommand names mapped to their program factories, in pipeline order.
SUBCOMMANDS: Final[Mapping[str, Callable[[], CLIProgram]]] = MappingProxyType({
    "generate": Generate,
    "featurize": Featurize,
    "serialize": Serialize,
    "train": Train,
    "predict": Predict,
    "forecast-ts": ForecastTs,
    "evaluate": Evaluate,
    "report-series": ReportSeries,
})

# Usage text printed for a missing or unknown subcommand and for --help.
_USAGE: Final[str] = (
    "usage: jacfc SUBCOMMAND [OPTIONS]\n\n"
    "job application count forecasting pipeline\n\n"
    "subcommands:\n"
    + "".join(f"  {name}\n" for name in SUBCOMMANDS)
    + "\nrun 'jacfc SUBCOMMAND --help' for the options of a subcommand"
)


def main() -> int:
    """Run ``jacfc`` with the process arguments and return the exit code."""
    return run(sys.argv[1:])


def run(argv: Sequence[str]) -> int:
    """
    Dispatch ``argv`` to a subcommand and return its exit status.

    - A missing or unknown subcommand prints the usage text and returns ``2``.
    - ``SystemExit`` raised by a subcommand is returned as its integer status.
    """
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            print(_USAGE)
            return 0

        if argv and argv[0] == "--version":
            print(f"jacfc {__version__}")
            return 0

        if argv:
            print(f"jacfc: error: unknown subcommand: {argv[0]!r}", file=sys.stderr)

        print(_USAGE, file=sys.stderr)
        return USAGE_EXIT_CODE

    try:
        return SUBCOMMANDS[argv[0]]().run_program(argv[1:])
    except SystemExit as exit_request:
        return _exit_status(exit_request.code)


def _exit_status(code: int | str | None) -> int:
    """Return the integer status of a ``SystemExit`` code (messages map to ``1``)."""
    if code is None:
        return 0

    return code if isinstance(code, int) else 1


if __name__ == "__main__":
    raise SystemExit(main())
