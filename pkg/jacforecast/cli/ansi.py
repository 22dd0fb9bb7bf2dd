"""ANSI SGR escape sequence constants used for diagnostics and progress output."""

from typing import Final, final

# Control Sequence Introducer (CSI).
_CSI: Final[str] = "\x1b["

#: Reset all text attributes and colors.
RESET: Final[str] = f"{_CSI}0m"


@final
class ForegroundColors:
    """Constants for the foreground colors used by the pipeline commands."""
    BRIGHT_CYAN: Final[str] = f"{_CSI}96m"
    BRIGHT_RED: Final[str] = f"{_CSI}91m"


__all__: Final[tuple[str, ...]] = (
    "ForegroundColors",
    "RESET",
)
