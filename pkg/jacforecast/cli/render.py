"""Utilities for styling diagnostic text with ANSI escape sequences."""

from typing import Final

from .ansi import RESET


def style(text: str, *, ansi_style: str) -> str:
    """Return ``text`` rendered with the given ANSI style, reset afterward."""
    return f"{ansi_style}{text}{RESET}"


def style_when(text: str, *, ansi_style: str, enabled: bool) -> str:
    """Return ``text`` styled when ``enabled`` is ``True``, otherwise unchanged."""
    return style(text, ansi_style=ansi_style) if enabled else text


__all__: Final[tuple[str, ...]] = (
    "style",
    "style_when",
)
