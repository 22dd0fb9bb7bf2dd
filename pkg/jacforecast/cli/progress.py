"""Terminal progress bar for long-running pipeline loops (featurizing, training epochs, per-job forecasting)."""

import re
from dataclasses import dataclass, field
from types import TracebackType
from typing import Final, Self, TextIO, final

from .ansi import RESET

# Regular expression for ANSI CSI escape sequences.
_ANSI_RE: Final[re.Pattern[str]] = re.compile(r"\x1b\[[0-?]*[ -/]*[@-~]")

# Number of character cells used for the bar body.
_DEFAULT_WIDTH: Final[int] = 20


def _visible_width(text: str) -> int:
    """Return the visible character width of ``text``, excluding ANSI CSI escape sequences."""
    return len(_ANSI_RE.sub(repl="", string=text))


@final
@dataclass(kw_only=True, slots=True)
class ProgressBar:
    """
    Single-line progress bar for work with a known number of units.

    - Rewrites one line in place; never writes a newline until finalization.
    - Clamps progress to ``[0, total]``; a non-positive ``total`` renders as permanently 100%.
    - Renders nothing when ``visible`` is ``False`` (e.g., standard error is redirected or ``--quiet``).
    - Finalization is idempotent and clears the line, then writes ``final_message`` when non-empty.

    Attributes:
        total: Number of units representing 100% completion.
        text_stream: Text stream where output is written.
        label: Short label rendered before the bar (e.g., ``"epoch"``).
        visible: Whether output is rendered.
        final_message: Optional message written on finalization.
        percent_style: ANSI SGR prefix applied to the percent value (empty disables styling).
    """

    total: int
    text_stream: TextIO
    label: str = ""
    visible: bool = True
    final_message: str | None = None
    percent_style: str = ""
    _completed: int = field(default=0, init=False, repr=False)
    _finished: bool = field(default=False, init=False, repr=False)
    _last_width: int = field(default=0, init=False, repr=False)

    def __enter__(self) -> Self:
        """Return the bar for use in a context manager."""
        return self

    def __exit__(self, exc_type: type[BaseException] | None, exc_value: BaseException | None,
                 traceback: TracebackType | None) -> bool:
        """Finalize the bar on context exit."""
        self.finalize()
        return False

    def _fraction(self, completed: int) -> float:
        """Return the completed fraction in ``[0, 1]``."""
        if self.total <= 0:
            return 1.0

        return completed / self.total

    def _render(self, completed: int, status: str | None) -> str:
        """Return the rendered line: ``label [····    ]  42% completed/total status``."""
        fraction = self._fraction(completed)
        filled = int(fraction * _DEFAULT_WIDTH)
        percent = f"{self.percent_style}{int(fraction * 100):3d}%{RESET if self.percent_style else ''}"
        parts = [self.label] if self.label else []

        parts.append(f"[{'·' * filled}{' ' * (_DEFAULT_WIDTH - filled)}] {percent} {completed}/{max(self.total, 0)}")

        if status:
            parts.append(status)

        return " ".join(parts)

    def _write(self, line: str) -> None:
        """Overwrite the current line, padding to erase leftovers from the previous render."""
        width = _visible_width(line)

        self.text_stream.write("\r" + line + " " * max(0, self._last_width - width))
        self.text_stream.flush()
        self._last_width = width

    def advance(self, step: int = 1, *, status: str | None = None) -> None:
        """Increment progress by ``step`` units and redraw."""
        self.update(self._completed + step, status=status)

    def finalize(self) -> None:
        """Clear the bar and write the final message, if any (idempotent)."""
        if self._finished:
            return

        self._finished = True

        if self.visible:
            self.text_stream.write("\r" + " " * self._last_width + "\r")

        if self.final_message:
            self.text_stream.write(self.final_message + "\n")

        self.text_stream.flush()

    def update(self, completed: int, *, status: str | None = None) -> None:
        """Set progress to ``completed`` units and redraw."""
        if self._finished:
            return

        self._completed = max(0, min(self.total, completed)) if self.total > 0 else max(0, completed)

        if self.visible:
            self._write(self._render(self._completed, status))


__all__: Final[tuple[str, ...]] = ("ProgressBar",)
