"""Subcommand implementations of the ``jacfc`` pipeline."""

from typing import Final

__all__: Final[tuple[str, ...]] = ()
