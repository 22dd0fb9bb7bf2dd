"""Runtime distribution metadata for jac-forecast."""

from importlib.metadata import PackageNotFoundError, version
from typing import Final


def _get_version() -> str:
    """Return the installed distribution version for jac-forecast."""
    try:
        return version("jac-forecast")
    except PackageNotFoundError:
        return "0+unknown"


__version__: Final[str] = _get_version()
