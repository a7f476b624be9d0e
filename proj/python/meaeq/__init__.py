"""Python bindings for the meaeq extraction toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import MeaeqError


def error_code(err: MeaeqError) -> str:
    """Name of the error code carried by a MeaeqError."""
    return getattr(err, "code", "Unknown")


__version__ = "0.1.0"
