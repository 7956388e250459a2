"""Python bindings for the nextpp marked temporal point process library."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
