"""Conformal retrieval certification and lookback-ratio factuality scoring."""

from ragcert._core import *  # noqa: F401,F403
from ragcert._core import __version__  # noqa: F401
