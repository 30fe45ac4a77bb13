"""Birth/mass-death chain: closed-form transitions, bounds, prediction and estimation."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
