"""Python interface to the romsram C++ core."""

from ._romsram import *  # noqa: F401,F403
from ._romsram import __doc__  # noqa: F401

CASES = ("00", "01", "10", "11")
