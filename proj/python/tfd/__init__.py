"""Tempered fractional-order dengue model: simulation, optimal control, calibration and sensitivity."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "1.0.0"
