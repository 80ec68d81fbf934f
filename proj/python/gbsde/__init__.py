"""Nonlinear evaluations and BSDEs on a recombining binomial lattice."""

from ._gbsde import *  # noqa: F401,F403
from ._gbsde import __version__  # noqa: F401
