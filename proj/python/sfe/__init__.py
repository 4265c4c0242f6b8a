"""Python access to the sfe field solver, stability, dynamics and agent simulation."""

from ._sfe import *  # noqa: F401,F403
from ._sfe import __doc__  # noqa: F401
