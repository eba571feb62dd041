"""Exact count statistics for two-source Fock-state interferometers.

Three independent routes to the same detection probabilities (generating
function oracle, phase-space quadrature, closed-form sums), preset
experiments reproducing NOON-state formation and probe-induced loss of
fringes, and a small CLI.
"""

__version__ = "0.1.0"

from .engine import *  # noqa: E402,F401,F403
from .network import *  # noqa: E402,F401,F403
from .numerics import *  # noqa: E402,F401,F403
from .scenarios import *  # noqa: E402,F401,F403
from . import engine, network, numerics, scenarios  # noqa: E402

__all__ = [*engine.__all__, *network.__all__, *numerics.__all__, *scenarios.__all__, "__version__"]
