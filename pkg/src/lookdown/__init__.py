"""Simulator and exact analytics for the MRCA process of an evolving coalescent.

The package has three legs that check each other:

* ``engine``     -- finite-level look-down graph simulation (event streams,
                    coalescent and fixation curves, the MRCA point process).
* ``particles``  -- the autonomous particle system whose trajectories are the
                    fixation curves, with its exact stationary sampler.
* ``laws`` / ``zlaw`` -- closed-form distributions (L, (L, I), the K chain,
                    pi_Lambda, the law of Z, holding-time sums, T_c).

``mutations`` overlays neutral mutations and the substitution process,
``stats`` is the goodness-of-fit harness, ``verify`` runs the acceptance
suite, and ``cli`` is the command-line front door.
"""

from . import engine, laws, mutations, particles, stats, tables, zlaw
from .tables import INF, PmfTable

__version__ = "0.1.0"

__all__ = ["engine", "particles", "laws", "zlaw", "mutations", "stats",
           "tables", "INF", "PmfTable", "__version__"]
