"""Fair allocation of indivisible goods under monotone submodular valuations.

The package rounds fractional allocations by cancelling support cycles under
the multilinear extension (no agent's extension value decreases, the support
becomes a forest) and rooting the leftover trees, and builds three solvers on
top of that primitive: max-min (Santa Claus), Nash social welfare, and
maximin share.  Brute-force oracles make every guarantee checkable on small
instances.
"""

from .errors import (CapacityError, DegenerateError, FairroundError,
                     InfeasibleError, InputError, NumericError)
from .instances import GenConfig, Instance, generate, instance_digest, load, save
from .mms import MmsParams, solve_mms
from .multilinear import EXACT, Estimate, Exact, Sampled
from .nsw import NswParams, solve_nsw
from .report import RunReport
from .rounding import (FractionalAllocation, IntegralAllocation,
                       cancel_all_cycles, nonuniform_pipage, pipage_round,
                       randomized_round)
from .santa import SantaParams, cg_feasibility, solve_santa

__all__ = [
    "CapacityError", "DegenerateError", "FairroundError", "InfeasibleError",
    "InputError", "NumericError",
    "GenConfig", "Instance", "generate", "instance_digest", "load", "save",
    "EXACT", "Estimate", "Exact", "Sampled",
    "FractionalAllocation", "IntegralAllocation",
    "cancel_all_cycles", "nonuniform_pipage", "pipage_round", "randomized_round",
    "MmsParams", "NswParams", "SantaParams", "RunReport",
    "cg_feasibility", "solve_mms", "solve_nsw", "solve_santa",
]
