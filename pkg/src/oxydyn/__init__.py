"""oxydyn: oxygen-phytoplankton-zooplankton dynamics toolkit.

Equilibrium and stability analysis, Hopf/saddle-node thresholds and
bifurcation diagrams, slow-fast (critical manifold) analysis, 1D
reaction-diffusion simulation, Turing instability analysis, and
OMZ/anoxia regime diagnostics, with a batch CLI front end.
"""

__version__ = "0.1.0"

from .model import ModelParams, State, Jacobian3, eval_rhs, eval_jacobian, \
    eval_fast_jacobian
from .errors import OxydynError

__all__ = [
    "__version__",
    "ModelParams",
    "State",
    "Jacobian3",
    "eval_rhs",
    "eval_jacobian",
    "eval_fast_jacobian",
    "OxydynError",
]
