"""Numerical verification of equivariant functions on the upper half-plane
and the vector-valued modular forms of weight -1 built from them.

The main entry points are re-exported here; see the submodules for the rest.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .equivariant import (
    EquivariantCandidate,
    VmfCandidate,
    equivariance_residual,
    ratio_of_vmf,
    reconstruct,
    vmf_residual,
    weight_shift,
)
from .legendre import PullbackSampler, covering_data, deck_check, loop_monodromy
from .moebius import GAMMA2_A, GAMMA2_B, INF, GroupWord, Mat2, Rep, mobius_apply, slash
from .numerics import Jet, working_precision
from .ode import FundamentalSystem, OdeCoefficients, PathPolyline, monodromy, transport
from .qforms import eval_form, form_sampler
from .report import Report
from .sampler import FunctionSampler, from_jet_function
from .schwarz import bol_residual, schwarzian
from .suite import run_suite

__all__ = [
    "EquivariantCandidate", "FunctionSampler", "FundamentalSystem", "GAMMA2_A", "GAMMA2_B",
    "GroupWord", "INF", "Jet", "Mat2", "OdeCoefficients", "PathPolyline", "PullbackSampler",
    "Rep", "Report", "RunConfig", "VmfCandidate", "bol_residual", "covering_data", "deck_check",
    "equivariance_residual", "eval_form", "form_sampler", "from_jet_function", "loop_monodromy",
    "mobius_apply", "monodromy", "ratio_of_vmf", "reconstruct", "run_suite", "schwarzian",
    "slash", "transport", "vmf_residual", "weight_shift", "working_precision",
]
