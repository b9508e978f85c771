"""Numerical laboratory for the Rademacher maximal function on dyadic trees."""

from .space import NormedSpace, parse_space
from .dyadic import Cube, DyadicTree, ShiftedSystem, chain, interleave, deinterleave, maximal_cubes
from .rademacher import (
    EstimatorConfig,
    RadEstimate,
    Selection,
    rademacher_norm,
    rbound_lower,
    rbound_oracle,
    rbound_upper,
)
from .stepfn import (
    StepFunction,
    average,
    averaging_operator,
    bmo_norm,
    h1_norm,
    haar_decompose,
    haar_reconstruct,
    lp_norm,
    weak_l1,
)
from .maximal import MaxField, dyadic_maximal, paraproduct, rmf, square_function
from .decomp import atomic_decompose, calderon_zygmund, gundy
from .weights import ap_characteristic, fair_share_ratio, self_improvement_scan

__version__ = "0.1.0"
