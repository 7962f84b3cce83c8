"""Weighted sup norms, tail functionals and decay-rate classification on sampled exhausted spaces."""
from __future__ import annotations

from .errors import (
    ClassificationError,
    InputError,
    InvariantViolation,
    TailrateError,
)
from .kernels import BACKEND
from .multiend import (
    End,
    EndDecomposition,
    aniso_asymptotic,
    aniso_sharp_norm,
    block_weight,
    end_limits,
    gluing_check,
    project_vanishing,
)
from .norms import (
    FunctionSample,
    Kernel,
    ShellPolicy,
    asymptotic_constant,
    certificate,
    fixed_norm,
    luxemburg_norm,
    moreau_envelope,
    patch_check,
    pullback_check,
    schur_test,
    sharp_norm,
    tail_ladder,
    truncate_to_core,
    weighted_lq_norm,
)
from .rates import classify_rate, p_profile
from .space import (
    ExhaustedSpace,
    Graph,
    build_exhaustion_from_membership,
    detect_graph_ends,
    fit_coarse_affine,
    fit_volume_growth,
)
from .weights import Weight, YoungFunction, parse_weight, parse_young

__version__ = "0.1.0"
