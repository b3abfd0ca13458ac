"""Bregman distances and their approximate symmetry under argument switching."""

from .bounds import (
    BoundBundle,
    RatioFunctionParams,
    bound_bundle,
    c_from_eta,
    eta_from_c,
    fg_ratio,
    fg_ratio_sup,
    fg_value,
    localization_constant,
    monotone_lipschitz_constant,
    refined_cp_bounds,
    second_derivative_bound,
    sqrt_example_constant,
    theoretical_cp,
)
from .core import (
    UNBOUNDED,
    BregmanValue,
    RayCoordinates,
    bregman,
    componentwise_bregman,
    dual_bregman_check,
    ray_reduce,
    switched_ratio,
    symmetric_bregman,
)
from .functionals import (
    Abs,
    CustomScalar,
    HilbertQuadratic,
    HuberStd,
    PPower,
    SqrtSmoothed,
    conjugate,
    evaluate,
    second_derivative,
    subgradient,
)
from .search import (
    DomainSpec,
    RatioWitness,
    SymmetryReport,
    adversarial_refine,
    counterexample_abs,
    counterexample_huber,
    sample_sup_ratio,
    verify_theorem_main3,
)

__version__ = "0.1.0"
