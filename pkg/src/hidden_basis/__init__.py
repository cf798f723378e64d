"""Hidden orthonormal basis recovery by gradient iteration.

A library for encoding problems (ICA, orthogonal tensor decomposition,
spectral direction recovery, spherical Gaussian mixtures) as sums of scalar
contrasts over hidden directions, and recovering those directions from
exact or perturbed gradient access.
"""

from .applications import (
    GmmEstimate,
    OdecoTensor,
    SampleMatrix,
    WhitenTransform,
    dense_odeco_tensor,
    dense_tensor_apply,
    gmm_recover,
    gmm_recover_population,
    ica_oracle,
    matrix_oracle,
    spectral_oracle,
    tensor_oracle,
    whiten,
)
from .bef import (
    ExactBef,
    GradientOracle,
    bef_from_dict,
    eval_f,
    eval_grad,
    load_bef_json,
    perturb_oracle,
    progress_measure,
    to_oracle,
)
from .contrasts import (
    ContrastFunction,
    HTransform,
    RobustnessCertificate,
    certify_robustness,
    h_transform,
    make_contrast_monomial,
)
from .iteration import (
    ConvergenceReport,
    IterationTrace,
    adaptive_ascent_step,
    estimate_convergence_order,
    fixed_point_for_support,
    gi_loop,
    gi_step,
    run_to_convergence,
    sign_symmetric_residual,
)
from .recovery import (
    MatchReport,
    RecoveredBasis,
    RecoveryConfig,
    TheoreticalParams,
    default_config,
    find_basis_element,
    match_basis,
    robust_gi_recovery,
    theoretical_params,
)
from .reference import FiniteDiffSpec, enumerate_fixed_points, finite_diff_grad, grid_maxima_scan
from .sphere import (
    class_distance,
    exp_map,
    orthonormal_complement,
    project_coords,
    random_orthogonal,
    sample_tangent_sphere,
)

__version__ = "0.1.0"

__all__ = [
    "ContrastFunction",
    "HTransform",
    "RobustnessCertificate",
    "make_contrast_monomial",
    "h_transform",
    "certify_robustness",
    "ExactBef",
    "GradientOracle",
    "eval_f",
    "eval_grad",
    "to_oracle",
    "perturb_oracle",
    "progress_measure",
    "bef_from_dict",
    "load_bef_json",
    "exp_map",
    "sample_tangent_sphere",
    "project_coords",
    "orthonormal_complement",
    "class_distance",
    "random_orthogonal",
    "gi_step",
    "gi_loop",
    "run_to_convergence",
    "fixed_point_for_support",
    "estimate_convergence_order",
    "adaptive_ascent_step",
    "sign_symmetric_residual",
    "IterationTrace",
    "ConvergenceReport",
    "RecoveryConfig",
    "RecoveredBasis",
    "MatchReport",
    "TheoreticalParams",
    "default_config",
    "find_basis_element",
    "robust_gi_recovery",
    "theoretical_params",
    "match_basis",
    "SampleMatrix",
    "OdecoTensor",
    "GmmEstimate",
    "WhitenTransform",
    "whiten",
    "ica_oracle",
    "tensor_oracle",
    "dense_odeco_tensor",
    "dense_tensor_apply",
    "spectral_oracle",
    "matrix_oracle",
    "gmm_recover",
    "gmm_recover_population",
    "FiniteDiffSpec",
    "finite_diff_grad",
    "enumerate_fixed_points",
    "grid_maxima_scan",
]
