"""Coupled three-mode squeezed vacuum: Fock and Gaussian engines, squeezing
and tripartite-entanglement analyses."""

from .params import ParamError, Reduction, SqueezeParams, classify, make_params
from .fock import (
    ConsistencyError,
    CutoffExceeded,
    TruncatedFockState,
    amplitude,
    build_state,
    pair_cutoff,
    pair_distribution,
)
from .moments import (
    IntensityMoments,
    MomentTable,
    QuadratureForm,
    SqueezingReport,
    intensity_moments,
    number_combo_snl,
    number_combo_variance,
    quad_snl,
    quad_variance,
    second_moment_table,
    squeezing_db,
)
from .gaussian import (
    ModeTransform,
    covariance_matrix,
    intensity_variance_g,
    mode_transform,
    quad_variance_g,
)
from .analysis import (
    CriterionReport,
    Engine,
    EngineMismatch,
    MinResult,
    ScanSpec,
    criterion,
    min_squeezing_over_r1,
    scan,
    uncertainty_product,
)

__version__ = "0.1.0"
