"""Numerical verification of Borell-Brunn-Minkowski type inequalities."""

from .bodies import (
    DirectionGrid,
    Polygon2D,
    SupportBody,
    mc_volume,
    membership,
    p_combination,
    polygon_area,
    support_of_polytope,
    wulff_polygon,
)
from .errors import (
    BorellLabError,
    ContractError,
    DegeneracyError,
    DimensionError,
    DomainError,
    InputError,
    UnsupportedCombinerError,
    ValidationError,
    ZeroFunctionError,
)
from .funcgrid import GridFunction, alpha_concavity_check, integrate, superlevel_threshold_values
from .inequalities import (
    HypothesisSampler,
    borell_conclusion_check,
    borell_hypothesis_check,
    conclusion_exponent,
    sup_convolution_bbl,
    sup_convolution_nonlinear,
    tensorize_reduce,
)
from .means import holder_check, mean, mean_vector
from .measures import (
    DensityMeasure,
    equiv_pipeline_check,
    inclusion_chain_check,
    levelset_profile,
    lp_bm_check,
    measure_of_body,
)
from .report import CheckReport
from .transport import (
    CoordinateMap,
    Combiner,
    MeanCombiner,
    MinkowskiCombiner,
    monotone_transport,
    normalize_triple,
    pushforward_residual,
    transport_certificate,
)

__version__ = "0.1.0"
