"""Boundary limits of maps on sampled John domains, built on dyadic Whitney cubes."""

from .dyadic import CubeSystem, NetParams, build_cube_system, build_cubes, build_nets, locate, validate_net_params
from .errors import GeometryError
from .generators import make_domain
from .john import (
    JohnProfile,
    check_uniform,
    construct_john_curve,
    quasihyperbolic_distance,
    verify_john_curve,
)
from .maps import MappingModel, make_map
from .metric import (
    AhlforsProfile,
    CurveModel,
    DomainModel,
    PointCloudSpace,
    dist_to_boundary,
    estimate_ahlfors,
    estimate_doubling,
    load_domain,
    reparameterize_by_arclength,
    save_domain,
)
from .pipeline import RunConfig, run_pipeline
from .trace import (
    GaugeFunction,
    boundary_limit,
    compute_shadows,
    discrete_length,
    estimate_class_constant,
    exceptional_content,
    gauge_integral,
    shadow_level_counts,
    shadow_measure_sums,
    uniqueness_check,
)
from .whitney import WhitneyParams, build_whitney, cube_chain, overlap_count, validate_whitney_params, whitney_decomposition

__version__ = "0.1.0"
