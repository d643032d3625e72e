"""Numerical laboratory for eigenvalue metrics, limit maps and torus bouquets
of surface-group representations into PSL(n, R)."""

__version__ = "0.1.0"

from .errors import HitchinLabError
from .linalg import (
    EigenData,
    Flag,
    Subspace,
    WeylVector,
    eigendecompose,
    exterior_power,
    flag_distance,
    grassmann_distance,
    hilbert_length,
    intersect,
    intersection_derivative,
    jordan_projection,
    plucker,
    rp_distance,
    simple_root,
)
from .words import Presentation, conjugacy_representatives, cyclic_reduce, enumerate_reduced
from .reps import (
    Representation,
    certify,
    evaluate,
    fuchsian_octagon,
    load_representation,
    save_representation,
    sym_power,
    twist_deform,
)
from .limits import (
    BoundarySample,
    BouquetSample,
    boundary_atlas,
    bouquet_point,
    hyperconvexity_survey,
    limit_flag,
    sliding_map,
    tangent_check,
)
from .metrics import (
    MetricEstimate,
    bi_coupling_bounds,
    bouquet_bounds,
    coupling_exponent_k,
    flag_coupling_exponent,
    hilbert_properness_scan,
    stretch_metric,
)
from .holder import (
    HolderEnvelopeRegressor,
    PairCloud,
    build_pair_cloud,
    coupling_experiment,
    estimate_exponent,
)
from .prox import (
    ProximalityReport,
    comparability,
    eigenbasis_metric,
    proximality_profile,
    refinement_experiment,
)
