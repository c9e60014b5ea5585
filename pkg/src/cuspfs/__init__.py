"""Function spaces and parabolic solves on manifolds with cuspidal points.

The library builds model cusps from profile characteristics, desingularizes
them by a conformal change of metric onto a cylinder, and provides weighted
Sobolev norms, localization operators, a weighted maximal-regularity heat
solver, and Kondratiev norms on planar sectors, all at desk scale on chart
grids.  `cuspfs.cli` exposes the batch check runner.
"""

from .characteristics import ArclengthMap, CuspCharacteristic, arclength_map, make_characteristic, validate_characteristic
from .cusps import (
    CuspBase,
    CuspGeometry,
    GluedGeometry,
    ModelCusp,
    build_model_cusp,
    glue_cusp,
    metric_equivalence_ratio,
    singularity_bound,
    smoothstep,
)
from .geometry import (
    GridMap,
    MetricDegeneracyError,
    MetricField,
    ScalarField,
    TensorField,
    bundle_norm,
    christoffel,
    complete_contraction,
    conformal_rescale,
    contract,
    covariant_derivative,
    field_to_csv,
    integrate,
    pullback,
    scalar_field,
    tensor_product,
)
from .grid import ChartGrid
from .kondratiev import (
    ConicalDomain,
    distance_norm,
    kondratiev_equivalence_report,
    kondratiev_norm,
    make_sector_corpus,
)
from .localization import (
    LocalizationSystem,
    UrAtlas,
    build_cylinder_atlas,
    build_localization,
    coretract,
    localized_norm,
    retract,
)
from .parabolic import (
    DiffusionProblem,
    NumericalFailure,
    Trajectory,
    desingularize_operator,
    flat_torus_geometry,
    identity_diffusion,
    laplace_beltrami,
    manufactured_solution,
    maximal_regularity_functional,
    solve_ivp,
)
from .weighted import (
    CorrectionTensors,
    WeightedNormSpec,
    commutator_check,
    correction_families,
    embedding_check,
    make_corpus,
    multiplication_check,
    norm_equivalence_report,
    s_tensor,
    weight_map,
    weighted_sobolev_norm,
)

__version__ = "0.1.0"
