"""Affine invariant measures on polynomial immersions."""

from .indexing import (
    IndexSet,
    graded_monomials,
    homogeneous_dimension,
    index_set,
    kappa_sequence,
)
from .polynomials import (
    Jet,
    Polynomial,
    PolynomialMap,
    directional_column,
    graph_embedding,
    jet,
    map_from_text,
    map_to_text,
    model_embedding,
    partial_derivative,
)
from .curvature import (
    CurvatureTensor,
    assemble_tensor,
    mode_transform,
    sl_objective,
    tensor_entry,
)
from .minimize import (
    DensityResult,
    OptimizerConfig,
    affine_density,
    bilinear_density,
    bilinear_density_exact,
    detnorm_check,
    minimize_over_sl,
    minor_sum,
)
from .convexgeom import (
    ConvexBody,
    PointSet,
    body_volume,
    max_det_tuple,
    sandwich_certify,
)
from .coresets import (
    FunctionSystem,
    WeightedSampleSet,
    core_subset,
    derivative_core,
    polynomial_system,
    uniform_grid,
    unit_sphere_basis,
    wedge_density,
)
from .frames import (
    Frame,
    PolynomialCollection,
    admissible_collection,
    bombieri_inner,
    build_embedding,
    critical_check,
    harmonic_untf,
)
from .harness import (
    PullbackMeasure,
    mu_of_body,
    oberlin_experiment,
    pullback_measure,
    simplex_functional,
    supercritical_blowup,
)

__version__ = "0.1.0"
