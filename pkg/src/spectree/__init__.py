"""Spectral analysis of perturbed Laplacians on regular rooted k-ary trees.

The pipeline: build a truncated tree, decompose its function space into
invariant blocks, evaluate the free resolvent in closed form through that
decomposition, sandwich it by a decaying perturbation, and count the
parameters where the sandwiched family hits ``-1`` with an operator-valued
argument principle.
"""
from .birman_schwinger import (
    BSFactory,
    BSOperator,
    GammaBeta,
    HOL_COMPANION_FACTOR,
    bs_operator,
    gamma_beta,
    hol_split,
    phase_ratio,
    polar_factors,
    support_vertices,
)
from .charval import (
    ContourSpec,
    IndexReport,
    ScanReport,
    SpectrumResult,
    absence_scan,
    contour_index,
    resonance_indicator,
    riesz_multiplicity,
    spectrum,
)
from .decomposition import (
    SphericalBasis,
    build_spherical_basis,
    projector,
    verify_jacobi_form,
)
from .errors import (
    AssumptionViolated,
    BranchFailure,
    CapacityExceeded,
    IndexOutOfRange,
    InvalidParameter,
    NonConvergent,
    NotIsolated,
    NumericalRankFailure,
    OnSpectrum,
    OutOfDisk,
    RootHasNoParent,
    SingularOnContour,
    SpectreeError,
    TruncationWarning,
)
from .operators import (
    PotentialSpec,
    adjacency,
    degree_terms,
    delta_floor,
    free_operator,
    laplacian,
    lowering,
    m_tilde,
    perturbed_operator,
    potential_matrix,
    raising,
    theta,
    weights,
)
from .resolvent import (
    KERNEL_PREFACTOR,
    KernelMatrix,
    ResolventKernel,
    SpectralPoint,
    depth_for_tail,
    direct_resolvent_block,
    disk_radius,
    fourier_coefficient,
    from_lambda,
    from_z,
    sine_projected_coefficient,
    spectral_point_from_json,
    spectral_point_to_json,
    t_minus,
    t_plus,
    tail_bound,
    weighted_resolvent_kernel,
)
from .tree import TreeGraph, build_tree, children, parent, vertex_depth

__version__ = "0.1.0"
