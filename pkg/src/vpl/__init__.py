"""Numerical laboratory for twisted electron wave packets in static fields."""

from .numerics import (
    QuadratureConfig,
    NonConvergenceError,
    InvalidPhaseError,
    TailTruncationWarning,
    integrate_adaptive,
    integrate_adaptive_many,
    integrate_pv_kernel,
    integrate_pv_kernel_many,
    integrate_fresnel_tail,
)
from .lg_core import (
    PacketParams,
    SpacetimePoint,
    psi0,
    psi0_grid,
    phi0,
    psi_free,
    psi_free_grid,
    q_factor,
)
from .delta_pt import DeltaPerturbation, TooCloseToSourceError, psi1_delta, psi1_delta_batch
from .xfield_pt import (
    XFieldPerturbation,
    profile_f,
    profile_g,
    ghat,
    xi_closed_form,
    xi_double_sum,
    i_l_kernel,
    psi1_xfield,
    psi1_xfield_batch,
)
from .homogeneous import (
    HomogeneousField,
    vector_potential,
    displacement,
    psi_homogeneous,
    psi_homogeneous_grid,
)
from .oracles import (
    OracleBudget,
    greens_function,
    momentum_propagate,
    factorized_pt1_oracle,
)
from .field_analysis import (
    GridSpec,
    FieldMap,
    VortexSet,
    VortexZero,
    evaluate_map,
    make_evaluator,
    nodal_lines,
    find_zeros,
    winding_number,
    winding_number_full,
    check_symmetry,
    count_ring_maxima,
    to_csv,
    from_csv,
    to_binary,
    from_binary,
    vortex_set_to_json,
    vortex_set_from_json,
)

__version__ = "0.1.0"
