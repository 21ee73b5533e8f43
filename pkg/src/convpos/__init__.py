"""Extremal positions of convex bodies.

Positive John positions and their rotation families, saddle-John and
maximal-volume positions, and maximal intersection positions, each with a
numerical certificate.
"""

from .bodies import (
    AffineImage, Body, Ellipsoid, HPolytope, LpBall, VPolytope, apply_affine, ball, contains, cross_polytope, cube,
    gauge, hausdorff_distance, load_body, parse_body, polar_dual, support,
)
from .family import (
    check_dilation_inclusion, ellipsoid_family_transport, envelope_gradient, extremize_over_rotations,
    random_rotation_statistics, sweep_family,
)
from .linalg import (
    AffineMap, generalized_polar_decompose, haar_orthogonal, matrix_exp, nonneg_least_squares, spd_sqrt,
    sylvester_hadamard_basis,
)
from .maxint import boundary_integrals, intersection_volume, isotropy_report, maxint_flow, volume_derivative
from .pjp import (
    PjpProblem, SolverOptions, extract_contact_pairs, normalize_position, recenter_contact_pairs,
    solve_decomposition_weights, solve_positive_john, verify_positive_john,
)

__version__ = "0.1.0"
