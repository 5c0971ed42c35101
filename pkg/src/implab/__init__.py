"""Numerical toolkit for a perturbed tangent-to-identity family of C^2.

The family F_eps(x, y) = (x + (x^2 + eps^2) A(x, y), y B(x, y)) opens
a gate between an attracting and a repelling region as eps moves off
zero.  The package computes the incoming/outgoing Fatou coordinates of
F_0 and their almost-Fatou truncations, measures transit-orbit
estimates over compact windows, builds empirical Lavaurs transfer maps
along alpha-ladders, and rasterizes filled slices to exhibit the
discontinuity of eps -> K(F_eps) at eps = 0 with per-pixel
certificates.
"""

from .config import RunConfig, load_config, parse_config
from .errors import ImplabError
from .mapfamily import (
    DEFAULT_MAP,
    ComplexPoint,
    PolyMap2,
    characteristic_directions,
    check_regularity,
    eval_F,
    eval_F_inverse,
    eval_H,
    iterate,
)
from .regions import (
    DEFAULT_REGIONS,
    CompactWindow,
    RegionConfig,
    check_invariance,
    entry_exit_times,
    gate_depth,
    in_C0,
    in_C_eps,
    in_D_eps,
    make_compact_window,
    verify_orbit_estimates,
)
from .fatou import (
    AlmostFatouParams,
    FatouValue,
    estimate_decay_exponent,
    phi_almost,
    phi_iota,
    phi_o,
    psi_o_line,
    telescoping_product,
    u_eps,
    u_eps_inverse,
    vertical_sums,
    w_eps,
)
from .lavaurs import (
    AlphaSequence,
    LavaursEstimate,
    lavaurs_1d,
    lavaurs_2d_estimate,
    make_alpha_sequence,
    semiconjugacy_residual,
)
from .julia import (
    DiscontinuityReport,
    GridSpec,
    MembershipParams,
    MembershipResult,
    Raster,
    boundary_slice,
    discontinuity_report,
    escape_classify,
    escape_radius_bound,
    hausdorff_grid,
    lavaurs_membership,
    render_K_slice,
    write_ppm,
)

__version__ = "0.1.0"

__all__ = [
    "AlmostFatouParams", "AlphaSequence", "CompactWindow", "ComplexPoint",
    "DEFAULT_MAP", "DEFAULT_REGIONS", "DiscontinuityReport", "FatouValue",
    "GridSpec", "ImplabError", "LavaursEstimate", "MembershipParams",
    "MembershipResult", "PolyMap2", "Raster", "RegionConfig", "RunConfig",
    "boundary_slice", "characteristic_directions", "check_invariance",
    "check_regularity", "discontinuity_report", "entry_exit_times",
    "escape_classify", "escape_radius_bound", "estimate_decay_exponent",
    "eval_F", "eval_F_inverse", "eval_H", "gate_depth", "hausdorff_grid",
    "in_C0", "in_C_eps", "in_D_eps", "iterate", "lavaurs_1d",
    "lavaurs_2d_estimate", "lavaurs_membership", "load_config",
    "make_alpha_sequence", "make_compact_window", "parse_config",
    "phi_almost", "phi_iota", "phi_o", "psi_o_line", "render_K_slice",
    "semiconjugacy_residual", "telescoping_product", "u_eps",
    "u_eps_inverse", "vertical_sums", "verify_orbit_estimates", "w_eps",
    "write_ppm",
]
