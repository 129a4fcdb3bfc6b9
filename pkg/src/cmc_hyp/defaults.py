"""Central table of default tolerances and resolutions.

Every named tolerance used by the library is collected here so that a single
config document can override them.  Call :func:`tol` for lookups; unknown
names raise ``KeyError`` early instead of silently falling back.
"""

DEFAULTS = {
    # grid / quadrature
    "grid_n": 24,                  # default sphere resolution
    "ball_quad_order": 16,         # per-axis order of the solid-ball rule
    "vertical_quad_order": 24,     # Gauss order for vertical antiderivatives
    "quad_area_tol": 1e-10,        # |sum(w) - 4*pi| on any grid
    # geometry guards
    "acosh_clamp": 1e-14,          # tolerated cosh-distance deficit below 1
    "overlap_warn": 1e-3,          # chart-overlap derivative mismatch flag
    # linear algebra
    "kernel_gap_factor": 100.0,    # singular-value gap declaring a kernel
    "eig_residual": 1e-7,          # eigenpair residual bound
    "selfadjoint_tol": 1e-8,       # mass-inner-product symmetry defect
    "bordered_residual": 1e-8,     # constrained-solve equation residual
    "constraint_tol": 1e-10,       # orthogonality-constraint defect
    # nonlinear solves
    "newton_residual": 1e-9,       # corrector residual (sup norm)
    "newton_max_iter": 60,
    "outer_grad_tol": 1e-9,        # reduced-gradient norm at convergence
    "fd_step": 1e-5,               # relative step for finite differences
    # critical-point search
    "dedupe_dist": 1e-6,           # hyperbolic distance merging critical points
    "classify_tol": 1e-6,          # Hessian eigenvalue scale for 'degenerate'
    "obstruction_margin": 1e-10,   # uniform-sign margin for obstructions
}


def tol(name, overrides=None):
    """Return the default value for ``name``, honoring ``overrides``."""
    if overrides and name in overrides:
        return overrides[name]
    return DEFAULTS[name]
