"""Numerics for nonlinear resolvents of holomorphic generators on the unit disk."""

from .errors import *  # noqa: F401,F403
from .grid import Grid
from .herglotz import (
    BoundaryAtom,
    Generator,
    HerglotzFn,
    OmegaForm,
    ReferenceMap,
    eval_f,
    eval_p,
    generator_from_dict,
    generator_from_json,
    herglotz_generator,
    koebe_generator,
    linear_generator,
    make_herglotz,
    make_starlike_reference,
    omega_generator,
)
from .resolvent import (
    ResolventField,
    ResolventMap,
    ResolventValue,
    admissible_radius,
    extension_radius,
    resolvent_grid,
    resolvent_on_circle,
    solve_many,
    solve_resolvent,
)
from .geometry import (
    R0,
    DistortionReport,
    OrderEstimate,
    RadiiReport,
    TheoreticalOrders,
    amplitude_A,
    check_disk_containment,
    check_distortion_covering,
    check_half_plane,
    class_radii,
    estimate_orders,
    estimate_resolvent_orders,
    image_winding,
    r0,
    resolvent_radii,
    shape_ratio,
    theoretical_orders,
    winding_numbers,
)
from .semigroup import (
    SqueezeCertificate,
    Trajectory,
    exponential_formula,
    flow,
    kappa_resolvent,
    resolvent_semigroup_check,
    sector_estimate,
    squeezing_margin,
    trajectory,
)
from .verifier import SuiteConfig, VerificationReport, run_suite, sample_generator

__version__ = "0.1.0"
