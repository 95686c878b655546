"""Simulation and verification tools for damped, driven Maxwell-Bloch dynamics with mixed states."""
from .dynamics import (
    RhsKind,
    average_of_rhs_numeric,
    averaged_rhs,
    full_rhs,
    interaction_field,
    interaction_rhs,
    pure_rhs,
    theta_matrix,
)
from .equilibria import (
    HarmonicState,
    SpectrumReport,
    distance_to_branch,
    gauge_transform,
    harmonic_z1,
    harmonic_z2,
    jacobian,
    locate_stability_flip,
    numeric_spectrum,
    sample_tubular,
    spectrum_numeric,
    spectrum_z1,
    spectrum_z2,
    stationary_search_nonresonant,
)
from .errors import *  # noqa: F401,F403
from .experiments import (
    AttractionReport,
    BoundReport,
    GenericReport,
    ScalingReport,
    run_adiabatic_asymptotics,
    run_apriori_check,
    run_attraction,
    run_averaged_vs_interaction,
    run_kbm_order,
    run_pure_vs_mixed,
    run_stable_asymptotics,
)
from .integrator import Trajectory, integrate
from .model import (
    EnvelopeState,
    FullState,
    ModelParams,
    Pumping,
    PureState,
    bloch_from_rho,
    default_params,
    rho_from_bloch,
    to_lab_frame,
    to_rotating_frame,
)

__version__ = "0.1.0"
