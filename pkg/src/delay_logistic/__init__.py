"""Period-2 orbits of the distributed-delay logistic equation
x'(t) = r x(t) (1 - integral_0^1 x(t-s) ds), with numerical cross-validation.

The equilibrium x = 1 loses stability at r = pi^2/2; beyond it the equation
carries an explicit period-2 orbit built from Jacobi elliptic functions.
This package evaluates that orbit in closed form (``build_orbit``), locates
the characteristic roots driving the stability switch (``find_roots``),
integrates the delay system and its ODE reductions independently
(``integrate_dde`` and friends), and bundles the whole invariant suite
behind one verification entry point (``run_checks`` / the ``verify`` CLI).
"""

from .ddesim import (
    PositivityLossError,
    SirsParams,
    SirsTrajectory,
    Trajectory,
    endemic_equilibrium,
    integrate_dde,
    integrate_four_dim,
    integrate_reduced,
    integrate_sirs,
    orbit_trajectory,
    sirs_limit_distance,
    window_integral,
)
from .elliptic import (
    HOPF_RATE,
    JacobiTriple,
    Modulus,
    complete_e,
    complete_k,
    jacobi,
    modulus_from_rate,
    rate_from_modulus,
    sn_integral_log,
)
from .orbit import OrbitParams, build_orbit
from .spectrum import (
    CharRoot,
    SpectrumReport,
    char_derivative,
    char_function,
    find_roots,
    hopf_crossing_derivative,
    track_root,
)
from .verify import CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HOPF_RATE",
    "Modulus",
    "JacobiTriple",
    "complete_k",
    "complete_e",
    "jacobi",
    "sn_integral_log",
    "rate_from_modulus",
    "modulus_from_rate",
    "OrbitParams",
    "build_orbit",
    "Trajectory",
    "PositivityLossError",
    "integrate_dde",
    "integrate_four_dim",
    "integrate_reduced",
    "orbit_trajectory",
    "window_integral",
    "SirsParams",
    "SirsTrajectory",
    "endemic_equilibrium",
    "integrate_sirs",
    "sirs_limit_distance",
    "CharRoot",
    "SpectrumReport",
    "char_function",
    "char_derivative",
    "find_roots",
    "hopf_crossing_derivative",
    "track_root",
    "CheckResult",
    "run_checks",
]
