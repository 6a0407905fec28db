"""rotflow: pseudo-spectral toolkit for the rotating incompressible Euler system.

Core layers: spectral (grids/transforms/operators), profiles (helical and
scalar dispersive unknowns), localization (cutoffs, dyadic projections,
telescoping), multipliers (explicit bilinear symbols and their identities),
norms (bootstrap X/Y norms and monitors), solver (time integration), oracle
(independent reference computations) and cli (experiment presets).
"""

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    transform,
    inverse_transform,
    differential,
    leray_project,
    helical_split,
    helical_recompose,
    dispersion,
    semigroup,
    dealias,
)
from .profiles import (
    SignTriple,
    VectorProfile,
    ScalarProfile,
    gauge_frame,
    r_pm,
    r_pm_inverse,
    nonlinearity,
    rhs_profile,
)
from .localization import (
    CutoffBank,
    project,
    spatial_localize,
    ring_localize,
    telescope,
    WavePacketGeometry,
    wavepacket_sets,
)
from .multipliers import (
    MultiplierSample,
    phase,
    sigma_bar,
    m1,
    m2,
    m3,
    m_total,
    m_sym,
    bilinear_factored,
    nonlinearity_consistency,
)
from .norms import NormSpec, DecayFit, norm, decay_fit
from .solver import SolverConfig, InitialData, make_initial_data, run, step

__version__ = "0.1.0"
