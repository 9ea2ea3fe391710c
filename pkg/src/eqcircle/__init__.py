"""Equivalent-circle perturbation theory for Dirichlet eigenvalues of star-shaped drums."""
from .boundary import (
    BoundaryError,
    FourierBoundary,
    ShapeFamily,
    TruncationWarning,
    equivalent_radius,
    fourier_expand,
    make_circle,
    make_ellipse,
    make_supercircle,
    read_samples,
    shape_from_samples,
    verify_constraints,
)
from .oracle import NumericLevel, OracleConfig, Sector, classify_mode, dirichlet_eigs, family_levels
from .perturb import (
    FIRST5,
    EnergyExpansion,
    Mode,
    Parity,
    WavefunctionExpansion,
    boundary_residual,
    e0,
    e1,
    e2,
    energy,
    expansion,
    psi1_coeffs,
)
from .report import BranchEvent, SpectrumScan, detect_events, scan
from .specfun import BesselZeroTable, bessel_j, bessel_j_prime, bessel_j_second, bessel_zero, gamma

__version__ = "0.1.0"
