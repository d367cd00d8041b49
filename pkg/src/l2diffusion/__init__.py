"""Libration-point dynamics near L2 of the planar restricted three-body problem.

Twist coefficients of the Lapunov family, symmetric homoclinic orbits for
the masses mu_k and Melnikov integrals for the elliptic perturbation.
"""

from .equilibria import EquilibriumData, build_phi, center_basis_vector, equilibrium, find_libration_L2, linearize
from .integrate import Section, SectionEvent, Trajectory, find_crossing, propagate
from .melnikov import (
    MelnikovResult,
    hill_limit,
    hill_melnikov_derivative,
    hill_tip_orbit,
    melnikov,
    melnikov_derivative_at_zero,
)
from .models import (
    Circular,
    EllipticFirstOrder,
    Hill,
    G_partials,
    hamiltonian,
    hill_transform,
    jacobi_constant,
    kepler_primaries,
    perturbation_G,
    symmetry_S,
    vector_field,
)
from .normalform import (
    CubicVectorField,
    TwistResult,
    energy_coefficient_h2,
    expand_cubic,
    predicted_frequency,
    twist_a22,
    twist_for_model,
    twist_for_mu,
)
from .orbits import HomoclinicOrbit, LapunovOrbit, find_mu_k, homoclinic, lapunov, shoot, unstable_branch, wave_count

__version__ = "0.1.0"

__all__ = [
    "Circular",
    "Hill",
    "EllipticFirstOrder",
    "hamiltonian",
    "vector_field",
    "jacobi_constant",
    "perturbation_G",
    "G_partials",
    "kepler_primaries",
    "symmetry_S",
    "hill_transform",
    "EquilibriumData",
    "find_libration_L2",
    "linearize",
    "build_phi",
    "center_basis_vector",
    "equilibrium",
    "CubicVectorField",
    "TwistResult",
    "expand_cubic",
    "twist_a22",
    "twist_for_model",
    "twist_for_mu",
    "energy_coefficient_h2",
    "predicted_frequency",
    "Trajectory",
    "Section",
    "SectionEvent",
    "propagate",
    "find_crossing",
    "HomoclinicOrbit",
    "LapunovOrbit",
    "unstable_branch",
    "shoot",
    "find_mu_k",
    "homoclinic",
    "wave_count",
    "lapunov",
    "MelnikovResult",
    "melnikov",
    "melnikov_derivative_at_zero",
    "hill_tip_orbit",
    "hill_melnikov_derivative",
    "hill_limit",
]
