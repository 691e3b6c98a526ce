"""Equilibrium molecular geometries by jointly optimizing the angles of a
simulated particle-conserving circuit and the nuclear coordinates."""

from .molecule import InputError, Molecule, geometry_params, parse_molecule
from .hamiltonian import molecular_hamiltonian, hamiltonian_derivative
from .vqe import OptimizerConfig, Trajectory, adaptive_build, joint_optimize
from .fci import fci_geometry_optimize, ground_state

__all__ = [
    "InputError",
    "Molecule",
    "OptimizerConfig",
    "Trajectory",
    "adaptive_build",
    "fci_geometry_optimize",
    "geometry_params",
    "ground_state",
    "hamiltonian_derivative",
    "joint_optimize",
    "molecular_hamiltonian",
    "parse_molecule",
]
