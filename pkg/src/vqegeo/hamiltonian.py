"""Qubit Hamiltonian H(x) and its nuclear-coordinate derivatives.

Spin orbitals are interleaved: spin orbital ``2p`` is spatial orbital ``p``
with spin alpha and ``2p + 1`` the same orbital with spin beta. With
orbitals sorted by energy the Hartree-Fock determinant fills the leading
qubits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .fermion import FermionOperator, MappingError, jw_components
from .integrals import compute_ao_integrals
from .molecule import Molecule
from .pauli import PRUNE_THRESHOLD, PauliSum, masks_to_word
from .scf import (
    ActiveSpaceIntegrals,
    OrbitalMatchingError,
    ScfResult,
    align_orbitals,
    freeze_core,
    mo_transform,
    run_rhf,
)

FD_DELTA = 0.01  # Bohr
MIN_MATCH_OVERLAP = 0.9
# tighter than the RHF defaults: finite differences divide by 2*delta
SCF_E_TOL = 1e-12
SCF_D_TOL = 1e-10

_COEF_CUTOFF = 1e-14


@dataclass(frozen=True)
class ElectronicStructure:
    scf: ScfResult
    active: ActiveSpaceIntegrals
    match_overlap: float = 1.0

    @property
    def n_qubits(self) -> int:
        return 2 * self.active.n_active_orbitals


def electronic_structure(
    molecule: Molecule,
    x: Optional[Sequence[float]] = None,
    reference: Optional[ScfResult] = None,
) -> ElectronicStructure:
    """Integrals, RHF, optional orbital alignment, MO transform, frozen core."""
    if x is not None:
        molecule = molecule.with_coordinates(x)
    ints = compute_ao_integrals(molecule)
    scf = run_rhf(molecule, ints, e_tol=SCF_E_TOL, d_tol=SCF_D_TOL)
    scf.require_converged()
    overlap = 1.0
    if reference is not None:
        scf, overlap = align_orbitals(
            scf, reference.mo_coefficients, reference.orbital_energies,
            min_overlap=MIN_MATCH_OVERLAP,
        )
    active = freeze_core(molecule, mo_transform(scf, ints), scf)
    return ElectronicStructure(scf=scf, active=active, match_overlap=overlap)


def _spin_orbital_terms(m: int):
    """Ladder products of the spin-orbital Hamiltonian for ``m`` spatial orbitals.

    Yields ``(weight, integral_slot, product)`` where slot 0 is the constant,
    slots ``1 + p*m + q`` the one-body integrals and the following ``m**4``
    slots the physicist two-body integrals ``<pq|rs>`` in C order.
    """
    yield 1.0, 0, ()
    for p in range(m):
        for q in range(m):
            for s in (0, 1):
                yield 1.0, 1 + p * m + q, ((2 * p + s, True), (2 * q + s, False))
    base = 1 + m * m
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    slot = base + ((p * m + q) * m + r) * m + s
                    for s1 in (0, 1):
                        for s2 in (0, 1):
                            a, b = 2 * p + s1, 2 * q + s2
                            c, d = 2 * s + s2, 2 * r + s1
                            if a == b or c == d:
                                continue
                            yield 0.5, slot, ((a, True), (b, True), (c, False), (d, False))


def build_fermionic_hamiltonian(asi: ActiveSpaceIntegrals) -> FermionOperator:
    """Spin-orbital form of ``sum h_pq c+_p c_q + 1/2 sum h_pqrs c+_p c+_q c_r c_s``.

    In terms of the physicist integrals the two-body part reads
    ``1/2 <pq|rs> c+_{p s1} c+_{q s2} c_{s s2} c_{r s1}``.
    """
    values = integral_vector(asi)
    return FermionOperator([
        (w * float(values[slot]), prod)
        for w, slot, prod in _spin_orbital_terms(asi.n_active_orbitals)
        if abs(values[slot]) >= _COEF_CUTOFF
    ])


def integral_vector(asi: ActiveSpaceIntegrals) -> np.ndarray:
    return np.concatenate([[asi.core_energy], asi.one_body.ravel(), asi.two_body.ravel()])


@lru_cache(maxsize=None)
def _jw_map(m: int):
    """Linear map from the integral vector to Pauli coefficients.

    The Jordan-Wigner image of every spin-orbital product is computed once
    per active-space size; a Hamiltonian is then one sparse mat-vec.
    """
    weights, slots, prods = zip(*_spin_orbital_terms(m))
    keys, vals, source = jw_components(prods, 2 * m)
    uniq, inv = np.unique(keys, return_inverse=True)
    mat = sparse.csr_matrix(
        (vals * np.asarray(weights)[source], (inv, np.asarray(slots)[source])),
        shape=(len(uniq), 1 + m * m + m ** 4),
    )
    n = 2 * m
    words = [masks_to_word(int(k) >> n, int(k) & ((1 << n) - 1), n) for k in uniq]
    return mat, words


def pauli_basis(n_active_orbitals: int):
    """``(matrix, words)``: Pauli coefficients are ``matrix @ integral_vector``."""
    return _jw_map(n_active_orbitals)


def qubit_hamiltonian(asi: ActiveSpaceIntegrals, prune: float = PRUNE_THRESHOLD) -> PauliSum:
    """Jordan-Wigner qubit form of the active-space Hamiltonian."""
    m = asi.n_active_orbitals
    mat, words = _jw_map(m)
    coefs = mat @ integral_vector(asi)
    if np.any(np.abs(coefs.imag) > 1e-10):
        raise MappingError("non-hermitian Hamiltonian: complex Pauli coefficient")
    return PauliSum(2 * m, dict(zip(words, coefs.real)), prune=prune)


def molecular_hamiltonian(
    molecule: Molecule,
    x: Optional[Sequence[float]] = None,
    reference: Optional[ScfResult] = None,
) -> PauliSum:
    """Pauli-string Hamiltonian whose expectation values are total energies."""
    return qubit_hamiltonian(electronic_structure(molecule, x, reference).active)


def _displaced(x, i, step):
    xd = np.array(x, dtype=float)
    xd[i] += step
    return xd


def hamiltonian_derivative(
    molecule: Molecule,
    x: Optional[Sequence[float]] = None,
    i: int = 0,
    delta: float = FD_DELTA,
    reference: Optional[ScfResult] = None,
) -> PauliSum:
    """Central-difference observable ``(H(x + d e_i) - H(x - d e_i)) / 2d``.

    MOs at both displaced geometries are aligned to ``reference`` (by
    default the RHF orbitals at ``x``).
    """
    if x is None:
        x = molecule.coordinates
    x = np.asarray(x, dtype=float)
    if not 0 <= i < len(x):
        raise IndexError(f"coordinate index {i} out of range 0..{len(x) - 1}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if reference is None:
        reference = electronic_structure(molecule, x).scf
    plus, minus = (
        displaced_structure(molecule, x, i, sign * delta, reference) for sign in (1, -1)
    )
    return (qubit_hamiltonian(plus.active) - qubit_hamiltonian(minus.active)) * (0.5 / delta)


def displaced_structure(molecule, x, i, step, reference) -> ElectronicStructure:
    es = electronic_structure(molecule, _displaced(x, i, step), reference)
    if es.match_overlap < MIN_MATCH_OVERLAP:
        raise OrbitalMatchingError(
            f"orbital matching failed for coordinate {i} (step {step:+g} Bohr): "
            f"overlap {es.match_overlap:.3f}"
        )
    return es
