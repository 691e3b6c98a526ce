"""Exact diagonalization references.

The ground state is computed in the fixed particle-number, Sz = 0 sector
with a dense symmetric eigensolver; ``dense_matrix`` and
``fermion_dense_matrix`` are brute-force Kronecker constructions used as
test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from typing import Optional

import numpy as np

from .fermion import FermionOperator
from .molecule import Molecule
from .pauli import PauliSum, parity_table, word_to_masks
from .statevector import Statevector
from .vqe import OptimizerConfig, Trajectory, _descend

MAX_SECTOR_QUBITS = 14
MAX_DENSE_QUBITS = 10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class SectorBasis:
    n_qubits: int
    n_electrons: int
    bitstrings: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return len(self.bitstrings)

    @property
    def indices(self) -> np.ndarray:
        return np.array([int(b, 2) for b in self.bitstrings], dtype=np.int64)


def sector_basis(n_qubits: int, n_electrons: int, sz2: int = 0) -> SectorBasis:
    """Determinants with ``n_electrons`` set bits and ``2*Sz = sz2``.

    Even qubits carry alpha spin, odd qubits beta spin.
    """
    if (n_electrons + sz2) % 2:
        raise ValueError("electron count and 2*Sz must have equal parity")
    n_alpha = (n_electrons + sz2) // 2
    n_beta = n_electrons - n_alpha
    even = range(0, n_qubits, 2)
    odd = range(1, n_qubits, 2)
    bits = []
    if 0 <= n_alpha <= len(even) and 0 <= n_beta <= len(odd):
        for a in combinations(even, n_alpha):
            for b in combinations(odd, n_beta):
                occ = set(a) | set(b)
                bits.append("".join("1" if q in occ else "0" for q in range(n_qubits)))
    return SectorBasis(n_qubits, n_electrons, tuple(sorted(bits)))


def sector_matrix(hamiltonian: PauliSum, basis: SectorBasis) -> np.ndarray:
    """Dense real matrix of ``hamiltonian`` restricted to ``basis``."""
    n = hamiltonian.n_qubits
    idx = basis.indices
    lookup = {int(i): k for k, i in enumerate(idx)}
    par = parity_table(n)
    mat = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    for word, coef in hamiltonian:
        x, z = word_to_masks(word)
        ny = bin(x & z).count("1")
        phase = coef * (1j ** ny) * (1.0 - 2.0 * par[idx & z])
        for col, (i, ph) in enumerate(zip(idx, phase)):
            row = lookup.get(int(i) ^ x)
            if row is not None:
                mat[row, col] += ph
    if np.max(np.abs(mat.imag), initial=0.0) > 1e-10:
        raise ValueError("sector matrix is not real")
    return mat.real


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def ground_state(hamiltonian: PauliSum, n_electrons: Optional[int] = None,
                 full_space: bool = False) -> tuple[float, Statevector]:
    """Lowest eigenpair in the (N_e, Sz = 0) sector, or of the whole space.

    The eigenvector is embedded in the full register and its phase is fixed so
    the largest amplitude is real and positive.
    """
    n = hamiltonian.n_qubits
    if full_space or n_electrons is None:
        vals, vecs = np.linalg.eigh(dense_matrix(hamiltonian))
        return float(vals[0]), Statevector(_fix_phase(vecs[:, 0]), n)
    if n > MAX_SECTOR_QUBITS:
        raise ValueError(f"at most {MAX_SECTOR_QUBITS} qubits supported")
    basis = sector_basis(n, n_electrons)
    if basis.dimension == 0:
        raise ValueError(f"empty sector for {n_electrons} electrons on {n} qubits")
    vals, vecs = np.linalg.eigh(sector_matrix(hamiltonian, basis))
    amps = np.zeros(1 << n, dtype=complex)
    amps[basis.indices] = vecs[:, 0]
    return float(vals[0]), Statevector(_fix_phase(amps), n)


def dense_matrix(observable: PauliSum) -> np.ndarray:
    """Kronecker-product assembly, qubit 0 as the leftmost factor."""
    n = observable.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrices limited to {MAX_DENSE_QUBITS} qubits")
    mat = np.zeros((1 << n, 1 << n), dtype=complex)
    for word, coef in observable:
        mat += coef * reduce(np.kron, [_PAULI[ch] for ch in word], np.eye(1, dtype=complex))
    return mat


def annihilation_matrices(n_modes: int) -> list[np.ndarray]:
    """Dense ``c_p`` built from occupation-number bit flips and parity signs."""
    dim = 1 << n_modes
    mats = []
    for p in range(n_modes):
        bit = 1 << (n_modes - 1 - p)
        a = np.zeros((dim, dim))
        for state in range(dim):
            if state & bit:
                # modes before p are the more significant bits
                sign = (-1) ** bin(state >> (n_modes - p)).count("1")
                a[state ^ bit, state] = sign
        mats.append(a)
    return mats


def fermion_dense_matrix(op: FermionOperator, n_modes: int) -> np.ndarray:
    if n_modes > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrices limited to {MAX_DENSE_QUBITS} modes")
    ann = annihilation_matrices(n_modes)
    dim = 1 << n_modes
    mat = np.zeros((dim, dim))
    for coef, prod in op.terms:
        term = np.eye(dim)
        for mode, dag in prod:
            term = term @ (ann[mode].T if dag else ann[mode])
        mat += coef * term
    return mat


def fci_energy(molecule: Molecule, x=None) -> float:
    from .hamiltonian import electronic_structure, qubit_hamiltonian

    es = electronic_structure(molecule, x)
    return ground_state(qubit_hamiltonian(es.active), es.active.n_active_electrons)[0]


def fci_geometry_optimize(molecule: Molecule, x0=None,
                          config: Optional[OptimizerConfig] = None,
                          callback=None) -> Trajectory:
    """Same descent on x as the joint optimizer, using the exact ground state."""
    config = config or OptimizerConfig()

    def prepare(hamiltonian, es):
        _, state = ground_state(hamiltonian, es.active.n_active_electrons)
        return state, np.zeros(0), np.zeros(0), lambda g: None

    return _descend(molecule, x0, config, prepare, callback)
