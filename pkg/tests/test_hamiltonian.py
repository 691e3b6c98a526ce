import numpy as np
import pytest
from pytest import approx

from vqegeo.fci import dense_matrix, fermion_dense_matrix, ground_state
from vqegeo.hamiltonian import (
    build_fermionic_hamiltonian,
    electronic_structure,
    hamiltonian_derivative,
    molecular_hamiltonian,
    qubit_hamiltonian,
)
from vqegeo.fermion import jordan_wigner
from vqegeo.statevector import basis_state, expectation, hf_occupations

from conftest import EQUILIBRIUM, h2, h3plus
from oracles import number_commutator_norm

H2_FCI_REFERENCE = -1.1373060359


@pytest.fixture(scope="module")
def structures():
    return {name: electronic_structure(f()) for name, f in EQUILIBRIUM.items()}


def test_h2_term_count_and_qubits():
    ham = molecular_hamiltonian(h2())
    assert ham.n_qubits == 4
    assert len(ham) == 15
    assert set("".join(ham.terms)) <= set("IZXY")


@pytest.mark.parametrize("name", sorted(EQUILIBRIUM))
def test_hf_expectation_equals_hf_energy(structures, name):
    es = structures[name]
    ham = qubit_hamiltonian(es.active)
    hf = basis_state(hf_occupations(es.active.n_active_electrons, es.n_qubits))
    assert expectation(hf, ham) == approx(es.scf.hf_energy, abs=1e-8)


@pytest.mark.parametrize("name", sorted(EQUILIBRIUM))
def test_commutes_with_number_operator(structures, name):
    assert number_commutator_norm(qubit_hamiltonian(structures[name].active)) <= 1e-10


@pytest.mark.parametrize("name", sorted(EQUILIBRIUM))
def test_qubit_hamiltonian_is_real_and_hermitian(structures, name):
    ham = qubit_hamiltonian(structures[name].active)
    m = ham.sparse_matrix()
    assert abs(m - m.conj().T).max() <= 1e-12


def test_fermionic_hamiltonian_matches_ladder_oracle():
    es = electronic_structure(h3plus())
    op = build_fermionic_hamiltonian(es.active)
    assert op.is_hermitian(1e-12)
    got = dense_matrix(jordan_wigner(op, 6))
    assert np.max(np.abs(got - fermion_dense_matrix(op, 6))) <= 1e-10


def test_h2_exact_ground_energy():
    energy, _ = ground_state(molecular_hamiltonian(h2()), full_space=True)
    assert energy == approx(H2_FCI_REFERENCE, abs=1e-8)


def test_identity_term_contains_constants():
    es = electronic_structure(h2())
    ham = qubit_hamiltonian(es.active)
    h, g = es.active.one_body, es.active.two_body
    m = h.shape[0]
    # trace over the full Fock space divided by its dimension
    # Fock-space average of each ladder product: <n_a> = 1/2, <n_a n_b> = 1/4
    expected = es.active.core_energy + np.trace(h)
    for p in range(m):
        for q in range(m):
            if p == q:
                expected += g[p, p, p, p] / 4
            else:
                expected += g[p, q, p, q] / 2 - g[p, q, q, p] / 4
    assert ham.identity_coefficient == approx(
        np.trace(dense_matrix(ham)).real / 16, abs=1e-12)
    assert ham.identity_coefficient == approx(expected, abs=1e-12)


def test_derivative_is_central_difference():
    mol = h2(0.8)
    x = np.array(mol.coordinates)
    ref = electronic_structure(mol).scf
    d = hamiltonian_derivative(mol, x, 5, 0.01, reference=ref)
    plus = electronic_structure(mol, x + 0.01 * np.eye(6)[5], ref)
    minus = electronic_structure(mol, x - 0.01 * np.eye(6)[5], ref)
    manual = (qubit_hamiltonian(plus.active) - qubit_hamiltonian(minus.active)) * 50.0
    assert set(d.terms) == set(manual.terms)
    for w, c in d:
        assert c == approx(manual.coefficient(w), abs=1e-12)


def test_derivative_index_and_delta_checks():
    with pytest.raises(IndexError):
        hamiltonian_derivative(h2(), i=6)
    with pytest.raises(ValueError):
        hamiltonian_derivative(h2(), i=0, delta=0.0)


def test_derivative_hf_expectation_matches_energy_slope():
    mol = h2(0.8)
    x = np.array(mol.coordinates)
    d = hamiltonian_derivative(mol, x, 5)
    hf = basis_state("1100")
    e_p = electronic_structure(mol, x + 0.01 * np.eye(6)[5]).scf.hf_energy
    e_m = electronic_structure(mol, x - 0.01 * np.eye(6)[5]).scf.hf_energy
    # Hellmann-Feynman-like identity: exact for the HF state because orbital
    # relaxation enters only at second order
    assert expectation(hf, d) == approx((e_p - e_m) / 0.02, abs=1e-5)


@pytest.mark.parametrize("name", sorted(EQUILIBRIUM))
def test_cached_map_equals_direct_mapping(structures, name):
    es = structures[name]
    fast = qubit_hamiltonian(es.active)
    direct = jordan_wigner(build_fermionic_hamiltonian(es.active), es.n_qubits)
    assert set(fast.terms) == set(direct.terms)
    for w, c in direct:
        assert fast.coefficient(w) == approx(c, abs=1e-12)
