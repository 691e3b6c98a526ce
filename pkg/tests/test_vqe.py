import itertools
import math

import numpy as np
import pytest
from pytest import approx

from vqegeo.fci import fci_energy
from vqegeo.hamiltonian import electronic_structure, molecular_hamiltonian
from vqegeo.molecule import BOHR_TO_ANGSTROM
from vqegeo.scf import ScfConvergenceError
from vqegeo.statevector import Circuit, hf_occupations, run_circuit
from vqegeo import vqe
from vqegeo.vqe import (
    SHIFT_MINUS,
    SHIFT_PLUS,
    OptimizerConfig,
    adaptive_select,
    circuit_from_excitations,
    cost,
    generate_excitations,
    grad_theta,
    grad_x,
    joint_optimize,
    nuclear_gradient,
    project_internal,
    rigid_body_basis,
    shift_rule,
)

from conftest import INPUTS, EQUILIBRIUM, h2, h2o, h3plus, load_input, sampled_circuit, vqe_run
from oracles import central_difference_theta


def brute_force_counts(n_electrons, n_spin_orbitals):
    """Count Sz-conserving excitations by filtering every index tuple."""
    occ = range(n_electrons)
    virt = range(n_electrons, n_spin_orbitals)
    spin = lambda idx: sum(1 if p % 2 == 0 else -1 for p in idx)
    singles = sum(1 for i in occ for a in virt if spin((i,)) == spin((a,)))
    doubles = sum(1 for i in itertools.combinations(occ, 2)
                  for a in itertools.combinations(virt, 2) if spin(i) == spin(a))
    return singles, doubles


# ---- shift rule ---------------------------------------------------------------

def test_shift_coefficients():
    assert SHIFT_PLUS == approx((math.sqrt(2) + 1) / (2 * math.sqrt(2)), abs=1e-15)
    assert SHIFT_MINUS == approx((math.sqrt(2) - 1) / (2 * math.sqrt(2)), abs=1e-15)


def test_shift_rule_sin_2theta():
    assert shift_rule(lambda t: math.sin(2 * t), 0.0) == approx(2.0, abs=1e-14)


def test_shift_rule_sin_theta():
    assert shift_rule(lambda t: math.sin(t), 0.0) == approx(1.0, abs=1e-14)


def test_shift_rule_mixed_frequencies(rng):
    a, b, c, d, e = rng.normal(size=5)
    f = lambda t: a + b * math.cos(t) + c * math.sin(t) + d * math.cos(2 * t) + e * math.sin(2 * t)
    df = lambda t: -b * math.sin(t) + c * math.cos(t) - 2 * d * math.sin(2 * t) + 2 * e * math.cos(2 * t)
    for t in rng.uniform(-math.pi, math.pi, size=10):
        assert shift_rule(f, t) == approx(df(t), abs=1e-12)


def test_shift_rule_matches_finite_differences(rng):
    # 50 random (molecule, theta) draws, compared in the max norm
    draws = 0
    for name in INPUTS:
        mol = load_input(name)
        ham = molecular_hamiltonian(mol)
        circuit = sampled_circuit(mol, rng)
        for _ in range(13 if name != "h2o" else 11):
            theta = rng.uniform(-math.pi, math.pi, circuit.n_params)
            g = grad_theta(circuit, theta, ham)
            fd = central_difference_theta(circuit, theta, ham)
            assert np.max(np.abs(g - fd)) <= 1e-6 * np.max(np.abs(fd)), name
            draws += 1
    assert draws == 50


def test_grad_theta_slots_subset():
    mol = h3plus()
    ham = molecular_hamiltonian(mol)
    circuit = circuit_from_excitations(6, 2, sum(generate_excitations(2, 6), []))
    theta = np.linspace(-0.3, 0.4, circuit.n_params)
    full = grad_theta(circuit, theta, ham)
    part = grad_theta(circuit, theta, ham, slots=[1, 5])
    assert part[[1, 5]] == approx(full[[1, 5]], abs=1e-14)
    assert np.all(part[[0, 2, 3, 4, 6, 7]] == 0)


# ---- cost ---------------------------------------------------------------------

@pytest.mark.parametrize("name", INPUTS)
def test_cost_at_zero_angles_is_hf(name):
    mol = EQUILIBRIUM[name]()
    es = electronic_structure(mol)
    circuit = adaptive_select(mol).circuit if name in ("h2", "h3plus") else Circuit(
        es.n_qubits, hf_occupations(es.active.n_active_electrons, es.n_qubits))
    assert cost(circuit, np.zeros(circuit.n_params), mol) == approx(es.scf.hf_energy, abs=1e-8)


def test_cost_variational_bound(rng):
    mol = h3plus()
    e_fci = fci_energy(mol)
    circuit = circuit_from_excitations(6, 2, sum(generate_excitations(2, 6), []))
    for _ in range(10):
        assert cost(circuit, rng.uniform(-math.pi, math.pi, circuit.n_params), mol) >= e_fci - 1e-10


def test_h2_cost_period(rng):
    mol = h2()
    circuit = circuit_from_excitations(4, 2, generate_excitations(2, 4)[1])
    for t in rng.uniform(-math.pi, math.pi, size=5):
        assert cost(circuit, [t + 2 * math.pi], mol) == approx(cost(circuit, [t], mol), abs=1e-12)
    # a full-angle double excitation reaches the doubly excited determinant at pi/2
    assert cost(circuit, [math.pi / 2], mol) > cost(circuit, [0.0], mol) + 0.5


# ---- nuclear gradient ---------------------------------------------------------

@pytest.mark.parametrize("name", INPUTS)
def test_translational_sums(name, rng):
    mol = load_input(name)
    circuit = sampled_circuit(mol, rng, max_gates=6)
    theta = rng.uniform(-0.2, 0.2, circuit.n_params)
    g = grad_x(circuit, theta, mol)
    assert np.all(np.abs(g.reshape(-1, 3).sum(axis=0)) <= 1e-3)


@pytest.mark.parametrize("name", INPUTS)
def test_nuclear_gradient_matches_derivative_observables(name, rng):
    mol = load_input(name)
    circuit = sampled_circuit(mol, rng, max_gates=6)
    theta = rng.uniform(-0.2, 0.2, circuit.n_params)
    x = np.asarray(mol.coordinates)
    reference = electronic_structure(mol).scf
    direct = grad_x(circuit, theta, mol, x, 0.01, reference)
    fast = nuclear_gradient(run_circuit(circuit, theta), mol, x, 0.01, reference)
    assert fast == approx(direct, abs=1e-10)


@pytest.mark.parametrize("name", INPUTS)
def test_fd_delta_halving_is_second_order(name):
    mol = load_input(name)
    circuit = adaptive_select(mol).circuit
    theta = np.full(circuit.n_params, 0.05)
    g = {d: grad_x(circuit, theta, mol, fd_delta=d) for d in (0.04, 0.02, 0.01)}
    # error-vector norms: single components can have a near-vanishing
    # second-order coefficient, which makes a per-component ratio meaningless
    ratio = np.linalg.norm(g[0.04] - g[0.02]) / np.linalg.norm(g[0.02] - g[0.01])
    assert 2.5 <= ratio <= 6.0


def test_compressed_h2_is_repulsive():
    mol = h2(0.6)
    circuit = adaptive_select(mol).circuit
    g = grad_x(circuit, [0.0], mol)
    # atom 0 at the origin, atom 1 on +z: the energy falls as the atoms separate
    assert g[2] > 0 and g[5] < 0
    assert np.abs(g[[0, 1, 3, 4]]).max() < 1e-8


def test_stretched_h2_is_attractive():
    mol = h2(0.9)
    g = grad_x(adaptive_select(mol).circuit, [0.0], mol)
    assert g[2] < 0 and g[5] > 0


# ---- rigid-body projection -------------------------------------------------------

def test_rigid_body_rank():
    assert rigid_body_basis(h2o().coordinates).shape[0] == 6
    assert rigid_body_basis(h3plus().coordinates).shape[0] == 6
    assert rigid_body_basis(load_input("beh2").coordinates).shape[0] == 5
    assert rigid_body_basis(h2().coordinates).shape[0] == 5
    basis = rigid_body_basis(h2o().coordinates)
    assert basis @ basis.T == approx(np.eye(6), abs=1e-12)


def test_projection_removes_rigid_motion(rng):
    x = np.asarray(h2o().coordinates)
    xyz = x.reshape(-1, 3)
    r = xyz - xyz.mean(axis=0)
    shift = np.tile(rng.normal(size=3), 3)
    spin = np.cross(rng.normal(size=3), r).ravel()
    assert np.abs(project_internal(shift + spin, x)).max() < 1e-12


def test_projection_keeps_internal_motion():
    x = np.asarray(h2o().coordinates)
    xyz = x.reshape(-1, 3)
    # symmetric stretch with the oxygen recoil that keeps the centroid fixed
    stretch = np.zeros_like(xyz)
    stretch[1:] = xyz[1:] / np.linalg.norm(xyz[1:], axis=1)[:, None]
    stretch[0] = -stretch[1:].sum(axis=0)
    g = stretch.ravel()
    assert project_internal(g, x) == approx(g, abs=1e-12)


# ---- excitations and adaptive selection -------------------------------------------

@pytest.mark.parametrize("n_elec, n_so, expected", [
    (2, 4, (2, 1)), (2, 6, (4, 4)), (4, 12, (16, 76)), (8, 12, (16, 76)),
])
def test_excitation_counts(n_elec, n_so, expected):
    singles, doubles = generate_excitations(n_elec, n_so)
    assert (len(singles), len(doubles)) == expected == brute_force_counts(n_elec, n_so)


def test_excitation_invariants():
    singles, doubles = generate_excitations(4, 12)
    for ex in singles + doubles:
        assert max(ex.occupied) < 4 <= min(ex.virtual) and max(ex.virtual) < 12
        assert sum(p % 2 for p in ex.occupied) == sum(p % 2 for p in ex.virtual)
    keys = [(ex.occupied, ex.virtual) for ex in doubles]
    assert keys == sorted(keys)


def test_excitation_bad_input():
    with pytest.raises(ValueError):
        generate_excitations(3, 8)
    with pytest.raises(ValueError):
        generate_excitations(8, 8)


def test_h3plus_excitations_listed():
    singles, doubles = generate_excitations(2, 6)
    assert [ex.qubits for ex in doubles] == [(0, 1, 2, 3), (0, 1, 2, 5), (0, 1, 3, 4), (0, 1, 4, 5)]
    assert [ex.qubits for ex in singles] == [(0, 2), (0, 4), (1, 3), (1, 5)]


def test_adaptive_h2():
    rep = adaptive_select(load_input("h2"))
    assert rep.n_candidates == 3
    assert rep.n_selected == 1
    assert [g.qubits for g in rep.circuit.gates] == [(0, 1, 2, 3)]


def test_adaptive_h3plus_gates():
    rep = adaptive_select(load_input("h3plus"))
    assert [(g.kind, g.qubits) for g in rep.circuit.gates] == [
        ("double", (0, 1, 2, 3)), ("double", (0, 1, 4, 5))]
    assert np.max(np.abs(grad_theta(
        circuit_from_excitations(6, 2, rep.selected_doubles), rep.doubles_theta,
        molecular_hamiltonian(load_input("h3plus"))))) <= 1e-5


def test_adaptive_deterministic():
    a = adaptive_select(load_input("h3plus"))
    b = adaptive_select(load_input("h3plus"))
    assert a.circuit == b.circuit
    assert np.array_equal(a.double_gradients, b.double_gradients)
    assert np.array_equal(a.doubles_theta, b.doubles_theta)


def test_adaptive_empty_selection_warns():
    with pytest.warns(UserWarning, match="no gates"):
        rep = adaptive_select(h2(), config=OptimizerConfig(adaptive_grad_threshold=10.0))
    assert rep.circuit.gates == []
    assert rep.circuit.hf_occupations == hf_occupations(2, 4)


# ---- optimizer ------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(step_x=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(fd_delta=-0.01)
    with pytest.raises(ValueError):
        OptimizerConfig(max_iterations=0)


def test_trajectory_records():
    _, traj = vqe_run("h2")
    assert [r.iteration for r in traj.records] == list(range(len(traj.records)))
    assert traj.converged
    assert traj.final.max_grad_x <= 1e-5
    assert all(r.max_grad_x > 1e-5 for r in traj.records[:-1])
    assert traj.records[0].theta == approx([0.0])


def test_fixed_point_start_terminates():
    _, traj = vqe_run("h2")
    again = joint_optimize(traj.molecule, traj.final.x, traj.circuit, theta0=traj.final.theta)
    assert again.converged
    assert len(again.records) <= 2


def test_max_iterations_status():
    mol = load_input("h2")
    traj = joint_optimize(mol, None, adaptive_select(mol).circuit, OptimizerConfig(max_iterations=3))
    assert traj.status == "max_iterations"
    assert len(traj.records) == 4


def test_scf_failure_returns_partial_trajectory(monkeypatch):
    mol = load_input("h2")
    circuit = adaptive_select(mol).circuit
    real = vqe.electronic_structure
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 3:
            raise ScfConvergenceError("forced failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(vqe, "electronic_structure", flaky)
    traj = joint_optimize(mol, None, circuit)
    assert traj.status == "error"
    assert "forced failure" in traj.message
    assert len(traj.records) == 2


def test_hf_level_geometry():
    # empty circuit: the cost is the Hartree-Fock energy
    mol = load_input("h2")
    traj = joint_optimize(mol, None, Circuit(4, hf_occupations(2, 4)))
    assert traj.converged
    assert traj.final_geometry.bond_length == approx(0.7122, abs=1e-3)


@pytest.mark.slow
@pytest.mark.parametrize("name", INPUTS)
def test_energy_monotone(name):
    _, traj = vqe_run(name)
    assert np.all(np.diff(traj.energies) <= 0)


@pytest.mark.slow
def test_h3plus_stays_equilateral():
    _, traj = vqe_run("h3plus")
    for rec in traj.records:
        xyz = rec.x.reshape(-1, 3) * BOHR_TO_ANGSTROM
        sides = [np.linalg.norm(xyz[i] - xyz[j]) for i, j in ((0, 1), (1, 2), (0, 2))]
        assert max(sides) - min(sides) < 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("name", INPUTS)
def test_final_energy_bounded_by_fci(name):
    _, traj = vqe_run(name)
    e_fci = fci_energy(traj.molecule, traj.final.x)
    assert e_fci - 1e-10 <= traj.final.energy <= e_fci + 1.6e-3
