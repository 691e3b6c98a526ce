"""Cost function, gradients, adaptive circuit construction and the joint
optimization of circuit angles and nuclear coordinates."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .hamiltonian import (
    ElectronicStructure,
    displaced_structure,
    electronic_structure,
    hamiltonian_derivative,
    integral_vector,
    pauli_basis,
    qubit_hamiltonian,
)
from .molecule import GeometryParams, Molecule, geometry_params
from .pauli import PauliSum, string_expectations
from .scf import OrbitalMatchingError, ScfConvergenceError, ScfResult
from .statevector import Circuit, Statevector, expectation, hf_occupations, run_circuit

log = logging.getLogger(__name__)

# four-term shift rule for generators with eigenvalues {0, +1, -1}
SHIFT_PLUS = (math.sqrt(2) + 1) / (2 * math.sqrt(2))
SHIFT_MINUS = (math.sqrt(2) - 1) / (2 * math.sqrt(2))


@dataclass(frozen=True)
class Excitation:
    kind: str
    occupied: tuple[int, ...]
    virtual: tuple[int, ...]

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(sorted(self.occupied + self.virtual))


@dataclass
class OptimizerConfig:
    step_theta: float = 0.25
    step_x: float = 0.2  # Bohr per (Ha/Bohr)
    grad_tolerance_x: float = 1e-5  # Ha/Bohr
    max_iterations: int = 500
    fd_delta: float = 0.01  # Bohr
    adaptive_grad_threshold: float = 1e-5  # Ha
    threads: int = 1

    def __post_init__(self):
        for name in ("step_theta", "step_x", "grad_tolerance_x", "fd_delta",
                     "adaptive_grad_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1 or self.threads < 1:
            raise ValueError("max_iterations and threads must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    theta: np.ndarray
    x: np.ndarray
    max_grad_x: float
    max_grad_theta: float


@dataclass
class Trajectory:
    molecule: Molecule
    circuit: Optional[Circuit]
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "running"  # converged | max_iterations | error
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def final_molecule(self) -> Molecule:
        return self.molecule.with_coordinates(self.final.x)

    @property
    def final_geometry(self) -> GeometryParams:
        return geometry_params(self.final_molecule)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])


def generate_excitations(n_electrons: int, n_spin_orbitals: int):
    """All Sz-conserving singles and doubles out of the leading-filled reference."""
    if n_electrons % 2 or n_electrons >= n_spin_orbitals:
        raise ValueError("need an even electron count below the spin-orbital count")
    occ = range(n_electrons)
    virt = range(n_electrons, n_spin_orbitals)
    singles = [
        Excitation("single", (i,), (a,))
        for i in occ for a in virt if i % 2 == a % 2
    ]
    doubles = [
        Excitation("double", (i, j), (a, b))
        for i in occ for j in occ if i < j
        for a in virt for b in virt if a < b
        if (i % 2 + j % 2) == (a % 2 + b % 2)
    ]
    return singles, doubles


def circuit_from_excitations(n_qubits: int, n_electrons: int,
                             excitations: Sequence[Excitation]) -> Circuit:
    circuit = Circuit(n_qubits, hf_occupations(n_electrons, n_qubits))
    for ex in excitations:
        circuit = circuit.add(ex.kind, ex.qubits)
    return circuit


def shift_rule(f: Callable[[float], float], theta: float) -> float:
    """Exact derivative of ``f`` if it only contains frequencies 1 and 2."""
    return (SHIFT_PLUS * (f(theta + math.pi / 4) - f(theta - math.pi / 4))
            - SHIFT_MINUS * (f(theta + 3 * math.pi / 4) - f(theta - 3 * math.pi / 4)))


def grad_theta(circuit: Circuit, theta: Sequence[float], hamiltonian: PauliSum,
               slots: Optional[Sequence[int]] = None) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    slots = range(circuit.n_params) if slots is None else slots
    grads = np.zeros(len(theta))

    for k in slots:
        def g(angle, k=k):
            shifted = theta.copy()
            shifted[k] = angle
            return expectation(run_circuit(circuit, shifted), hamiltonian)
        grads[k] = shift_rule(g, theta[k])
    return grads


def cost(circuit: Circuit, theta, molecule: Molecule, x=None,
         reference: Optional[ScfResult] = None) -> float:
    es = electronic_structure(molecule, x, reference)
    return expectation(run_circuit(circuit, theta), qubit_hamiltonian(es.active))


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def nuclear_gradient(state: Statevector, molecule: Molecule, x, fd_delta: float,
                     reference: ScfResult, threads: int = 1) -> np.ndarray:
    """Expectation values of all central-difference observables dH/dx_i.

    Equivalent to ``expectation(state, hamiltonian_derivative(...))`` per
    coordinate. Pauli coefficients depend linearly on the active-space
    integrals, so each derivative observable is evaluated from the integral
    differences and one shared set of string expectation values.
    """
    x = np.asarray(x, dtype=float)
    jobs = [(i, s) for i in range(len(x)) for s in (1.0, -1.0)]
    vecs = _map(
        lambda job: integral_vector(
            displaced_structure(molecule, x, job[0], job[1] * fd_delta, reference).active),
        jobs, threads)
    matrix, words = pauli_basis(state.n_qubits // 2)
    diffs = np.array([vecs[2 * i] - vecs[2 * i + 1] for i in range(len(x))])
    coefs = (matrix @ diffs.T).real * (0.5 / fd_delta)
    rows = np.flatnonzero(np.any(coefs != 0.0, axis=1))
    ev = string_expectations(state.amplitudes, state.n_qubits, [words[r] for r in rows])
    ev = np.array([ev[words[r]] for r in rows])
    coefs = coefs[rows]
    return coefs.T @ ev


def grad_x(circuit: Circuit, theta, molecule: Molecule, x=None, fd_delta: float = 0.01,
           reference: Optional[ScfResult] = None) -> np.ndarray:
    """Nuclear gradient: expectation of each derivative observable in |Psi(theta)>."""
    x = np.asarray(molecule.coordinates if x is None else x, dtype=float)
    if reference is None:
        reference = electronic_structure(molecule, x).scf
    state = run_circuit(circuit, theta)
    return np.array([
        expectation(state, hamiltonian_derivative(molecule, x, i, fd_delta, reference))
        for i in range(len(x))
    ])


@dataclass
class AdaptiveReport:
    circuit: Circuit
    singles: list[Excitation]
    doubles: list[Excitation]
    double_gradients: np.ndarray
    single_gradients: np.ndarray
    selected_doubles: list[Excitation]
    selected_singles: list[Excitation]
    doubles_theta: np.ndarray
    doubles_iterations: int

    @property
    def n_candidates(self) -> int:
        return len(self.singles) + len(self.doubles)

    @property
    def n_selected(self) -> int:
        return len(self.selected_singles) + len(self.selected_doubles)


DOUBLES_GRAD_TOL = 1e-5
DOUBLES_MAX_ITER = 500


def adaptive_select(molecule: Molecule, x0=None, config: Optional[OptimizerConfig] = None,
                    structure: Optional[ElectronicStructure] = None) -> AdaptiveReport:
    """Gradient-screened circuit construction at fixed geometry ``x0``."""
    config = config or OptimizerConfig()
    es = structure or electronic_structure(molecule, x0)
    hamiltonian = qubit_hamiltonian(es.active)
    n_qubits = es.n_qubits
    n_elec = es.active.n_active_electrons
    thr = config.adaptive_grad_threshold
    singles, doubles = generate_excitations(n_elec, n_qubits)

    # all doubles at theta = 0, keep the ones with non-zero gradient
    full = circuit_from_excitations(n_qubits, n_elec, doubles)
    g_doubles = grad_theta(full, np.zeros(full.n_params), hamiltonian)
    kept = [ex for ex, g in zip(doubles, g_doubles) if abs(g) > thr]

    # optimize the kept doubles at fixed geometry
    circuit = circuit_from_excitations(n_qubits, n_elec, kept)
    theta = np.zeros(circuit.n_params)
    it = 0
    for it in range(1, DOUBLES_MAX_ITER + 1):
        g = grad_theta(circuit, theta, hamiltonian)
        if not len(g) or np.max(np.abs(g)) <= DOUBLES_GRAD_TOL:
            break
        theta = theta - config.step_theta * g

    # singles screened after the optimized doubles
    with_singles = circuit_from_excitations(n_qubits, n_elec, kept + singles)
    theta_s = np.concatenate([theta, np.zeros(len(singles))])
    g_singles = grad_theta(with_singles, theta_s, hamiltonian,
                           slots=range(len(kept), len(kept) + len(singles)))[len(kept):]
    kept_singles = [ex for ex, g in zip(singles, g_singles) if abs(g) > thr]

    # kept doubles in their original order, then kept singles
    final = circuit_from_excitations(n_qubits, n_elec, kept + kept_singles)
    if not final.gates:
        warnings.warn("adaptive selection kept no gates; using the Hartree-Fock state")
    log.info("adaptive: %d doubles + %d singles selected out of %d candidates",
             len(kept), len(kept_singles), len(singles) + len(doubles))
    return AdaptiveReport(
        circuit=final,
        singles=singles,
        doubles=doubles,
        double_gradients=g_doubles,
        single_gradients=g_singles,
        selected_doubles=kept,
        selected_singles=kept_singles,
        doubles_theta=theta,
        doubles_iterations=it,
    )


def adaptive_build(molecule: Molecule, x0=None, config: Optional[OptimizerConfig] = None) -> Circuit:
    return adaptive_select(molecule, x0, config).circuit


def rigid_body_basis(x) -> np.ndarray:
    """Orthonormal rows spanning rigid translations and rotations of ``x``.

    Rotations are taken about the centroid; linear and single-atom
    geometries lose the degenerate rotations through the rank cut.
    """
    xyz = np.asarray(x, dtype=float).reshape(-1, 3)
    r = xyz - xyz.mean(axis=0)
    modes = []
    for axis in np.eye(3):
        modes.append(np.tile(axis, len(xyz)))
        modes.append(np.cross(axis, r).ravel())
    _, s, vt = np.linalg.svd(np.array(modes), full_matrices=False)
    return vt[s > 1e-8 * max(s[0], 1.0)]


def project_internal(gradient, x) -> np.ndarray:
    """Remove rigid translation and rotation components from a Cartesian gradient.

    The exact gradient has none; the central-difference one carries an
    O(delta^2) residual along them that descent could never remove.
    """
    basis = rigid_body_basis(x)
    g = np.asarray(gradient, dtype=float)
    return g - basis.T @ (basis @ g)


def _descend(molecule, x0, config, prepare, callback=None) -> Trajectory:
    """Shared gradient-descent loop.

    ``prepare(hamiltonian, structure)`` returns the state at the current
    point, the circuit-angle gradient and a function that applies the angle
    update. Coordinates move along the nuclear gradient with rigid-body
    components projected out, and the stop rule uses the same projection.
    """
    x = np.array(molecule.coordinates if x0 is None else x0, dtype=float)
    traj = Trajectory(molecule=molecule, circuit=None)
    reference = None
    for k in range(config.max_iterations + 1):
        try:
            es = electronic_structure(molecule, x, reference)
            hamiltonian = qubit_hamiltonian(es.active)
            state, theta, g_theta, update = prepare(hamiltonian, es)
            energy = expectation(state, hamiltonian)
            g_x = project_internal(
                nuclear_gradient(state, molecule, x, config.fd_delta, es.scf, config.threads), x)
        except (ScfConvergenceError, OrbitalMatchingError) as exc:
            traj.status = "error"
            traj.message = str(exc)
            log.error("aborting at iteration %d: %s", k, exc)
            return traj
        rec = IterationRecord(
            iteration=k,
            energy=energy,
            theta=np.array(theta, dtype=float),
            x=x.copy(),
            max_grad_x=float(np.max(np.abs(g_x))),
            max_grad_theta=float(np.max(np.abs(g_theta))) if len(g_theta) else 0.0,
        )
        traj.records.append(rec)
        if callback:
            callback(rec)
        log.debug("iter %d E=%.10f |gx|=%.2e |gt|=%.2e", k, energy, rec.max_grad_x,
                  rec.max_grad_theta)
        if rec.max_grad_x <= config.grad_tolerance_x:
            traj.status = "converged"
            return traj
        if k == config.max_iterations:
            break
        update(g_theta)
        x = x - config.step_x * g_x
        reference = es.scf
    traj.status = "max_iterations"
    return traj


def joint_optimize(molecule: Molecule, x0, circuit: Circuit,
                   config: Optional[OptimizerConfig] = None,
                   theta0: Optional[Sequence[float]] = None,
                   callback=None) -> Trajectory:
    """Simultaneous gradient descent on circuit angles and nuclear coordinates."""
    config = config or OptimizerConfig()
    theta = np.zeros(circuit.n_params) if theta0 is None else np.array(theta0, dtype=float)
    box = {"theta": theta}

    def prepare(hamiltonian, es):
        if es.n_qubits != circuit.n_qubits:
            raise ValueError("circuit and Hamiltonian qubit counts differ")
        th = box["theta"]
        g = grad_theta(circuit, th, hamiltonian)

        def update(g_theta):
            box["theta"] = th - config.step_theta * g_theta

        return run_circuit(circuit, th), th, g, update

    traj = _descend(molecule, x0, config, prepare, callback)
    traj.circuit = circuit
    return traj
