"""Restricted Hartree-Fock, MO integral transformation and frozen core.

Two-electron MO integrals are kept in physicist notation,
``<pq|rs> = (pr|qs)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .integrals import AOIntegrals
from .molecule import Molecule, nuclear_repulsion

log = logging.getLogger(__name__)

DIIS_START = 2
DIIS_SIZE = 8


class ScfConvergenceError(RuntimeError):
    pass


class OrbitalMatchingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScfResult:
    mo_coefficients: np.ndarray
    orbital_energies: np.ndarray
    hf_energy: float
    density: np.ndarray  # total (alpha + beta) AO density
    converged: bool
    iterations: int
    n_occupied: int
    overlap: np.ndarray

    def require_converged(self):
        if not self.converged:
            raise ScfConvergenceError(
                f"RHF did not converge in {self.iterations} iterations"
            )


@dataclass(frozen=True)
class ActiveSpaceIntegrals:
    one_body: np.ndarray
    two_body: np.ndarray  # physicist <pq|rs>
    core_energy: float
    n_active_electrons: int

    @property
    def n_active_orbitals(self) -> int:
        return self.one_body.shape[0]


def fix_phases(c: np.ndarray, tie_tol: float = 1e-8) -> np.ndarray:
    """Make the largest-magnitude coefficient of every column positive.

    Coefficients within ``tie_tol`` of the column maximum count as ties and
    the lowest AO index wins.
    """
    c = c.copy()
    for k in range(c.shape[1]):
        col = np.abs(c[:, k])
        idx = int(np.flatnonzero(col >= col.max() - tie_tol)[0])
        if c[idx, k] < 0:
            c[:, k] *= -1
    return c


def _fock(h, eri, p):
    j = np.einsum("ijkl,kl->ij", eri, p)
    k = np.einsum("ikjl,kl->ij", eri, p)
    return h + j - 0.5 * k


def run_rhf(
    molecule: Molecule,
    integrals: AOIntegrals,
    max_iterations: int = 200,
    e_tol: float = 1e-10,
    d_tol: float = 1e-8,
) -> ScfResult:
    n_elec = molecule.n_electrons
    if n_elec % 2:
        raise ValueError("RHF needs an even number of electrons")
    nocc = n_elec // 2
    s = integrals.overlap
    h = integrals.core_hamiltonian
    eri = integrals.eri
    e_nuc = nuclear_repulsion(molecule)

    sval, svec = np.linalg.eigh(s)
    if sval[0] <= 0:
        raise ValueError("overlap matrix is not positive definite")
    x = svec @ np.diag(sval ** -0.5) @ svec.T

    def diagonalize(f):
        eps, cp = np.linalg.eigh(x.T @ f @ x)
        return eps, x @ cp

    eps, c = diagonalize(h)
    p = 2.0 * c[:, :nocc] @ c[:, :nocc].T
    energy = 0.0
    focks, errors = [], []
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        f = _fock(h, eri, p)
        e_new = 0.5 * np.sum(p * (h + f)) + e_nuc
        err = x.T @ (f @ p @ s - s @ p @ f) @ x
        focks.append(f)
        errors.append(err)
        if len(focks) > DIIS_SIZE:
            focks.pop(0)
            errors.pop(0)
        if it > DIIS_START and len(focks) > 1:
            f = _diis(focks, errors)
        eps, c = diagonalize(f)
        p_new = 2.0 * c[:, :nocc] @ c[:, :nocc].T
        d_rms = np.sqrt(np.mean((p_new - p) ** 2))
        de = abs(e_new - energy)
        p, energy = p_new, e_new
        if de < e_tol and d_rms < d_tol:
            converged = True
            break

    # final consistent orbitals and energy from the converged density
    f = _fock(h, eri, p)
    eps, c = diagonalize(f)
    p = 2.0 * c[:, :nocc] @ c[:, :nocc].T
    f = _fock(h, eri, p)
    energy = 0.5 * np.sum(p * (h + f)) + e_nuc
    if not converged:
        log.warning("RHF not converged after %d iterations", it)
    return ScfResult(
        mo_coefficients=fix_phases(c),
        orbital_energies=eps,
        hf_energy=float(energy),
        density=p,
        converged=converged,
        iterations=it,
        n_occupied=nocc,
        overlap=s,
    )


def _diis(focks, errors):
    m = len(focks)
    b = -np.ones((m + 1, m + 1))
    b[m, m] = 0.0
    for i in range(m):
        for j in range(m):
            b[i, j] = np.sum(errors[i] * errors[j])
    rhs = np.zeros(m + 1)
    rhs[m] = -1.0
    try:
        coef = np.linalg.solve(b, rhs)[:m]
    except np.linalg.LinAlgError:
        return focks[-1]
    return sum(ci * fi for ci, fi in zip(coef, focks))


def align_orbitals(
    scf: ScfResult,
    reference_coefficients: np.ndarray,
    reference_energies: np.ndarray,
    degeneracy_tol: float = 1e-3,
    min_overlap: float = 0.9,
) -> tuple[ScfResult, float]:
    """Reorder and re-sign the MOs of ``scf`` to follow a reference set.

    Returns the aligned result and the smallest diagonal overlap with the
    reference orbitals.

    Matching is done separately inside the occupied and the virtual space by
    maximum absolute overlap ``C_ref^T S C``. Reference orbitals that are
    degenerate within ``degeneracy_tol`` are matched as a block with an
    orthogonal Procrustes rotation, since their orientation is arbitrary.
    """
    c = scf.mo_coefficients
    s = scf.overlap
    nocc = scf.n_occupied
    n = c.shape[1]
    m = reference_coefficients.T @ s @ c
    perm = np.empty(n, dtype=int)
    for lo, hi in ((0, nocc), (nocc, n)):
        rows, cols = linear_sum_assignment(-np.abs(m[lo:hi, lo:hi]))
        perm[lo + rows] = lo + cols
    new_c = c[:, perm].copy()
    new_e = scf.orbital_energies[perm].copy()

    blocks = _degenerate_blocks(reference_energies, nocc, degeneracy_tol)
    for block in blocks:
        mb = reference_coefficients[:, block].T @ s @ new_c[:, block]
        if len(block) == 1:
            if mb[0, 0] < 0:
                new_c[:, block] *= -1
            continue
        u, _, vt = np.linalg.svd(mb)
        new_c[:, block] = new_c[:, block] @ (vt.T @ u.T)

    diag = np.abs(np.diag(reference_coefficients.T @ s @ new_c))
    worst = float(diag.min())
    if worst < min_overlap:
        warnings.warn(f"orbital matching overlap {worst:.3f} below {min_overlap}")
    return ScfResult(
        mo_coefficients=new_c,
        orbital_energies=new_e,
        hf_energy=scf.hf_energy,
        density=scf.density,
        converged=scf.converged,
        iterations=scf.iterations,
        n_occupied=nocc,
        overlap=s,
    ), worst


def _degenerate_blocks(energies, nocc, tol):
    blocks = []
    for lo, hi in ((0, nocc), (nocc, len(energies))):
        order = sorted(range(lo, hi), key=lambda k: energies[k])
        current = [order[0]] if order else []
        for a, b in zip(order, order[1:]):
            if abs(energies[b] - energies[a]) < tol:
                current.append(b)
            else:
                blocks.append(sorted(current))
                current = [b]
        if current:
            blocks.append(sorted(current))
    return blocks


def mo_transform(scf: ScfResult, integrals: AOIntegrals) -> tuple[np.ndarray, np.ndarray]:
    """Return (h_pq, <pq|rs>) in the MO basis of ``scf``."""
    c = scf.mo_coefficients
    h = c.T @ integrals.core_hamiltonian @ c
    g = integrals.eri
    g = np.einsum("ijkl,ip->pjkl", g, c)
    g = np.einsum("pjkl,jq->pqkl", g, c)
    g = np.einsum("pqkl,kr->pqrl", g, c)
    g = np.einsum("pqrl,ls->pqrs", g, c)
    # chemist (pr|qs) -> physicist <pq|rs>
    return h, g.transpose(0, 2, 1, 3)


def freeze_core(
    molecule: Molecule, mo_integrals: tuple[np.ndarray, np.ndarray], scf: ScfResult
) -> ActiveSpaceIntegrals:
    h, g = mo_integrals
    ncore = molecule.n_core_orbitals
    if ncore > scf.n_occupied:
        raise ValueError("requested core exceeds the occupied orbitals")
    e_core = nuclear_repulsion(molecule)
    core = slice(0, ncore)
    act = slice(ncore, h.shape[0])
    if ncore:
        gc = g[core, core, core, core]
        e_core += 2.0 * np.trace(h[core, core])
        e_core += 2.0 * np.einsum("cdcd->", gc) - np.einsum("cddc->", gc)
        h_eff = (
            h[act, act]
            + 2.0 * np.einsum("pcqc->pq", g[act, core, act, core])
            - np.einsum("pccq->pq", g[act, core, core, act])
        )
    else:
        h_eff = h[act, act].copy()
    return ActiveSpaceIntegrals(
        one_body=h_eff,
        two_body=np.ascontiguousarray(g[act, act, act, act]),
        core_energy=float(e_core),
        n_active_electrons=molecule.n_electrons - 2 * ncore,
    )
