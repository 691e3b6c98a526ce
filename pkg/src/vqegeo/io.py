"""Text outputs: trajectory CSV, XYZ geometry, circuit listing, run summary."""

from __future__ import annotations

import re
from typing import Optional

import numpy as np

from .molecule import BOHR_TO_ANGSTROM, Molecule, geometry_params, InputError
from .statevector import Circuit, Gate
from .vqe import Trajectory

_GATE_RE = re.compile(r"^(single|double)\s+\[([\d,\s]+)\]\s+theta=([+-][0-9.eE+-]+)$")


def _g12(v: float) -> str:
    return f"{v:.12g}"


def trajectory_csv(traj: Trajectory) -> str:
    n_x = len(traj.molecule.coordinates)
    n_t = traj.circuit.n_params if traj.circuit is not None else 0
    header = (["iter", "energy_ha", "max_grad_x", "max_grad_theta"]
              + [f"x_{i}" for i in range(n_x)] + [f"theta_{k}" for k in range(n_t)])
    lines = [",".join(header)]
    for r in traj.records:
        row = [str(r.iteration), _g12(r.energy), _g12(r.max_grad_x), _g12(r.max_grad_theta)]
        row += [_g12(v) for v in r.x]
        row += [_g12(v) for v in r.theta[:n_t]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def xyz_text(molecule: Molecule, comment: str = "") -> str:
    lines = [str(molecule.n_atoms), comment]
    for sym, pos in zip(molecule.symbols, molecule.xyz * BOHR_TO_ANGSTROM):
        lines.append(f"{sym:<2} {pos[0]:16.10f} {pos[1]:16.10f} {pos[2]:16.10f}")
    return "\n".join(lines) + "\n"


def circuit_text(circuit: Circuit, theta=None) -> str:
    theta = np.zeros(circuit.n_params) if theta is None else np.asarray(theta, dtype=float)
    lines = [
        f"{g.kind} [{','.join(map(str, g.qubits))}] theta={theta[g.angle_index]:+.9f}"
        for g in circuit.gates
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_circuit(text: str, n_qubits: int, hf_occupations: str) -> tuple[Circuit, np.ndarray]:
    gates, theta = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise InputError(f"malformed gate line: {line!r}")
        qubits = tuple(int(q) for q in m.group(2).split(","))
        gates.append(Gate(m.group(1), qubits, len(theta)))
        theta.append(float(m.group(3)))
    return Circuit(n_qubits, hf_occupations, gates), np.array(theta)


def summary_text(traj: Trajectory, fci_energy: Optional[float] = None) -> str:
    final = traj.final
    geo = geometry_params(traj.final_molecule) if traj.molecule.n_atoms in (2, 3) else None
    lines = [
        f"status: {traj.status}",
        f"iterations: {final.iteration}",
        f"final energy (Ha): {final.energy:.10f}",
        f"max |grad x| (Ha/Bohr): {final.max_grad_x:.3e}",
        f"max |grad theta| (Ha): {final.max_grad_theta:.3e}",
    ]
    if traj.circuit is not None:
        c = traj.circuit.counts()
        lines.append(f"gates: {c['double']} double, {c['single']} single")
    if geo is not None:
        lines.append(f"bond length d (Angstrom): {geo.bond_length:.6f}")
        if geo.bond_angle is not None:
            lines.append(f"bond angle phi (degrees): {geo.bond_angle:.4f}")
    if fci_energy is not None:
        err = final.energy - fci_energy
        lines.append(f"FCI energy at final geometry (Ha): {fci_energy:.10f}")
        lines.append(f"E - E_FCI (Ha): {err:.3e}"
                     f" ({'within' if abs(err) <= 1.6e-3 else 'outside'} chemical accuracy)")
    if traj.message:
        lines.append(f"message: {traj.message}")
    return "\n".join(lines) + "\n"
