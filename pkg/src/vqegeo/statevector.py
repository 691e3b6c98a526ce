"""Dense statevector simulation of particle-conserving excitation circuits.

Basis-state labels are bitstrings ``q0 q1 ... q_{N-1}`` with qubit 0 the most
significant bit, so ``|1100>`` on four qubits is index 12. Gate angles use
the full-angle convention ``cos(theta), sin(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .pauli import PauliSum

MAX_QUBITS = 16


class ExpectationError(RuntimeError):
    pass


@dataclass
class Statevector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits supported")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude vector has the wrong length")

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.n_qubits)


def _bits(occupations) -> str:
    if isinstance(occupations, str):
        s = occupations
    else:
        s = "".join(str(int(b)) for b in occupations)
    if set(s) - {"0", "1"}:
        raise ValueError(f"occupations must be 0/1, got {occupations!r}")
    return s


def basis_state(occupations) -> Statevector:
    bits = _bits(occupations)
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return Statevector(amps, len(bits))


def hf_occupations(n_electrons: int, n_qubits: int) -> str:
    return "1" * n_electrons + "0" * (n_qubits - n_electrons)


@lru_cache(maxsize=None)
def _pattern_indices(n_qubits: int, qubits: tuple[int, ...], pattern: str) -> np.ndarray:
    """Indices whose bits on ``qubits`` read ``pattern``."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    keep = np.ones(1 << n_qubits, dtype=bool)
    for q, b in zip(qubits, pattern):
        keep &= ((idx >> (n_qubits - 1 - q)) & 1) == int(b)
    return idx[keep]


def _check_qubits(qubits, n, k):
    qubits = tuple(int(q) for q in qubits)
    if len(qubits) != k or any(b <= a for a, b in zip(qubits, qubits[1:])):
        raise ValueError(f"expected {k} strictly increasing qubit indices, got {qubits}")
    if qubits[0] < 0 or qubits[-1] >= n:
        raise ValueError(f"qubit index out of range for {n} qubits")
    return qubits


def _rotate(amps, i_low, i_high, theta):
    # |low> -> cos|low> - sin|high>, |high> -> sin|low> + cos|high>
    c, s = np.cos(theta), np.sin(theta)
    lo = amps[i_low]
    hi = amps[i_high]
    amps[i_low] = c * lo + s * hi
    amps[i_high] = c * hi - s * lo


def _single_inplace(amps, n, theta, qubits):
    # |10> -> cos|10> - sin|01>
    _rotate(amps, _pattern_indices(n, qubits, "10"), _pattern_indices(n, qubits, "01"), theta)


def _double_inplace(amps, n, theta, qubits):
    _rotate(amps, _pattern_indices(n, qubits, "1100"), _pattern_indices(n, qubits, "0011"), theta)


def apply_single_excitation(state: Statevector, theta: float, qubits: Sequence[int]) -> Statevector:
    qubits = _check_qubits(qubits, state.n_qubits, 2)
    out = state.copy()
    _single_inplace(out.amplitudes, out.n_qubits, theta, qubits)
    return out


def apply_double_excitation(state: Statevector, theta: float, qubits: Sequence[int]) -> Statevector:
    qubits = _check_qubits(qubits, state.n_qubits, 4)
    out = state.copy()
    _double_inplace(out.amplitudes, out.n_qubits, theta, qubits)
    return out


@dataclass(frozen=True)
class Gate:
    kind: str  # "single" | "double"
    qubits: tuple[int, ...]
    angle_index: int

    def __post_init__(self):
        if self.kind not in ("single", "double"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != (2 if self.kind == "single" else 4):
            raise ValueError(f"{self.kind} gate needs {2 if self.kind == 'single' else 4} qubits")


@dataclass
class Circuit:
    n_qubits: int
    hf_occupations: str
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        self.hf_occupations = _bits(self.hf_occupations)
        if len(self.hf_occupations) != self.n_qubits:
            raise ValueError("reference bitstring length differs from n_qubits")
        for g in self.gates:
            _check_qubits(g.qubits, self.n_qubits, len(g.qubits))

    @property
    def n_params(self) -> int:
        return 1 + max((g.angle_index for g in self.gates), default=-1)

    def add(self, kind: str, qubits: Sequence[int]) -> "Circuit":
        """Return a copy with one more gate on a fresh angle slot."""
        gate = Gate(kind, tuple(qubits), self.n_params)
        return Circuit(self.n_qubits, self.hf_occupations, self.gates + [gate])

    def counts(self) -> dict[str, int]:
        return {
            "single": sum(g.kind == "single" for g in self.gates),
            "double": sum(g.kind == "double" for g in self.gates),
        }


def run_circuit(circuit: Circuit, theta: Sequence[float]) -> Statevector:
    theta = np.asarray(theta, dtype=float)
    if len(theta) < circuit.n_params:
        raise ValueError(f"circuit needs {circuit.n_params} angles, got {len(theta)}")
    state = basis_state(circuit.hf_occupations)
    amps = state.amplitudes
    n = circuit.n_qubits
    for g in circuit.gates:
        if g.kind == "single":
            _single_inplace(amps, n, theta[g.angle_index], g.qubits)
        else:
            _double_inplace(amps, n, theta[g.angle_index], g.qubits)
    return state


def expectation(state: Statevector, observable: PauliSum) -> float:
    if state.n_qubits != observable.n_qubits:
        raise ValueError("state and observable have different qubit counts")
    val = np.vdot(state.amplitudes, observable.apply(state.amplitudes))
    if abs(val.imag) > 1e-10:
        raise ExpectationError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)
