"""Real-weighted sums of Pauli strings.

A string is stored as a word over ``IXYZ`` with character ``q`` acting on
qubit ``q``. Qubit 0 is the most significant bit of a basis-state index,
so qubit ``q`` maps to bit ``n_qubits - 1 - q``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

PRUNE_THRESHOLD = 1e-12

_TERM_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?\d+)?)\s*\[([^\]]*)\]\s*$")


@lru_cache(maxsize=None)
def parity_table(n_qubits: int) -> np.ndarray:
    """Parity of the popcount of every integer below ``2**n_qubits``."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    par = np.zeros_like(idx)
    v = idx.copy()
    while v.any():
        par ^= v & 1
        v >>= 1
    return par.astype(np.int8)


def word_to_masks(word: str) -> tuple[int, int]:
    n = len(word)
    x = z = 0
    for q, ch in enumerate(word):
        bit = 1 << (n - 1 - q)
        if ch in "XY":
            x |= bit
        if ch in "ZY":
            z |= bit
    return x, z


def masks_to_word(x: int, z: int, n_qubits: int) -> str:
    chars = []
    for q in range(n_qubits):
        bit = 1 << (n_qubits - 1 - q)
        chars.append("IZXY"[bool(x & bit) * 2 + bool(z & bit)])
    return "".join(chars)


class PauliSum:
    """Hermitian observable ``sum_j h_j P_j`` with real coefficients."""

    def __init__(self, n_qubits: int, terms: Mapping[str, float] | None = None,
                 prune: float = PRUNE_THRESHOLD):
        self.n_qubits = n_qubits
        self.terms: dict[str, float] = {}
        for word, coef in (terms or {}).items():
            if len(word) != n_qubits or set(word) - set("IXYZ"):
                raise ValueError(f"bad Pauli word {word!r} for {n_qubits} qubits")
            if abs(coef) >= prune:
                self.terms[word] = float(coef)
        self._groups = None
        self._matrix = None

    @classmethod
    def identity(cls, n_qubits: int, coef: float = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coef})

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __repr__(self):
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"

    def coefficient(self, word: str) -> float:
        return self.terms.get(word, 0.0)

    @property
    def identity_coefficient(self) -> float:
        return self.terms.get("I" * self.n_qubits, 0.0)

    def _combine(self, other: "PauliSum", sign: float) -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0.0) + sign * c
        return PauliSum(self.n_qubits, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar: float):
        return PauliSum(self.n_qubits, {w: c * scalar for w, c in self.terms.items()})

    __rmul__ = __mul__

    def _action_groups(self):
        # terms sharing an X mask act as (permutation) x (diagonal)
        if self._groups is None:
            n = self.n_qubits
            par = parity_table(n)
            idx = np.arange(1 << n, dtype=np.int64)
            by_x: dict[int, np.ndarray] = {}
            for word, coef in sorted(self.terms.items()):
                x, z = word_to_masks(word)
                ny = bin(x & z).count("1")
                signs = 1.0 - 2.0 * par[idx & z]
                d = by_x.setdefault(x, np.zeros(1 << n, dtype=complex))
                d += coef * (1j ** ny) * signs
            self._groups = [(x, d) for x, d in sorted(by_x.items())]
        return self._groups

    def sparse_matrix(self) -> sparse.csr_matrix:
        """Sparse 2^N x 2^N matrix assembled from the grouped string actions."""
        if self._matrix is None:
            dim = 1 << self.n_qubits
            idx = np.arange(dim, dtype=np.int64)
            rows, cols, vals = [], [], []
            for x, d in self._action_groups():
                nz = np.flatnonzero(d)
                rows.append(idx[nz] ^ x)
                cols.append(nz)
                vals.append(d[nz])
            if rows:
                rows, cols, vals = map(np.concatenate, (rows, cols, vals))
            self._matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
        return self._matrix

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        if amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("state size does not match the qubit count")
        return self.sparse_matrix() @ amplitudes

    def string_expectations(self, amplitudes: np.ndarray) -> dict[str, float]:
        """<psi|P|psi> for every string of this sum, one string at a time."""
        return string_expectations(amplitudes, self.n_qubits, self.terms)

    def to_text(self) -> str:
        lines = [f"# n_qubits={self.n_qubits}"]
        for word, coef in self.terms.items():
            ops = " ".join(f"{ch}{q}" for q, ch in enumerate(word) if ch != "I")
            lines.append(f"{coef:+.16e} [{ops}]")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        parsed: list[tuple[float, list[tuple[str, int]]]] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*n_qubits\s*=\s*(\d+)", line)
                if m and n_qubits is None:
                    n_qubits = int(m.group(1))
                continue
            m = _TERM_RE.match(line)
            if not m:
                raise ValueError(f"malformed Pauli term line: {line!r}")
            ops = []
            for tok in m.group(2).split():
                if tok[0] not in "XYZ" or not tok[1:].isdigit():
                    raise ValueError(f"malformed Pauli factor {tok!r}")
                ops.append((tok[0], int(tok[1:])))
            parsed.append((float(m.group(1)), ops))
        if n_qubits is None:
            n_qubits = 1 + max((q for _, ops in parsed for _, q in ops), default=0)
        terms: dict[str, float] = {}
        for coef, ops in parsed:
            word = ["I"] * n_qubits
            for ch, q in ops:
                word[q] = ch
            key = "".join(word)
            terms[key] = terms.get(key, 0.0) + coef
        return cls(n_qubits, terms, prune=0.0)


def string_expectations(amplitudes: np.ndarray, n_qubits: int, words) -> dict[str, float]:
    """<psi|P|psi> for each word; strings sharing an X mask share one product."""
    par = parity_table(n_qubits)
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    groups: dict[int, list[tuple[str, int]]] = {}
    for word in words:
        x, z = word_to_masks(word)
        groups.setdefault(x, []).append((word, z))
    out = {}
    for x, members in groups.items():
        prod = np.conj(amplitudes[idx ^ x]) * amplitudes
        zs = np.array([z for _, z in members], dtype=np.int64)
        signs = 1.0 - 2.0 * par[idx[None, :] & zs[:, None]]
        vals = signs @ prod
        for (word, z), v in zip(members, vals):
            phase = 1j ** bin(x & z).count("1")
            out[word] = float((phase * v).real)
    return out


def pauli_sum_from_masks(
    n_qubits: int, keys: Iterable[tuple[int, int]], coefs: Iterable[float]
) -> PauliSum:
    return PauliSum(
        n_qubits, {masks_to_word(x, z, n_qubits): c for (x, z), c in zip(keys, coefs)}
    )
