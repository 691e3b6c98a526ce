"""Fermionic ladder-operator algebra and the Jordan-Wigner mapping."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .pauli import PRUNE_THRESHOLD, PauliSum, masks_to_word

Ladder = tuple[int, bool]  # (mode, is_creation)
Term = tuple[float, tuple[Ladder, ...]]


class MappingError(RuntimeError):
    """Jordan-Wigner produced a non-hermitian (complex) coefficient."""


@dataclass
class FermionOperator:
    """Sum of coefficient-weighted products of ladder operators.

    ``((2, True), (0, False))`` stands for ``c_2^dagger c_0``; an empty product
    is the identity.
    """

    terms: list[Term] = field(default_factory=list)

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        return FermionOperator(self.terms + other.terms)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other * -1.0

    def __mul__(self, scalar: float) -> "FermionOperator":
        return FermionOperator([(c * scalar, p) for c, p in self.terms])

    __rmul__ = __mul__

    @property
    def max_mode(self) -> int:
        return max((m for _, p in self.terms for m, _ in p), default=-1)

    def adjoint(self) -> "FermionOperator":
        return FermionOperator(
            [(c, tuple((m, not d) for m, d in reversed(p))) for c, p in self.terms]
        )

    def normal_ordered(self, tol: float = 0.0) -> dict[tuple[Ladder, ...], float]:
        """Canonical form: creators first, each group by descending mode."""
        out: dict[tuple[Ladder, ...], float] = defaultdict(float)
        stack = [(c, list(p)) for c, p in self.terms]
        while stack:
            coef, ops = stack.pop()
            done = True
            for i in range(len(ops) - 1):
                (m1, d1), (m2, d2) = ops[i], ops[i + 1]
                if d1 == d2:
                    if m1 == m2:
                        done = True
                        coef = 0.0
                        break
                    if m1 < m2:
                        ops[i], ops[i + 1] = ops[i + 1], ops[i]
                        coef = -coef
                        done = False
                        break
                elif not d1 and d2:
                    # c_a c_b^dagger = delta_ab - c_b^dagger c_a
                    if m1 == m2:
                        stack.append((coef, ops[:i] + ops[i + 2:]))
                    ops[i], ops[i + 1] = ops[i + 1], ops[i]
                    coef = -coef
                    done = False
                    break
            if coef == 0.0:
                continue
            if done:
                out[tuple(ops)] += coef
            else:
                stack.append((coef, ops))
        return {k: v for k, v in out.items() if abs(v) > tol}

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        a = self.normal_ordered()
        b = self.adjoint().normal_ordered()
        keys = set(a) | set(b)
        return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)


def jordan_wigner(
    operator: FermionOperator, n_qubits: int, prune: float = PRUNE_THRESHOLD
) -> PauliSum:
    """Map a hermitian fermion operator to a real PauliSum.

    ``c_p^dagger = Z_0 ... Z_{p-1} (X_p - i Y_p) / 2``. Internally every
    string is ``X^x Z^z`` with integer bit masks; since ``-iY = XZ`` the two
    halves of a ladder operator are ``X_p Z_<p`` and ``X_p Z_<=p``.
    """
    if operator.max_mode >= n_qubits:
        raise ValueError("operator acts on a mode beyond the qubit register")
    coefs = np.array([c for c, _ in operator.terms], dtype=complex)
    keys, vals, source = jw_components([p for _, p in operator.terms], n_qubits)
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=complex)
    np.add.at(summed, inv, vals * coefs[source])
    if np.any(np.abs(summed.imag) > 1e-10):
        raise MappingError("non-hermitian operator: complex Pauli coefficient")
    n = n_qubits
    terms: dict[str, float] = {}
    for key, c in zip(uniq, summed.real):
        if abs(c) >= prune:
            terms[masks_to_word(int(key) >> n, int(key) & ((1 << n) - 1), n)] = float(c)
    return PauliSum(n, terms, prune=prune)


def popcount(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.int64)
    count = np.zeros_like(v)
    while np.any(v):
        count += v & 1
        v = v >> 1
    return count


def jw_components(products, n_qubits: int):
    """Pauli strings produced by each ladder product, before summation.

    Returns ``(keys, values, source)``: string ``keys[j]`` (``x << n | z``)
    appears with weight ``values[j]`` in the image of ``products[source[j]]``.
    """
    n = n_qubits
    by_len: dict[int, list[int]] = defaultdict(list)
    for t, prod in enumerate(products):
        by_len[len(prod)].append(t)

    keys_x, keys_z, values, sources = [], [], [], []
    for k, members in sorted(by_len.items()):
        members = np.array(members, dtype=np.int64)
        if k == 0:
            keys_x.append(np.zeros(len(members), dtype=np.int64))
            keys_z.append(np.zeros(len(members), dtype=np.int64))
            values.append(np.ones(len(members), dtype=complex))
            sources.append(members)
            continue
        modes = np.array([[m for m, _ in products[t]] for t in members], dtype=np.int64)
        dags = np.array([[d for _, d in products[t]] for t in members], dtype=bool)
        bit = np.left_shift(1, n - 1 - modes)
        low = np.left_shift(np.left_shift(1, modes) - 1, n - modes)
        for choice in range(1 << k):
            x = np.zeros(len(members), dtype=np.int64)
            z = np.zeros(len(members), dtype=np.int64)
            val = np.full(len(members), 0.5 ** k, dtype=complex)
            for f in range(k):
                with_z = (choice >> f) & 1
                xf = bit[:, f]
                zf = low[:, f] | (bit[:, f] if with_z else 0)
                if with_z:
                    val = np.where(dags[:, f], val, -val)
                # (X^x Z^z)(X^xf Z^zf) = (-1)^{|z & xf|} X^(x^xf) Z^(z^zf)
                val = np.where((z & xf) != 0, -val, val)
                x ^= xf
                z ^= zf
            keys_x.append(x)
            keys_z.append(z)
            values.append(val)
            sources.append(members)

    x = np.concatenate(keys_x)
    z = np.concatenate(keys_z)
    val = np.concatenate(values)
    # X^x Z^z = (-i)^{n_Y} P_word
    val = val * (-1j) ** popcount(x & z)
    return x * (1 << n) + z, val, np.concatenate(sources)
