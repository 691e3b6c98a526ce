"""STO-3G basis-set data.

The shell data live in ``data/sto-3g.nw`` (NWChem format, copied from the
Basis Set Exchange). Normalization of the primitives and of the contracted
function is folded into the contraction coefficients when a shell is loaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .molecule import InputError, Molecule

_L_LABELS = {"S": 0, "P": 1}

# Cartesian exponents (lx, ly, lz) of the functions generated by one shell.
CARTESIAN = {0: [(0, 0, 0)], 1: [(1, 0, 0), (0, 1, 0), (0, 0, 1)]}


@dataclass(frozen=True)
class BasisShell:
    center_index: int
    angular_momentum: int
    exponents: tuple[float, ...]
    contraction_coefficients: tuple[float, ...]  # normalization folded in

    @property
    def n_functions(self) -> int:
        return len(CARTESIAN[self.angular_momentum])


def _primitive_norm(alpha: float, l: int) -> float:
    # norm of x^l exp(-alpha r^2) for one Cartesian component with l <= 1
    return (2.0 * alpha / math.pi) ** 0.75 * (4.0 * alpha) ** (l / 2.0)


def _normalized(exps, coefs, l):
    exps = np.asarray(exps, dtype=float)
    c = np.asarray(coefs, dtype=float) * np.array([_primitive_norm(a, l) for a in exps])
    p = exps[:, None] + exps[None, :]
    overlap = (math.pi / p) ** 1.5 / (2.0 * p) ** l
    c /= math.sqrt(c @ overlap @ c)
    return tuple(float(v) for v in c)


@lru_cache(maxsize=None)
def _read_basis_file() -> dict[str, list[tuple[int, tuple, tuple]]]:
    text = resources.files("vqegeo").joinpath("data/sto-3g.nw").read_text()
    table: dict[str, list] = {}
    block = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(("BASIS", "END")):
            continue
        fields = line.split()
        if fields[0].isalpha():
            block = {"symbol": fields[0], "kind": fields[1], "rows": []}
            table.setdefault(fields[0], []).append(block)
        else:
            block["rows"].append([float(v.replace("D", "E")) for v in fields])

    shells: dict[str, list[tuple[int, tuple, tuple]]] = {}
    for symbol, blocks in table.items():
        out = []
        for b in blocks:
            rows = np.array(b["rows"])
            exps = tuple(rows[:, 0])
            if b["kind"] == "SP":
                out.append((0, exps, tuple(rows[:, 1])))
                out.append((1, exps, tuple(rows[:, 2])))
            else:
                out.append((_L_LABELS[b["kind"]], exps, tuple(rows[:, 1])))
        shells[symbol] = out
    return shells


def load_basis(symbol: str, center_index: int = 0) -> list[BasisShell]:
    """Return the STO-3G shells of one element."""
    data = _read_basis_file()
    if symbol not in data:
        raise InputError(f"no STO-3G data for element {symbol!r}")
    return [
        BasisShell(center_index, l, exps, _normalized(exps, coefs, l))
        for l, exps, coefs in data[symbol]
    ]


def molecule_shells(molecule: Molecule) -> list[BasisShell]:
    shells = []
    for i, s in enumerate(molecule.symbols):
        shells.extend(load_basis(s, center_index=i))
    return shells


def n_basis_functions(shells: list[BasisShell]) -> int:
    return sum(sh.n_functions for sh in shells)
