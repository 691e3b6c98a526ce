"""Molecular data model, input-file parsing and geometric parameters.

Coordinates are stored in Bohr. Angstrom only appears when reading input
files and when reporting bond lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

ANGSTROM_TO_BOHR = 1.8897259886
BOHR_TO_ANGSTROM = 1.0 / ANGSTROM_TO_BOHR

ATOMIC_NUMBERS = {"H": 1, "Be": 4, "O": 8}

MIN_DISTANCE = 0.1  # Bohr


class InputError(ValueError):
    """Raised for malformed molecule input or invalid molecular data."""


@dataclass(frozen=True)
class Molecule:
    symbols: tuple[str, ...]
    coordinates: tuple[float, ...]  # flat, 3M values, Bohr
    net_charge: int = 0
    frozen_core: bool = False

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(
            self, "coordinates", tuple(float(c) for c in np.ravel(self.coordinates))
        )
        if not self.symbols:
            raise InputError("molecule has no atoms")
        for s in self.symbols:
            if s not in ATOMIC_NUMBERS:
                raise InputError(f"unsupported element {s!r}")
        if len(self.coordinates) != 3 * len(self.symbols):
            raise InputError("coordinates must have 3 values per atom")
        n = self.n_electrons
        if n < 2 or n % 2:
            raise InputError(
                f"closed-shell singlet required, got {n} electrons"
            )
        xyz = self.xyz
        for a, b in combinations(range(self.n_atoms), 2):
            if np.linalg.norm(xyz[a] - xyz[b]) < MIN_DISTANCE:
                raise InputError(f"atoms {a} and {b} are closer than {MIN_DISTANCE} Bohr")

    @property
    def n_atoms(self) -> int:
        return len(self.symbols)

    @property
    def charges(self) -> np.ndarray:
        return np.array([ATOMIC_NUMBERS[s] for s in self.symbols], dtype=float)

    @property
    def n_electrons(self) -> int:
        return int(sum(ATOMIC_NUMBERS[s] for s in self.symbols)) - self.net_charge

    @property
    def xyz(self) -> np.ndarray:
        """Coordinates as an (M, 3) array in Bohr."""
        return np.array(self.coordinates).reshape(-1, 3)

    @property
    def n_core_orbitals(self) -> int:
        if not self.frozen_core:
            return 0
        return sum(1 for s in self.symbols if s != "H")

    def with_coordinates(self, x: Sequence[float]) -> "Molecule":
        return replace(self, coordinates=tuple(float(v) for v in np.ravel(x)))


def parse_molecule(text: str) -> Molecule:
    """Parse the line-oriented ``key = value`` / ``geometry:`` input format."""
    keys: dict[str, str] = {}
    atoms: list[tuple[str, tuple[float, float, float]]] = []
    in_geometry = False
    saw_geometry = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            in_geometry = False
            key, _, value = line.partition("=")
            keys[key.strip().lower()] = value.strip()
            continue
        if line.lower() == "geometry:":
            in_geometry = True
            saw_geometry = True
            continue
        if not in_geometry:
            raise InputError(f"line {lineno}: unexpected content {line!r}")
        fields = line.split()
        if len(fields) != 4:
            raise InputError(f"line {lineno}: expected '<Element> <x> <y> <z>'")
        symbol = fields[0].capitalize()
        if symbol not in ATOMIC_NUMBERS:
            raise InputError(f"line {lineno}: unknown element {fields[0]!r}")
        try:
            pos = tuple(float(v) for v in fields[1:])
        except ValueError as exc:
            raise InputError(f"line {lineno}: bad coordinate ({exc})") from None
        atoms.append((symbol, pos))

    if "unit" not in keys:
        raise InputError("missing 'unit' keyword")
    unit = keys["unit"].lower()
    if unit not in ("angstrom", "bohr"):
        raise InputError(f"unit must be angstrom or bohr, got {keys['unit']!r}")
    basis = keys.get("basis", "sto-3g").lower()
    if basis != "sto-3g":
        raise InputError(f"only sto-3g is supported, got {basis!r}")
    try:
        charge = int(keys.get("charge", "0"))
    except ValueError:
        raise InputError(f"charge must be an integer, got {keys['charge']!r}") from None
    frozen = keys.get("frozen_core", "false").lower()
    if frozen not in ("true", "false"):
        raise InputError("frozen_core must be true or false")
    if not saw_geometry or not atoms:
        raise InputError("empty geometry block")

    scale = ANGSTROM_TO_BOHR if unit == "angstrom" else 1.0
    coords = [c * scale for _, pos in atoms for c in pos]
    return Molecule(
        symbols=tuple(s for s, _ in atoms),
        coordinates=tuple(coords),
        net_charge=charge,
        frozen_core=frozen == "true",
    )


def format_molecule(molecule: Molecule) -> str:
    """Serialize to the input format (Bohr, repr precision, lossless)."""
    lines = [
        f"charge = {molecule.net_charge}",
        "basis = sto-3g",
        f"frozen_core = {'true' if molecule.frozen_core else 'false'}",
        "unit = bohr",
        "geometry:",
    ]
    for s, (x, y, z) in zip(molecule.symbols, molecule.xyz):
        lines.append(f"  {s} {float(x)!r} {float(y)!r} {float(z)!r}")
    return "\n".join(lines) + "\n"


def nuclear_repulsion(molecule: Molecule) -> float:
    z = molecule.charges
    xyz = molecule.xyz
    energy = 0.0
    for a, b in combinations(range(molecule.n_atoms), 2):
        r = np.linalg.norm(xyz[a] - xyz[b])
        if r == 0.0:
            raise InputError(f"atoms {a} and {b} coincide")
        energy += z[a] * z[b] / r
    return float(energy)


@dataclass(frozen=True)
class GeometryParams:
    bond_length: float  # Angstrom
    bond_angle: Optional[float] = None  # degrees


def central_atom(molecule: Molecule) -> int:
    """Index of the atom with the smallest summed distance to the others."""
    xyz = molecule.xyz
    dist = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1).sum(axis=1)
    # round so that symmetric ties resolve to the lowest index
    return int(np.argmin(np.round(dist, 9)))


def geometry_params(molecule: Molecule) -> GeometryParams:
    xyz = molecule.xyz
    if molecule.n_atoms == 2:
        d = np.linalg.norm(xyz[1] - xyz[0])
        return GeometryParams(bond_length=float(d * BOHR_TO_ANGSTROM))
    if molecule.n_atoms != 3:
        raise InputError("geometry parameters are defined for 2 or 3 atoms only")
    c = central_atom(molecule)
    a, b = (i for i in range(3) if i != c)
    u, v = xyz[a] - xyz[c], xyz[b] - xyz[c]
    du, dv = np.linalg.norm(u), np.linalg.norm(v)
    cos_phi = np.clip(np.dot(u, v) / (du * dv), -1.0, 1.0)
    return GeometryParams(
        bond_length=float(min(du, dv) * BOHR_TO_ANGSTROM),
        bond_angle=float(np.degrees(np.arccos(cos_phi))),
    )
