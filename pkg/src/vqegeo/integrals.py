"""One- and two-electron integrals over contracted Cartesian Gaussians.

McMurchie-Davidson scheme: products of Gaussians are expanded in Hermite
Gaussians (``E`` coefficients) and Coulomb-type integrals are assembled from
Hermite Coulomb integrals ``R`` built on the Boys function. Only s and p
functions are needed for STO-3G on H, Be and O.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .basis import CARTESIAN, BasisShell, molecule_shells
from .molecule import Molecule

BOYS_SWITCH = 12.0


@njit(cache=True)
def boys_array(nmax, t):
    """Return ``F_m(t)`` for ``m = 0..nmax``."""
    f = np.empty(nmax + 1)
    if t < BOYS_SWITCH:
        # Kummer series for the highest order, all terms positive
        term = 1.0 / (2 * nmax + 1)
        total = term
        k = 0
        while term > 1e-16 * total:
            k += 1
            term *= 2.0 * t / (2 * nmax + 2 * k + 1)
            total += term
        et = math.exp(-t)
        f[nmax] = et * total
        for m in range(nmax - 1, -1, -1):
            f[m] = (2.0 * t * f[m + 1] + et) / (2 * m + 1)
    else:
        et = math.exp(-t)
        f[0] = 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))
        for m in range(nmax):
            f[m + 1] = ((2 * m + 1) * f[m] - et) / (2.0 * t)
    return f


def boys(m: int, t: float) -> float:
    if m < 0 or t < 0:
        raise ValueError("boys requires m >= 0 and t >= 0")
    return float(boys_array(m, float(t))[m])


@njit(cache=True)
def hermite_e(la, lb, a, b, qx):
    """Hermite expansion coefficients E[i, j, t] for i <= la, j <= lb.

    ``qx`` is the separation A_x - B_x of the two centers.
    """
    p = a + b
    xpa = -b / p * qx
    xpb = a / p * qx
    e = np.zeros((la + 1, lb + 1, la + lb + 2))
    e[0, 0, 0] = math.exp(-a * b / p * qx * qx)
    for i in range(la + 1):
        for j in range(lb + 1):
            if i == 0 and j == 0:
                continue
            for t in range(i + j + 1):
                if i > 0:
                    v = xpa * e[i - 1, j, t] + (t + 1) * e[i - 1, j, t + 1]
                    if t > 0:
                        v += e[i - 1, j, t - 1] / (2.0 * p)
                else:
                    v = xpb * e[i, j - 1, t] + (t + 1) * e[i, j - 1, t + 1]
                    if t > 0:
                        v += e[i, j - 1, t - 1] / (2.0 * p)
                e[i, j, t] = v
    return e


@njit(cache=True)
def _hermite_r_into(r, lmax, alpha, x, y, z):
    """Fill ``r[n, t, u, v]``; entry ``r[0]`` holds R_tuv for t+u+v <= lmax."""
    f = boys_array(lmax, alpha * (x * x + y * y + z * z))
    fac = 1.0
    for n in range(lmax + 1):
        r[n, 0, 0, 0] = fac * f[n]
        fac *= -2.0 * alpha
    for n in range(lmax - 1, -1, -1):
        top = lmax - n
        for t in range(top + 1):
            for u in range(top + 1 - t):
                for v in range(top + 1 - t - u):
                    if t > 0:
                        val = x * r[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * r[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = y * r[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * r[n + 1, t, u - 2, v]
                    elif v > 0:
                        val = z * r[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * r[n + 1, t, u, v - 2]
                    else:
                        continue
                    r[n, t, u, v] = val


@njit(cache=True)
def hermite_r(lmax, alpha, x, y, z):
    """Hermite Coulomb integrals R[t, u, v] (order n = 0) for t+u+v <= lmax."""
    r = np.zeros((lmax + 1, lmax + 1, lmax + 1, lmax + 1))
    _hermite_r_into(r, lmax, alpha, x, y, z)
    return r[0]


@njit(cache=True)
def _one_electron(centers, lmn, exps, coefs, nuc_xyz, nuc_z):
    n = centers.shape[0]
    k = exps.shape[1]
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            sij = 0.0
            tij = 0.0
            vij = 0.0
            for pa in range(k):
                a = exps[i, pa]
                ca = coefs[i, pa]
                if ca == 0.0:
                    continue
                for pb in range(k):
                    b = exps[j, pb]
                    cb = coefs[j, pb]
                    if cb == 0.0:
                        continue
                    p = a + b
                    pref = math.sqrt(math.pi / p)
                    s1 = np.empty(3)
                    t1 = np.empty(3)
                    ex = hermite_e(lmn[i, 0], lmn[j, 0] + 2, a, b, centers[i, 0] - centers[j, 0])
                    ey = hermite_e(lmn[i, 1], lmn[j, 1] + 2, a, b, centers[i, 1] - centers[j, 1])
                    ez = hermite_e(lmn[i, 2], lmn[j, 2] + 2, a, b, centers[i, 2] - centers[j, 2])
                    for d in range(3):
                        if d == 0:
                            e = ex
                        elif d == 1:
                            e = ey
                        else:
                            e = ez
                        li = lmn[i, d]
                        lj = lmn[j, d]
                        s1[d] = e[li, lj, 0] * pref
                        kin = -2.0 * b * (2 * lj + 1) * e[li, lj, 0] + 4.0 * b * b * e[li, lj + 2, 0]
                        if lj >= 2:
                            kin += lj * (lj - 1) * e[li, lj - 2, 0]
                        t1[d] = -0.5 * kin * pref
                    sp = s1[0] * s1[1] * s1[2]
                    tp = t1[0] * s1[1] * s1[2] + s1[0] * t1[1] * s1[2] + s1[0] * s1[1] * t1[2]
                    px = (a * centers[i, 0] + b * centers[j, 0]) / p
                    py = (a * centers[i, 1] + b * centers[j, 1]) / p
                    pz = (a * centers[i, 2] + b * centers[j, 2]) / p
                    lsum = lmn[i, 0] + lmn[i, 1] + lmn[i, 2] + lmn[j, 0] + lmn[j, 1] + lmn[j, 2]
                    vp = 0.0
                    for c in range(nuc_z.shape[0]):
                        r = hermite_r(lsum, p, px - nuc_xyz[c, 0], py - nuc_xyz[c, 1], pz - nuc_xyz[c, 2])
                        acc = 0.0
                        for tt in range(lmn[i, 0] + lmn[j, 0] + 1):
                            for uu in range(lmn[i, 1] + lmn[j, 1] + 1):
                                for vv in range(lmn[i, 2] + lmn[j, 2] + 1):
                                    acc += (
                                        ex[lmn[i, 0], lmn[j, 0], tt]
                                        * ey[lmn[i, 1], lmn[j, 1], uu]
                                        * ez[lmn[i, 2], lmn[j, 2], vv]
                                        * r[tt, uu, vv]
                                    )
                        vp -= nuc_z[c] * acc
                    vp *= 2.0 * math.pi / p
                    w = ca * cb
                    sij += w * sp
                    tij += w * tp
                    vij += w * vp
            s[i, j] = s[j, i] = sij
            t[i, j] = t[j, i] = tij
            v[i, j] = v[j, i] = vij
    return s, t, v


@njit(cache=True)
def _pair_table(centers, lmn, exps, coefs):
    """Hermite expansions of all primitive pairs of all function pairs i >= j.

    ``e[ij, pa, pb]`` holds E[t, u, v] padded to 3x3x3 (s and p functions).
    """
    n, k = exps.shape
    npair = n * (n + 1) // 2
    e = np.zeros((npair, k, k, 3, 3, 3))
    pexp = np.ones((npair, k, k))
    pcen = np.zeros((npair, k, k, 3))
    weight = np.zeros((npair, k, k))
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for pa in range(k):
                for pb in range(k):
                    w = coefs[i, pa] * coefs[j, pb]
                    if w == 0.0:
                        continue
                    a = exps[i, pa]
                    b = exps[j, pb]
                    p = a + b
                    ex = hermite_e(lmn[i, 0], lmn[j, 0], a, b, centers[i, 0] - centers[j, 0])
                    ey = hermite_e(lmn[i, 1], lmn[j, 1], a, b, centers[i, 1] - centers[j, 1])
                    ez = hermite_e(lmn[i, 2], lmn[j, 2], a, b, centers[i, 2] - centers[j, 2])
                    for t in range(lmn[i, 0] + lmn[j, 0] + 1):
                        for u in range(lmn[i, 1] + lmn[j, 1] + 1):
                            for v in range(lmn[i, 2] + lmn[j, 2] + 1):
                                e[ij, pa, pb, t, u, v] = (ex[lmn[i, 0], lmn[j, 0], t]
                                                          * ey[lmn[i, 1], lmn[j, 1], u]
                                                          * ez[lmn[i, 2], lmn[j, 2], v])
                    pexp[ij, pa, pb] = p
                    pcen[ij, pa, pb] = (a * centers[i] + b * centers[j]) / p
                    weight[ij, pa, pb] = w
    return e, pexp, pcen, weight


@njit(cache=True)
def _eri(centers, lmn, exps, coefs):
    n, k = exps.shape
    e, pexp, pcen, weight = _pair_table(centers, lmn, exps, coefs)
    r = np.empty((5, 5, 5, 5))
    g = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            l1 = lmn[i] + lmn[j]
            for kk in range(n):
                for ll in range(kk + 1):
                    kl = kk * (kk + 1) // 2 + ll
                    if kl > ij:
                        continue
                    l2 = lmn[kk] + lmn[ll]
                    lsum = l1[0] + l1[1] + l1[2] + l2[0] + l2[1] + l2[2]
                    total = 0.0
                    for pa in range(k):
                        for pb in range(k):
                            w1 = weight[ij, pa, pb]
                            if w1 == 0.0:
                                continue
                            p = pexp[ij, pa, pb]
                            for pc in range(k):
                                for pd in range(k):
                                    w2 = weight[kl, pc, pd]
                                    if w2 == 0.0:
                                        continue
                                    q = pexp[kl, pc, pd]
                                    alpha = p * q / (p + q)
                                    _hermite_r_into(
                                        r, lsum, alpha,
                                        pcen[ij, pa, pb, 0] - pcen[kl, pc, pd, 0],
                                        pcen[ij, pa, pb, 1] - pcen[kl, pc, pd, 1],
                                        pcen[ij, pa, pb, 2] - pcen[kl, pc, pd, 2],
                                    )
                                    acc = 0.0
                                    for t in range(l1[0] + 1):
                                        for u in range(l1[1] + 1):
                                            for v in range(l1[2] + 1):
                                                e1 = e[ij, pa, pb, t, u, v]
                                                if e1 == 0.0:
                                                    continue
                                                for tau in range(l2[0] + 1):
                                                    for nu in range(l2[1] + 1):
                                                        for phi in range(l2[2] + 1):
                                                            sign = 1.0 - 2.0 * ((tau + nu + phi) % 2)
                                                            acc += (e1 * sign * e[kl, pc, pd, tau, nu, phi]
                                                                    * r[0, t + tau, u + nu, v + phi])
                                    pref = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
                                    total += w1 * w2 * pref * acc
                    g[i, j, kk, ll] = g[j, i, kk, ll] = g[i, j, ll, kk] = g[j, i, ll, kk] = total
                    g[kk, ll, i, j] = g[ll, kk, i, j] = g[kk, ll, j, i] = g[ll, kk, j, i] = total
    return g


@dataclass(frozen=True)
class AOIntegrals:
    overlap: np.ndarray
    kinetic: np.ndarray
    nuclear_attraction: np.ndarray
    eri: np.ndarray  # chemist notation (ij|kl)

    @property
    def core_hamiltonian(self) -> np.ndarray:
        return self.kinetic + self.nuclear_attraction

    @property
    def n_basis(self) -> int:
        return self.overlap.shape[0]


def basis_arrays(shells: list[BasisShell], xyz: np.ndarray):
    """Flatten shells into per-function arrays (centers, lmn, exps, coefs)."""
    centers, lmn, exps, coefs = [], [], [], []
    kmax = max(len(sh.exponents) for sh in shells)
    for sh in shells:
        pad = kmax - len(sh.exponents)
        e = list(sh.exponents) + [1.0] * pad
        c = list(sh.contraction_coefficients) + [0.0] * pad
        for cart in CARTESIAN[sh.angular_momentum]:
            centers.append(xyz[sh.center_index])
            lmn.append(cart)
            exps.append(e)
            coefs.append(c)
    return (
        np.array(centers, dtype=float),
        np.array(lmn, dtype=np.int64),
        np.array(exps, dtype=float),
        np.array(coefs, dtype=float),
    )


def compute_ao_integrals(molecule: Molecule, shells: list[BasisShell] | None = None) -> AOIntegrals:
    if shells is None:
        shells = molecule_shells(molecule)
    covered = {sh.center_index for sh in shells}
    if covered != set(range(molecule.n_atoms)):
        raise ValueError("basis shells do not cover every atom")
    xyz = molecule.xyz
    centers, lmn, exps, coefs = basis_arrays(shells, xyz)
    s, t, v = _one_electron(centers, lmn, exps, coefs, xyz, molecule.charges)
    eri = _eri(centers, lmn, exps, coefs)
    smallest = np.linalg.eigvalsh(s)[0]
    if smallest < 1e-8:
        warnings.warn(f"near linear dependence in basis: smallest overlap eigenvalue {smallest:.3e}")
    return AOIntegrals(overlap=s, kinetic=t, nuclear_attraction=v, eri=eri)


def format_integrals(ints: AOIntegrals) -> str:
    """Plain-text dump of S, T, V and the nonzero unique ERIs."""
    out = []
    for name, mat in (("overlap", ints.overlap), ("kinetic", ints.kinetic),
                      ("nuclear_attraction", ints.nuclear_attraction)):
        out.append(f"# {name}")
        for row in mat:
            out.append(" ".join(f"{v:+.12e}" for v in row))
    out.append("# eri (ij|kl), i>=j, k>=l, ij>=kl")
    n = ints.n_basis
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > i * (i + 1) // 2 + j:
                        continue
                    val = ints.eri[i, j, k, l]
                    if abs(val) > 1e-14:
                        out.append(f"{i} {j} {k} {l} {val:+.12e}")
    return "\n".join(out) + "\n"
