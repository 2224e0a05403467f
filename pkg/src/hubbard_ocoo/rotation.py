"""Orbital rotations ``C = C_ref @ exp(-K)`` and Slater determinants in the site basis.

Every molecular-orbital determinant is expanded in the common site-basis
sector, so overlaps between wavefunctions built on different orbital bases
reduce to ordinary dot products there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .fock import ALPHA, BETA, Sector, mode_index, operator_set, vacuum

N_ORB = 3

# Spin-orbitals as (orbital, spin), 0-based orbitals.  Bar notation labels:
# |1 1b 2 2b>, |1 1b 2 3b>, |1 1b 2b 3>, |1 1b 3 3b>.
CAS_DETERMINANTS: tuple[tuple[tuple[int, int], ...], ...] = (
    ((0, ALPHA), (0, BETA), (1, ALPHA), (1, BETA)),
    ((0, ALPHA), (0, BETA), (1, ALPHA), (2, BETA)),
    ((0, ALPHA), (0, BETA), (1, BETA), (2, ALPHA)),
    ((0, ALPHA), (0, BETA), (2, ALPHA), (2, BETA)),
)
CAS_LABELS = ("|1 1b 2 2b>", "|1 1b 2 3b>", "|1 1b 2b 3>", "|1 1b 3 3b>")


@dataclass(frozen=True)
class Kappa:
    """Rotation parameters ``(k12, k13, k23)`` of a real antisymmetric generator."""

    params: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        values = tuple(float(x) for x in self.params)
        if len(values) != 3:
            raise ParameterError(f"kappa needs 3 parameters, got {len(values)}")
        if not np.all(np.isfinite(values)):
            raise ParameterError(f"non-finite kappa parameters {values}")
        object.__setattr__(self, "params", values)

    @classmethod
    def from_array(cls, x) -> "Kappa":
        return cls(tuple(np.asarray(x, dtype=float).ravel()))

    def as_array(self) -> np.ndarray:
        return np.array(self.params)

    def generator(self) -> np.ndarray:
        k12, k13, k23 = self.params
        return np.array(
            [
                [0.0, k12, k13],
                [-k12, 0.0, k23],
                [-k13, -k23, 0.0],
            ]
        )


@dataclass(frozen=True)
class OrbitalBasis:
    """Orthogonal coefficients; column ``p`` is orbital ``p`` in the site basis."""

    coeffs: np.ndarray
    source_kappa: Kappa = Kappa()


def expm_antisymmetric(K: np.ndarray) -> np.ndarray:
    """Rodrigues formula for the exponential of a real antisymmetric 3x3 matrix."""
    K = np.asarray(K, dtype=float)
    # axis vector w with K v = w x v
    w = np.array([K[2, 1], K[0, 2], K[1, 0]])
    theta2 = float(w @ w)
    K2 = K @ K
    if theta2 < 1e-8:
        # Taylor coefficients accurate to O(theta^8)
        a = 1.0 - theta2 / 6.0 + theta2**2 / 120.0 - theta2**3 / 5040.0
        b = 0.5 - theta2 / 24.0 + theta2**2 / 720.0 - theta2**3 / 40320.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * K2


def rotation_matrix(x) -> np.ndarray:
    """``exp(-K)`` straight from the parameter vector ``(k12, k13, k23)``."""
    k12, k13, k23 = x
    K = np.array([[0.0, -k12, -k13], [k12, 0.0, -k23], [k13, k23, 0.0]])
    return expm_antisymmetric(K)


def exponentiate(kappa: Kappa, reference: Optional[np.ndarray] = None) -> OrbitalBasis:
    """Orbital basis ``reference @ exp(-K)``; ``reference`` defaults to the identity."""
    R = expm_antisymmetric(-kappa.generator())
    C = R if reference is None else np.asarray(reference) @ R
    return OrbitalBasis(C, kappa)


def reference_orbitals(h: np.ndarray) -> np.ndarray:
    """Eigenvectors of a one-body matrix, ascending energy, with fixed signs and det +1."""
    _, vecs = np.linalg.eigh(h)
    for p in range(vecs.shape[1]):
        col = vecs[:, p]
        k = np.flatnonzero(np.abs(col) > 1e-12)[0]
        if col[k] < 0:
            vecs[:, p] = -col
    if np.linalg.det(vecs) < 0:
        vecs[:, -1] *= -1.0
    return vecs


def _canonical(occ: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    occ = [(int(p), int(s)) for p, s in occ]
    if len(set(occ)) != len(occ):
        raise ParameterError(f"repeated spin-orbital in {occ}")
    for p, s in occ:
        if s not in (ALPHA, BETA) or p < 0:
            raise ParameterError(f"invalid spin-orbital {(p, s)}")
    return sorted(occ)


def _check_sector(occ, sector: Sector, n_orb: int):
    n_alpha = sum(1 for _, s in occ if s == ALPHA)
    n_beta = len(occ) - n_alpha
    if len(occ) != sector.n_particles or n_alpha - n_beta != sector.sz_doubled:
        raise ParameterError(
            f"occupation {occ} does not match sector (N={sector.n_particles}, 2Sz={sector.sz_doubled})"
        )
    if any(p >= n_orb for p, _ in occ):
        raise ParameterError(f"orbital index out of range in {occ}")


def embed_determinant(basis: OrbitalBasis, occ: Sequence[tuple[int, int]], sector: Sector) -> np.ndarray:
    """Sector amplitudes of ``prod c+_{p s} |vac>`` with ``c+_{p s} = sum_l C[l, p] a+_{l s}``.

    Creation operators are applied in canonical ``(orbital, spin)`` order,
    leftmost first, which fixes the determinant's global phase.
    """
    C = np.asarray(basis.coeffs)
    occ = _canonical(occ)
    _check_sector(occ, sector, C.shape[1])
    ops = operator_set(sector.n_sites)
    v = vacuum(sector.n_sites)
    for p, s in reversed(occ):
        v = sum(C[l, p] * (ops.cre[mode_index(l, s)].matrix @ v) for l in range(C.shape[0]))
    return sector.from_full(v)


def _permutation_sign(seq: Sequence[int]) -> int:
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class DeterminantEmbedder:
    """Vectorized embedding of a fixed determinant list into a sector.

    Uses the alpha/beta string factorization: each amplitude is a signed
    product of two minors of ``C``.  ``embed_determinant`` is the slow,
    operator-based reference.
    """

    def __init__(self, sector: Sector, determinants=CAS_DETERMINANTS):
        self.sector = sector
        self.determinants = tuple(tuple(_canonical(d)) for d in determinants)
        L = sector.n_sites
        for det in self.determinants:
            _check_sector(det, sector, L)
        self._n_alpha = (sector.n_particles + sector.sz_doubled) // 2
        self._n_beta = sector.n_particles - self._n_alpha
        self._subsets = {k: list(combinations(range(L), k)) for k in {self._n_alpha, self._n_beta}}
        pos = {k: {sub: i for i, sub in enumerate(subs)} for k, subs in self._subsets.items()}
        shape = (sector.dimension, len(self.determinants))
        self._ra, self._ca, self._rb, self._cb = (np.zeros(shape, dtype=int) for _ in range(4))
        self._sign = np.zeros(shape)
        for a, state in enumerate(sector.states):
            sites_a = tuple(i for i in range(L) if state >> mode_index(i, ALPHA) & 1)
            sites_b = tuple(i for i in range(L) if state >> mode_index(i, BETA) & 1)
            # a+_{I alpha} a+_{J beta}|vac> in terms of the ascending-mode basis state
            modes = [mode_index(i, ALPHA) for i in sites_a] + [mode_index(j, BETA) for j in sites_b]
            state_sign = _permutation_sign(modes)
            for k, det in enumerate(self.determinants):
                orbs_a = tuple(p for p, s in det if s == ALPHA)
                orbs_b = tuple(p for p, s in det if s == BETA)
                # reorder the canonical creation list into all-alpha then all-beta
                order = [i for i, (_, s) in enumerate(det) if s == ALPHA] + [
                    i for i, (_, s) in enumerate(det) if s == BETA
                ]
                self._ra[a, k] = pos[self._n_alpha][sites_a]
                self._ca[a, k] = pos[self._n_alpha][orbs_a]
                self._rb[a, k] = pos[self._n_beta][sites_b]
                self._cb[a, k] = pos[self._n_beta][orbs_b]
                self._sign[a, k] = state_sign * _permutation_sign(order)

    def __call__(self, basis) -> np.ndarray:
        """Matrix whose column ``k`` is determinant ``k`` embedded in the sector."""
        C = np.asarray(getattr(basis, "coeffs", basis))
        comp_a = compound_matrix(C, self._n_alpha)
        comp_b = comp_a if self._n_beta == self._n_alpha else compound_matrix(C, self._n_beta)
        return self._sign * comp_a[self._ra, self._ca] * comp_b[self._rb, self._cb]


@lru_cache(maxsize=None)
def _subset_array(n: int, k: int) -> np.ndarray:
    out = np.array(list(combinations(range(n), k)))
    out.setflags(write=False)
    return out


def compound_matrix(C: np.ndarray, k: int) -> np.ndarray:
    """All k x k minors of ``C``; rows and columns indexed by ascending k-subsets."""
    n_rows, n_cols = C.shape
    if k == 0:
        return np.ones((1, 1))
    if k == 1:
        return C
    rows = _subset_array(n_rows, k)
    cols = _subset_array(n_cols, k)
    if k == 2:
        A = C[rows[:, 0]]
        B = C[rows[:, 1]]
        c0, c1 = cols[:, 0], cols[:, 1]
        return A[:, c0] * B[:, c1] - A[:, c1] * B[:, c0]
    return np.linalg.det(C[rows[:, None, :, None], cols[None, :, None, :]])


def cross_overlap(v: np.ndarray, w: np.ndarray) -> float:
    v = np.asarray(v)
    w = np.asarray(w)
    if v.shape != w.shape:
        raise ParameterError(f"sector vectors differ in shape: {v.shape} vs {w.shape}")
    return float(v @ w)


def cas_projection(v: np.ndarray, basis: OrbitalBasis, embedder: DeterminantEmbedder):
    """Coefficients of ``v`` on the four CAS determinants of ``basis`` and their weight."""
    coeffs = embedder(basis).T @ np.asarray(v)
    return coeffs, float(coeffs @ coeffs)


def all_determinants(n_orb: int, n_alpha: int, n_beta: int):
    """Every (alpha-set, beta-set) determinant, canonical order; used for full decompositions."""
    dets = []
    for oa in combinations(range(n_orb), n_alpha):
        for ob in combinations(range(n_orb), n_beta):
            dets.append(tuple(sorted([(p, ALPHA) for p in oa] + [(p, BETA) for p in ob])))
    return dets
