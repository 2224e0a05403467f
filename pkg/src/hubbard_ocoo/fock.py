"""Occupation-number Fock space for spin-1/2 fermions on a few sites.

Modes are ordered site-major with alpha before beta, so mode
``m = 2 * site + spin`` with 0-based ``site`` and ``spin`` 0 (alpha) or
1 (beta).  A basis state ``|bits>`` is defined as

    a+_{m1} a+_{m2} ... a+_{mk} |vac>,   m1 < m2 < ... < mk,

which is the Jordan-Wigner convention: creating mode ``m`` on a state picks
up ``(-1)**(number of occupied modes below m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError

ALPHA = 0
BETA = 1

Kind = Literal["creation", "annihilation"]


def mode_index(site: int, spin: int) -> int:
    """Mode index of ``(site, spin)``; both 0-based."""
    return 2 * site + spin


def mode_site_spin(mode: int) -> tuple[int, int]:
    return divmod(mode, 2)


def popcount(x: int) -> int:
    return int(x).bit_count()


def jw_sign(state: int, mode: int) -> int:
    """(-1) raised to the number of occupied modes with index below ``mode``."""
    return -1 if popcount(state & ((1 << mode) - 1)) & 1 else 1


@dataclass(frozen=True)
class FockState:
    """A single occupation bitstring over ``2 * n_sites`` modes."""

    occ: int
    n_sites: int

    @property
    def n_particles(self) -> int:
        return popcount(self.occ)

    @property
    def sz_doubled(self) -> int:
        n_a = popcount(self.occ & _spin_mask(self.n_sites, ALPHA))
        return 2 * n_a - self.n_particles

    def occupied(self, mode: int) -> bool:
        return bool((self.occ >> mode) & 1)

    def occupied_modes(self) -> list[int]:
        return [m for m in range(2 * self.n_sites) if self.occupied(m)]

    def label(self) -> str:
        """Human-readable label such as ``1a 1b 2a 3b`` (1-based sites)."""
        parts = []
        for m in self.occupied_modes():
            site, spin = mode_site_spin(m)
            parts.append(f"{site + 1}{'ab'[spin]}")
        return " ".join(parts) or "vac"


def _spin_mask(n_sites: int, spin: int) -> int:
    mask = 0
    for site in range(n_sites):
        mask |= 1 << mode_index(site, spin)
    return mask


@dataclass(frozen=True)
class Sector:
    """Fixed (N, 2*Sz) block of Fock space with a deterministic basis order.

    ``states`` holds the bit patterns in ascending numeric order.
    """

    n_sites: int
    n_particles: int
    sz_doubled: int
    states: tuple[int, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(self.states)})

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def full_dimension(self) -> int:
        return 1 << (2 * self.n_sites)

    @property
    def basis(self) -> list[FockState]:
        return [FockState(s, self.n_sites) for s in self.states]

    def index(self, state: int) -> int:
        return self._index[state]

    def __contains__(self, state: int) -> bool:
        return state in self._index

    def embedding(self) -> sp.csr_matrix:
        """Isometry from the sector into the full space (full_dim x dim)."""
        rows = np.array(self.states)
        cols = np.arange(self.dimension)
        data = np.ones(self.dimension)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.full_dimension, self.dimension))

    def restrict(self, op) -> np.ndarray:
        """Dense sector block ``P^T op P`` of a full-space operator."""
        matrix = op.matrix if isinstance(op, ModeOperator) else op
        P = self.embedding()
        block = P.T @ (matrix @ P)
        return block.toarray() if sp.issparse(block) else np.asarray(block)

    def to_full(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.full_dimension)
        out[list(self.states)] = v
        return out

    def from_full(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[list(self.states)]


def enumerate_sector(n_sites: int, n_particles: int, sz_doubled: int) -> Sector:
    """All occupation patterns with fixed particle number and ``2*Sz``."""
    if n_sites < 1:
        raise ParameterError(f"n_sites must be positive, got {n_sites}")
    if not 0 <= n_particles <= 2 * n_sites:
        raise ParameterError(f"n_particles={n_particles} outside [0, {2 * n_sites}]")
    if abs(sz_doubled) > n_particles or (n_particles + sz_doubled) % 2:
        raise ParameterError(
            f"sz_doubled={sz_doubled} incompatible with n_particles={n_particles}"
        )
    n_alpha = (n_particles + sz_doubled) // 2
    n_beta = n_particles - n_alpha
    if n_alpha > n_sites or n_beta > n_sites:
        raise ParameterError(
            f"cannot place {n_alpha} alpha and {n_beta} beta electrons on {n_sites} sites"
        )
    alpha_mask = _spin_mask(n_sites, ALPHA)
    states = tuple(
        s
        for s in range(1 << (2 * n_sites))
        if popcount(s) == n_particles and popcount(s & alpha_mask) == n_alpha
    )
    assert len(states) == comb(n_sites, n_alpha) * comb(n_sites, n_beta)
    return Sector(n_sites, n_particles, sz_doubled, states)


@dataclass(frozen=True)
class ModeOperator:
    """Creation or annihilation operator on one mode, as a full-space matrix."""

    matrix: sp.csr_matrix
    kind: Kind
    mode: int
    n_sites: int

    @property
    def T(self) -> "ModeOperator":
        other = "annihilation" if self.kind == "creation" else "creation"
        return ModeOperator(self.matrix.T.tocsr(), other, self.mode, self.n_sites)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other


def build_mode_operator(n_sites: int, mode: int, kind: Kind) -> ModeOperator:
    n_modes = 2 * n_sites
    if not 0 <= mode < n_modes:
        raise ParameterError(f"mode {mode} out of range for {n_sites} sites")
    if kind not in ("creation", "annihilation"):
        raise ParameterError(f"unknown operator kind {kind!r}")
    dim = 1 << n_modes
    rows, cols, data = [], [], []
    bit = 1 << mode
    for s in range(dim):
        occupied = bool(s & bit)
        if kind == "creation" and not occupied:
            rows.append(s | bit)
        elif kind == "annihilation" and occupied:
            rows.append(s & ~bit)
        else:
            continue
        cols.append(s)
        data.append(float(jw_sign(s, mode)))
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))
    return ModeOperator(matrix, kind, mode, n_sites)


def creation(n_sites: int, mode: int) -> ModeOperator:
    return build_mode_operator(n_sites, mode, "creation")


def annihilation(n_sites: int, mode: int) -> ModeOperator:
    return build_mode_operator(n_sites, mode, "annihilation")


def apply_operator_string(ops: Sequence[ModeOperator], v: np.ndarray) -> np.ndarray:
    """Apply ``ops[0] @ ops[1] @ ... @ ops[-1]`` to ``v`` (rightmost first)."""
    v = np.asarray(v, dtype=float)
    for op in reversed(ops):
        if op.matrix.shape[1] != v.shape[0]:
            raise ParameterError(
                f"operator acts on dimension {op.matrix.shape[1]}, vector has {v.shape[0]}"
            )
        v = op.matrix @ v
    return v


def vacuum(n_sites: int) -> np.ndarray:
    v = np.zeros(1 << (2 * n_sites))
    v[0] = 1.0
    return v


class OperatorSet:
    """Cached creation/annihilation matrices for every mode of ``n_sites``."""

    def __init__(self, n_sites: int):
        self.n_sites = n_sites
        self.cre = [creation(n_sites, m) for m in range(2 * n_sites)]
        self.ann = [op.T for op in self.cre]

    def number(self, mode: int) -> sp.csr_matrix:
        return (self.cre[mode].matrix @ self.ann[mode].matrix).tocsr()

    def total_number(self) -> sp.csr_matrix:
        return sum(self.number(m) for m in range(2 * self.n_sites))

    def hop(self, i: int, j: int, spin: int) -> sp.csr_matrix:
        """``a+_{i spin} a_{j spin}``."""
        return (self.cre[mode_index(i, spin)].matrix @ self.ann[mode_index(j, spin)].matrix).tocsr()

    def spin_squared(self) -> sp.csr_matrix:
        """Total S^2 = S- S+ + Sz^2 + Sz."""
        s_plus = sum(
            self.cre[mode_index(i, ALPHA)].matrix @ self.ann[mode_index(i, BETA)].matrix
            for i in range(self.n_sites)
        )
        s_z = 0.5 * sum(
            self.number(mode_index(i, ALPHA)) - self.number(mode_index(i, BETA))
            for i in range(self.n_sites)
        )
        return (s_plus.T @ s_plus + s_z @ s_z + s_z).tocsr()


_OPERATOR_CACHE: dict[int, OperatorSet] = {}


def operator_set(n_sites: int) -> OperatorSet:
    """Shared, read-only operator cache keyed by ``n_sites``."""
    ops = _OPERATOR_CACHE.get(n_sites)
    if ops is None:
        ops = _OPERATOR_CACHE[n_sites] = OperatorSet(n_sites)
    return ops
