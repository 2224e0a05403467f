"""Hubbard trimer Hamiltonians and closed-form one-body spectral bands.

Open chain 1-2-3 with hopping ``-t`` between neighbours, site potentials
``mu`` on the diagonal and on-site repulsion ``u``.  All energies are in the
same units as ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np

from .errors import ParameterError
from .fock import ALPHA, BETA, Sector, enumerate_sector, mode_index, operator_set

TrimerKind = Literal["symmetric", "antisymmetric"]
N_SITES = 3
N_ELECTRONS = 4


@dataclass(frozen=True)
class HubbardParams:
    """Trimer parameters.  ``mu`` holds the three site potentials."""

    u: float
    mu: tuple[float, float, float]
    t: float = 1.0
    kind: Optional[TrimerKind] = None

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.mu) != N_SITES:
            raise ParameterError(f"expected {N_SITES} site potentials, got {len(self.mu)}")
        if not np.all(np.isfinite([self.t, self.u, *self.mu])):
            raise ParameterError("Hubbard parameters must be finite")
        if self.t <= 0:
            raise ParameterError(f"t must be positive, got {self.t}")
        if self.u < 0:
            raise ParameterError(f"u must be non-negative, got {self.u}")
        if self.kind is not None and self.kind not in ("symmetric", "antisymmetric"):
            raise ParameterError(f"unknown trimer kind {self.kind!r}")

    @classmethod
    def symmetric(cls, mu: float, u: float, t: float = 1.0) -> "HubbardParams":
        """Potential ``mu`` on the central site only."""
        return cls(u=u, mu=(0.0, mu, 0.0), t=t, kind="symmetric")

    @classmethod
    def antisymmetric(cls, mu: float, u: float, t: float = 1.0) -> "HubbardParams":
        """Potentials ``+mu`` and ``-mu`` on the two end sites."""
        return cls(u=u, mu=(mu, 0.0, -mu), t=t, kind="antisymmetric")

    @classmethod
    def trimer(cls, kind: TrimerKind, mu: float, u: float, t: float = 1.0) -> "HubbardParams":
        if kind == "symmetric":
            return cls.symmetric(mu, u, t)
        if kind == "antisymmetric":
            return cls.antisymmetric(mu, u, t)
        raise ParameterError(f"unknown trimer kind {kind!r}")

    @property
    def mu_scalar(self) -> float:
        """The tunable potential of a symmetric/antisymmetric trimer."""
        if self.kind == "symmetric":
            return self.mu[1]
        if self.kind == "antisymmetric":
            return self.mu[0]
        raise ParameterError("mu_scalar is only defined for a named trimer kind")


@dataclass(frozen=True)
class SectorHamiltonian:
    matrix: np.ndarray
    params: HubbardParams
    sector: Sector


def build_one_body(params: HubbardParams) -> np.ndarray:
    h = np.diag(np.array(params.mu, dtype=float))
    for i in range(N_SITES - 1):
        h[i, i + 1] = h[i + 1, i] = -params.t
    return h


def _infer_kind(params: HubbardParams) -> TrimerKind:
    m1, m2, m3 = params.mu
    if m1 == 0.0 and m3 == 0.0:
        return "symmetric"
    if m2 == 0.0 and m1 == -m3:
        return "antisymmetric"
    raise ParameterError(f"potentials {params.mu} match neither trimer pattern")


def spectral_band(params: HubbardParams, kind: Optional[TrimerKind] = None) -> float:
    """Closed-form spread of the one-body spectrum.

    symmetric:      sqrt(mu^2 + 8 t^2)
    antisymmetric:  2 sqrt(mu^2 + 2 t^2)
    """
    kind = kind or params.kind or _infer_kind(params)
    t = params.t
    if kind == "symmetric":
        if params.mu[0] != 0.0 or params.mu[2] != 0.0:
            raise ParameterError(f"potentials {params.mu} are not a symmetric trimer")
        mu = params.mu[1]
        return float(np.sqrt(mu * mu + 8.0 * t * t))
    if kind == "antisymmetric":
        if params.mu[1] != 0.0 or params.mu[0] != -params.mu[2]:
            raise ParameterError(f"potentials {params.mu} are not an antisymmetric trimer")
        mu = params.mu[0]
        return float(2.0 * np.sqrt(mu * mu + 2.0 * t * t))
    raise ParameterError(f"unknown trimer kind {kind!r}")


@lru_cache(maxsize=None)
def default_sector() -> Sector:
    """The four-electron, Sz = 0 sector of the trimer (dimension 9)."""
    return enumerate_sector(N_SITES, N_ELECTRONS, 0)


@lru_cache(maxsize=None)
def _sector_terms(sector: Sector):
    """Sector blocks of every hopping term, double occupancy and S^2."""
    ops = operator_set(sector.n_sites)
    L = sector.n_sites
    hops = np.empty((L, L, sector.dimension, sector.dimension))
    for i in range(L):
        for j in range(L):
            hops[i, j] = sector.restrict(ops.hop(i, j, ALPHA) + ops.hop(i, j, BETA))
    double = np.zeros((sector.dimension, sector.dimension))
    for i in range(L):
        n_up = ops.number(mode_index(i, ALPHA))
        n_dn = ops.number(mode_index(i, BETA))
        double += sector.restrict(n_up @ n_dn)
    s2 = sector.restrict(ops.spin_squared())
    for block in (hops, double, s2):
        block.setflags(write=False)
    return hops, double, s2


def build_sector_hamiltonian(params: HubbardParams, sector: Optional[Sector] = None) -> SectorHamiltonian:
    """H = sum_ij h_ij sum_s a+_is a_js + U sum_i n_i,up n_i,dn on a sector."""
    sector = sector or default_sector()
    if sector.n_sites != N_SITES:
        raise ParameterError(f"the trimer model needs a {N_SITES}-site sector")
    hops, double, _ = _sector_terms(sector)
    h = build_one_body(params)
    matrix = np.einsum("ij,ijab->ab", h, hops) + params.u * double
    matrix = 0.5 * (matrix + matrix.T)
    return SectorHamiltonian(matrix, params, sector)


def spin_squared_matrix(sector: Optional[Sector] = None) -> np.ndarray:
    """Total S^2 restricted to ``sector``."""
    return _sector_terms(sector or default_sector())[2]
