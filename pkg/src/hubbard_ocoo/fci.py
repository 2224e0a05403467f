"""Exact diagonalization of the trimer sector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cas import fix_sign
from .errors import ParameterError
from .model import HubbardParams, build_sector_hamiltonian, spin_squared_matrix

Spin = Literal["singlet", "any"]
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class FciResult:
    """Full sector spectrum, ascending.

    ``s2`` holds <S^2> per eigenstate; eigenvectors are common eigenvectors
    of H and S^2, so the values are 0 (singlet) or 2 (triplet) up to roundoff.
    """

    energies: np.ndarray
    states: np.ndarray  # column k is eigenstate k
    s2: np.ndarray
    params: HubbardParams

    def indices(self, spin: Spin = "singlet") -> np.ndarray:
        if spin == "any":
            return np.arange(len(self.energies))
        if spin == "singlet":
            return np.flatnonzero(np.abs(self.s2) < 1e-6)
        raise ParameterError(f"unknown spin target {spin!r}")

    def level(self, k: int, spin: Spin = "singlet") -> tuple[float, np.ndarray]:
        """Energy and state of the k-th lowest level with the requested spin."""
        idx = self.indices(spin)
        if k >= len(idx):
            raise ParameterError(f"only {len(idx)} {spin} levels available")
        j = idx[k]
        return float(self.energies[j]), self.states[:, j]


def solve_fci(params: HubbardParams) -> FciResult:
    H = build_sector_hamiltonian(params).matrix
    S2 = spin_squared_matrix()
    # [H, S^2] = 0; a small S^2 admixture splits singlet/triplet crossings so
    # every returned eigenvector has definite spin
    w, V = np.linalg.eigh(H + 1e-3 * params.t * S2)
    energies = np.einsum("ik,ij,jk->k", V, H, V)
    order = np.argsort(energies, kind="stable")
    V = np.column_stack([fix_sign(V[:, k]) for k in order])
    energies = energies[order]
    s2 = np.einsum("ik,ij,jk->k", V, S2, V)
    return FciResult(energies, V, s2, params)


def fci_gap(result: FciResult, spin: Spin = "singlet") -> float:
    e0, _ = result.level(0, spin)
    e1, _ = result.level(1, spin)
    return max(e1 - e0, 0.0)


def is_degenerate(result: FciResult, spin: Spin = "singlet") -> bool:
    return fci_gap(result, spin) < DEGENERACY_TOL * result.params.t


def project(a: np.ndarray, b: np.ndarray) -> float:
    return abs(float(np.asarray(a) @ np.asarray(b)))
