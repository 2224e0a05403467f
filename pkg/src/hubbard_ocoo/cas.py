"""CAS[2,2] on top of one doubly occupied inactive orbital.

The active space holds the four determinants |1 1b 2 2b>, |1 1b 2 3b>,
|1 1b 2b 3>, |1 1b 3 3b> of a rotated orbital basis.  Orbital optimization
runs over the three rotation parameters of ``C = C_ref @ exp(-K)``.

Spin handling: the optimizations act on ``H + w * S^2`` with a penalty
weight ``w`` (``spin_penalty``), so only singlet CAS roots stay low.  All
reported energies are expectation values of the bare ``H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, ParameterError
from .model import (
    HubbardParams,
    SectorHamiltonian,
    build_one_body,
    build_sector_hamiltonian,
    default_sector,
    spin_squared_matrix,
)
from .optimize import LocalResult, OptimizerOptions, multistart, start_points
from .rotation import (
    DeterminantEmbedder,
    Kappa,
    OrbitalBasis,
    exponentiate,
    reference_orbitals,
    rotation_matrix,
)

Objective = Literal["ground", "state_average"]

# units of t; pushes triplet roots 2w above their bare energy
DEFAULT_SPIN_PENALTY = 100.0
DEGENERACY_TOL = 1e-10
SA_WEIGHTS = (0.5, 0.5)


@dataclass(frozen=True)
class CasMatrix:
    """Active-space block ``D^T A D`` of a sector operator ``A``.

    ``matrix`` is the block that gets diagonalized (spin-penalized when a
    penalty is in use); ``hamiltonian`` is the bare-H block used for energies.
    """

    matrix: np.ndarray
    basis: OrbitalBasis
    determinants: np.ndarray
    hamiltonian: Optional[np.ndarray] = None

    @property
    def bare(self) -> np.ndarray:
        return self.matrix if self.hamiltonian is None else self.hamiltonian


@dataclass(frozen=True)
class CasWavefunction:
    amps: np.ndarray
    basis: OrbitalBasis
    energy: float
    vector: np.ndarray
    degenerate: bool = False


def _symmetric_block(D: np.ndarray, A: np.ndarray) -> np.ndarray:
    M = D.T @ A @ D
    return 0.5 * (M + M.T)


def build_cas_matrix(
    H,
    basis: OrbitalBasis,
    embedder: Optional[DeterminantEmbedder] = None,
    penalty: Optional[np.ndarray] = None,
) -> CasMatrix:
    """CAS matrix of ``H`` (a ``SectorHamiltonian`` or a sector-sized array).

    ``penalty`` is an extra sector operator added before diagonalization.
    """
    A = np.asarray(getattr(H, "matrix", H))
    if embedder is None:
        embedder = DeterminantEmbedder(getattr(H, "sector", None) or default_sector())
    D = embedder(basis)
    bare = _symmetric_block(D, A)
    if penalty is None:
        return CasMatrix(bare, basis, D)
    return CasMatrix(_symmetric_block(D, A + penalty), basis, D, bare)


def fix_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip ``v`` so its first non-negligible component is positive."""
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def solve_casci(M: CasMatrix, root: int = 0) -> CasWavefunction:
    n = M.matrix.shape[0]
    if not 0 <= root < n:
        raise ParameterError(f"root {root} out of range for a {n}x{n} CAS matrix")
    w, V = np.linalg.eigh(M.matrix)
    amps = fix_sign(V[:, root])
    neighbours = [w[k] for k in (root - 1, root + 1) if 0 <= k < n]
    degenerate = any(abs(w[root] - x) < DEGENERACY_TOL for x in neighbours)
    energy = float(amps @ M.bare @ amps)
    return CasWavefunction(amps, M.basis, energy, M.determinants @ amps, degenerate)


@dataclass(frozen=True)
class CasProblem:
    """Everything needed to evaluate CAS quantities at a given ``kappa``."""

    params: HubbardParams
    hamiltonian: SectorHamiltonian
    reference: np.ndarray
    embedder: DeterminantEmbedder
    penalty: Optional[np.ndarray]
    spin_penalty: float

    @classmethod
    def from_params(cls, params: HubbardParams, spin_penalty: float = DEFAULT_SPIN_PENALTY) -> "CasProblem":
        if spin_penalty < 0:
            raise ParameterError("spin_penalty must be non-negative")
        H = build_sector_hamiltonian(params)
        reference = reference_orbitals(build_one_body(params))
        embedder = _embedder(H.sector)
        penalty = spin_penalty * params.t * spin_squared_matrix(H.sector) if spin_penalty else None
        return cls(params, H, reference, embedder, penalty, spin_penalty)

    @property
    def objective_matrix(self) -> np.ndarray:
        return self._objective

    def __post_init__(self):
        H = self.hamiltonian.matrix
        object.__setattr__(self, "_objective", H if self.penalty is None else H + self.penalty)

    def basis(self, kappa) -> OrbitalBasis:
        if not isinstance(kappa, Kappa):
            kappa = Kappa.from_array(kappa)
        return exponentiate(kappa, self.reference)

    def cas_matrix(self, kappa) -> CasMatrix:
        return build_cas_matrix(self.hamiltonian, self.basis(kappa), self.embedder, self.penalty)

    def cas_matrix_at(self, x) -> CasMatrix:
        """``cas_matrix`` for a raw parameter array, skipping Kappa validation."""
        C = self.reference @ rotation_matrix(x)
        D = self.embedder(C)
        bare = _symmetric_block(D, self.hamiltonian.matrix)
        if self.penalty is None:
            return CasMatrix(bare, OrbitalBasis(C), D)
        return CasMatrix(_symmetric_block(D, self._objective), OrbitalBasis(C), D, bare)

    def objective_block(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Fast path for optimizers: (penalized CAS block, determinant matrix) at raw ``x``."""
        D = self.embedder(self.reference @ rotation_matrix(x))
        return _symmetric_block(D, self.objective_matrix), D

    def state_energy(self, v: np.ndarray) -> float:
        return float(v @ self.hamiltonian.matrix @ v)


_EMBEDDERS: dict = {}


def _embedder(sector) -> DeterminantEmbedder:
    emb = _EMBEDDERS.get(sector)
    if emb is None:
        emb = _EMBEDDERS[sector] = DeterminantEmbedder(sector)
    return emb


def casscf_objective(problem: CasProblem, objective: Objective):
    """Scalar objective of the orbital rotation parameters."""
    if objective == "ground":
        def f(x):
            return np.linalg.eigvalsh(problem.objective_block(x)[0])[0]
    elif objective == "state_average":
        wa, wb = SA_WEIGHTS
        def f(x):
            w = np.linalg.eigvalsh(problem.objective_block(x)[0])
            return wa * w[0] + wb * w[1]
    else:
        raise ParameterError(f"unknown CASSCF objective {objective!r}")
    return f


@dataclass
class CasscfResult:
    kappa: Kappa
    basis: OrbitalBasis
    roots: list[CasWavefunction]
    value: float
    converged: bool
    degenerate: bool
    runs: list[LocalResult] = field(default_factory=list, repr=False)

    @property
    def ground(self) -> CasWavefunction:
        return self.roots[0]


def optimize_casscf(
    problem,
    objective: Objective = "ground",
    options: OptimizerOptions = OptimizerOptions(),
    rng: Optional[np.random.Generator] = None,
    extra_starts: Sequence = (),
) -> CasscfResult:
    """Orbital-optimized CAS[2,2]: ground state or equal-weight two-state average.

    Starts at ``kappa = 0`` (the one-body eigenbasis), then ``extra_starts``
    (e.g. a warm start from a neighbouring grid point), then random
    perturbations.  The best converged objective wins.
    """
    if isinstance(problem, HubbardParams):
        problem = CasProblem.from_params(problem)
    if rng is None:
        rng = np.random.default_rng(options.seed)
    f = casscf_objective(problem, objective)
    starts = start_points(np.zeros(3), options, rng, extra=extra_starts)
    best, runs = multistart(f, starts, options)
    M = problem.cas_matrix(best.x)
    n_roots = 1 if objective == "ground" else 2
    roots = [solve_casci(M, k) for k in range(n_roots)]
    result = CasscfResult(
        kappa=Kappa.from_array(best.x),
        basis=M.basis,
        roots=roots,
        value=float(best.fun),
        converged=best.converged,
        degenerate=any(r.degenerate for r in roots),
        runs=runs,
    )
    if not best.converged:
        raise ConvergenceError(f"{objective} CASSCF did not converge from {len(starts)} starts", best=result)
    return result
