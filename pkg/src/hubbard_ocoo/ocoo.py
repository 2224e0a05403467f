"""Orthogonally constrained orbital optimization of the first excited state.

For a trial rotation ``kappa`` the excited state is the lowest root of the
active-space matrix with the frozen CASSCF ground state shifted up,

    M_eff = M(kappa) + shift * s s^T,   s_i = <d_i(kappa)|psi0>,

and the orbitals minimize

    CF(kappa) = E1(kappa) + lambda * <psi0|psi1(kappa)>^2

with ``E1`` the unshifted energy of that root.  Every CF evaluation
re-solves the 4x4 shifted problem at the candidate orbitals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cas import DEGENERACY_TOL, CasMatrix, CasProblem, CasWavefunction, fix_sign
from .errors import ConvergenceError, ParameterError
from .optimize import LocalResult, OptimizerOptions, multistart, start_points
from .rotation import Kappa


@dataclass(frozen=True)
class OcooSettings:
    """Energies in units of t."""

    shift: float = 1e8
    lambda_penalty: float = 1e8
    cf_tol: float = 1e-7
    optimizer: OptimizerOptions = OptimizerOptions()

    def __post_init__(self):
        for name in ("shift", "lambda_penalty", "cf_tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class ShiftedRoot:
    wavefunction: CasWavefunction
    overlap: float
    degenerate: bool


def solve_shifted_eigenproblem(M: CasMatrix, psi0: np.ndarray, shift: float) -> ShiftedRoot:
    """Lowest root of ``M + shift * s s^T`` with ``s = D^T psi0``.

    The returned energy is the unshifted ``<psi|M|psi>``.
    """
    D = M.determinants
    s = D.T @ psi0
    P = np.outer(s, s)
    M_eff = M.matrix + shift * 0.5 * (P + P.T)
    w, V = np.linalg.eigh(M_eff)
    root = 0
    degenerate = len(w) > 1 and abs(w[1] - w[0]) < DEGENERACY_TOL
    if degenerate and abs(V[:, 1] @ s) < abs(V[:, 0] @ s):
        root = 1
    amps = fix_sign(V[:, root])
    vector = D @ amps
    energy = float(amps @ M.bare @ amps)
    psi = CasWavefunction(amps, M.basis, energy, vector, degenerate)
    return ShiftedRoot(psi, float(vector @ psi0), degenerate)


@dataclass(frozen=True)
class OcooContext:
    problem: CasProblem
    psi0: np.ndarray
    settings: OcooSettings = OcooSettings()

    @property
    def shift(self) -> float:
        return self.settings.shift * self.problem.params.t

    @property
    def lam(self) -> float:
        return self.settings.lambda_penalty * self.problem.params.t


@dataclass(frozen=True)
class CostEvaluation:
    cf: float
    e1: float
    overlap: float
    psi1: CasWavefunction
    degenerate: bool


def cost_function(kappa, context: OcooContext) -> CostEvaluation:
    if isinstance(kappa, Kappa):
        M = context.problem.cas_matrix(kappa)
    else:
        M = context.problem.cas_matrix_at(np.asarray(kappa, dtype=float))
    root = solve_shifted_eigenproblem(M, context.psi0, context.shift)
    e1 = root.wavefunction.energy
    cf = e1 + context.lam * root.overlap**2
    return CostEvaluation(cf, e1, root.overlap, root.wavefunction, root.degenerate)


@dataclass
class OcooResult:
    kappa1: Kappa
    psi1: CasWavefunction
    psi1_embedded: np.ndarray
    energy_e1: float
    overlap_with_psi0: float
    cf: float
    cf_trace: list[tuple[int, float, float, float]]  # (iteration, CF, E1, overlap)
    converged: bool
    degenerate: bool = False
    runs: list[LocalResult] = field(default_factory=list, repr=False)


def run_ocoo(
    problem: CasProblem,
    psi0: np.ndarray,
    kappa0,
    settings: OcooSettings = OcooSettings(),
    rng: Optional[np.random.Generator] = None,
    extra_starts: Sequence = (),
) -> OcooResult:
    """Minimize CF over ``kappa`` starting at the ground-state rotation ``kappa0``.

    Each local run stops once CF changes by less than ``cf_tol`` between two
    successive iterations.  Restarts perturb ``kappa0``; the lowest CF wins.
    """
    if not isinstance(kappa0, Kappa):
        kappa0 = Kappa.from_array(kappa0)
    context = OcooContext(problem, np.asarray(psi0, dtype=float), settings)
    options = settings.optimizer
    if rng is None:
        rng = np.random.default_rng(options.seed)
    cf_tol = settings.cf_tol * problem.params.t

    def f(x):
        return cost_function(x, context).cf

    starts = start_points(kappa0.as_array(), options, rng, extra=extra_starts)
    best, runs = multistart(f, starts, options, stop_tol=cf_tol)
    final = cost_function(best.x, context)
    result = OcooResult(
        kappa1=Kappa.from_array(best.x),
        psi1=final.psi1,
        psi1_embedded=final.psi1.vector,
        energy_e1=final.e1,
        overlap_with_psi0=final.overlap,
        cf=final.cf,
        cf_trace=[(i, *_trace_row(x, context)) for i, x in enumerate(best.points)],
        converged=best.converged,
        degenerate=final.degenerate,
        runs=runs,
    )
    if not best.converged:
        raise ConvergenceError(f"OCOO did not converge from {len(starts)} starts", best=result)
    return result


def _trace_row(x, context):
    ev = cost_function(x, context)
    return ev.cf, ev.e1, ev.overlap


def write_cf_trace(result: OcooResult, path) -> None:
    """CSV dump of the CF trace: iteration, CF, E1, overlap."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cf", "e1", "overlap"])
        for i, cf, e1, ov in result.cf_trace:
            writer.writerow([i, format(cf, ".17g"), format(e1, ".17g"), format(ov, ".17g")])
