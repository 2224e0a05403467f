"""Potential sweeps over the trimer: one diagnostic record per grid point."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cas import DEFAULT_SPIN_PENALTY, CasProblem, optimize_casscf
from .errors import ConvergenceError, ParameterError
from .fci import fci_gap, is_degenerate, solve_fci
from .model import HubbardParams, TrimerKind, spectral_band
from .ocoo import OcooSettings, run_ocoo
from .optimize import OptimizerOptions
from .rotation import cas_projection

log = logging.getLogger(__name__)

METHODS = ("fci", "casscf", "sa_casscf", "ocoo")
# swap the inactive reference orbital with orbital 2 or 3
SWAP_STARTS = (np.array([np.pi / 2, 0.0, 0.0]), np.array([0.0, np.pi / 2, 0.0]))


@dataclass(frozen=True)
class SweepConfig:
    kind: TrimerKind
    u_over_t: float
    mu_start: float
    mu_stop: float
    mu_step: float
    methods: tuple[str, ...] = METHODS
    t: float = 1.0
    spin: str = "singlet"
    spin_penalty: float = DEFAULT_SPIN_PENALTY
    warm_start: bool = True
    seed: int = 0
    ocoo: OcooSettings = field(default_factory=OcooSettings)
    csv_path: Optional[str] = None
    json_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.kind not in ("symmetric", "antisymmetric"):
            raise ParameterError(f"kind must be symmetric or antisymmetric, got {self.kind!r}")
        if not self.methods:
            raise ParameterError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ParameterError(f"unknown methods {sorted(unknown)}; choose from {list(METHODS)}")
        if not self.mu_step > 0:
            raise ParameterError(f"mu_step must be positive, got {self.mu_step}")
        if self.mu_start > self.mu_stop:
            raise ParameterError(f"mu_start {self.mu_start} exceeds mu_stop {self.mu_stop}")
        if self.spin not in ("singlet", "any"):
            raise ParameterError(f"spin must be 'singlet' or 'any', got {self.spin!r}")

    @property
    def optimizer(self) -> OptimizerOptions:
        return self.ocoo.optimizer

    @property
    def effective_spin_penalty(self) -> float:
        return self.spin_penalty if self.spin == "singlet" else 0.0

    def grid(self) -> list[float]:
        return make_grid(self.mu_start, self.mu_stop, self.mu_step)


def make_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid ``start, start + step, ...`` up to ``stop`` (within 1e-12)."""
    if not step > 0 or start > stop:
        raise ParameterError(f"invalid grid {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9))
    points = [start + i * step for i in range(n + 1)]
    points = [round(x, 12) + 0.0 for x in points]
    if abs(points[-1] - stop) <= 1e-12 * max(1.0, abs(stop)):
        points[-1] = float(stop)
    return points


@dataclass
class SweepRecord:
    mu_over_t: float
    e0_fci: float = math.nan
    e1_fci: float = math.nan
    e0_casscf: float = math.nan
    e1_ocoo: float = math.nan
    e0_sa: float = math.nan
    e1_sa: float = math.nan
    gap_fci: float = math.nan
    gap_ocoo: float = math.nan
    gap_sa: float = math.nan
    band_over_u: float = math.nan
    proj_gs: float = math.nan
    ocoo_overlap: float = math.nan
    b0_c1: float = math.nan
    b0_c2: float = math.nan
    b0_c3: float = math.nan
    b0_c4: float = math.nan
    b0_weight: float = math.nan
    conv_casscf: bool = False
    conv_sa: bool = False
    conv_ocoo: bool = False
    degenerate_fci: bool = False
    degenerate_sa: bool = False
    degenerate_ocoo: bool = False
    warm_start: bool = False
    error: str = ""

    @property
    def b0_coeffs(self) -> tuple[float, float, float, float]:
        return (self.b0_c1, self.b0_c2, self.b0_c3, self.b0_c4)


COLUMNS = tuple(f.name for f in fields(SweepRecord))
_BOOL_COLUMNS = {f.name for f in fields(SweepRecord) if f.type in ("bool", bool)}
_STR_COLUMNS = {"error"}


@dataclass
class PointState:
    """Optimized rotations carried from one grid point to the next."""

    casscf: Optional[np.ndarray] = None
    sa: Optional[np.ndarray] = None
    ocoo: Optional[np.ndarray] = None


def evaluate_point(
    params: HubbardParams,
    methods: Sequence[str] = METHODS,
    settings: OcooSettings = OcooSettings(),
    spin: str = "singlet",
    spin_penalty: float = DEFAULT_SPIN_PENALTY,
    rng: Optional[np.random.Generator] = None,
    warm: Optional[PointState] = None,
):
    """Run the requested methods at one parameter point.

    Returns ``(record, state, details)``; ``details`` keeps the full result
    objects for callers that need more than the flat record.  Per-method
    failures are written to ``record.error`` instead of raised.
    """
    methods = set(methods)
    if "ocoo" in methods:
        methods.add("casscf")
    rng = rng if rng is not None else np.random.default_rng(settings.optimizer.seed)
    warm = warm or PointState()
    options = settings.optimizer
    t = params.t
    record = SweepRecord(mu_over_t=params.mu_scalar / t if params.kind else math.nan)
    state = PointState()
    details: dict = {}
    errors = []
    penalty = spin_penalty if spin == "singlet" else 0.0
    problem = CasProblem.from_params(params, spin_penalty=penalty)
    if params.u > 0 and params.kind:
        record.band_over_u = spectral_band(params) / params.u
    elif params.kind:
        record.band_over_u = math.inf

    fci = solve_fci(params)
    details["fci"] = fci
    e0_fci, psi0_fci = fci.level(0, spin)
    if "fci" in methods:
        e1_fci, _ = fci.level(1, spin)
        record.e0_fci, record.e1_fci = e0_fci, e1_fci
        record.gap_fci = fci_gap(fci, spin)
        record.degenerate_fci = is_degenerate(fci, spin)

    def extras(previous):
        out = list(SWAP_STARTS)
        if previous is not None:
            out.insert(0, previous)
        return out

    gs = None
    if "casscf" in methods:
        try:
            gs = optimize_casscf(problem, "ground", options, rng, extras(warm.casscf))
        except ConvergenceError as exc:
            gs = exc.best
            errors.append(f"casscf: {exc}")
        record.conv_casscf = gs.converged
        record.e0_casscf = gs.ground.energy
        record.proj_gs = abs(float(gs.ground.vector @ psi0_fci))
        state.casscf = gs.kappa.as_array()
        details["casscf"] = gs
        record.warm_start = warm.casscf is not None

    if "sa_casscf" in methods:
        try:
            sa = optimize_casscf(problem, "state_average", options, rng, extras(warm.sa))
        except ConvergenceError as exc:
            sa = exc.best
            errors.append(f"sa_casscf: {exc}")
        record.conv_sa = sa.converged
        record.e0_sa, record.e1_sa = sa.roots[0].energy, sa.roots[1].energy
        record.gap_sa = record.e1_sa - record.e0_sa
        record.degenerate_sa = sa.degenerate
        state.sa = sa.kappa.as_array()
        details["sa_casscf"] = sa

    if "ocoo" in methods and gs is not None:
        extra = [] if warm.ocoo is None else [warm.ocoo]
        try:
            oc = run_ocoo(problem, gs.ground.vector, gs.kappa, settings, rng, extra)
        except ConvergenceError as exc:
            oc = exc.best
            errors.append(f"ocoo: {exc}")
        record.conv_ocoo = oc.converged
        record.e1_ocoo = oc.energy_e1
        record.gap_ocoo = oc.energy_e1 - gs.ground.energy
        record.ocoo_overlap = abs(oc.overlap_with_psi0)
        record.degenerate_ocoo = oc.degenerate
        coeffs, weight = cas_projection(oc.psi1_embedded, gs.basis, problem.embedder)
        record.b0_c1, record.b0_c2, record.b0_c3, record.b0_c4 = (float(c) for c in coeffs)
        record.b0_weight = weight
        state.ocoo = oc.kappa1.as_array()
        details["ocoo"] = oc

    record.error = "; ".join(errors)
    return _normalized(record), state, details


def _normalized(record: SweepRecord) -> SweepRecord:
    """Plain Python scalars only, so emitters never see numpy types."""
    for f in fields(SweepRecord):
        value = getattr(record, f.name)
        if f.name in _BOOL_COLUMNS:
            setattr(record, f.name, bool(value))
        elif f.name not in _STR_COLUMNS:
            setattr(record, f.name, float(value))
    return record


def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _run_block(config: SweepConfig, indices: Sequence[int]) -> list[SweepRecord]:
    grid = config.grid()
    records = []
    warm = PointState()
    for i in indices:
        mu = grid[i]
        params = HubbardParams.trimer(config.kind, mu * config.t, config.u_over_t * config.t, config.t)
        try:
            record, state, _ = evaluate_point(
                params,
                config.methods,
                config.ocoo,
                config.spin,
                config.spin_penalty,
                _point_rng(config.seed, i),
                warm if config.warm_start else None,
            )
        except Exception as exc:  # a failed point never aborts the sweep
            log.exception("grid point mu/t=%s failed", mu)
            record, state = SweepRecord(mu_over_t=mu, error=f"{type(exc).__name__}: {exc}"), PointState()
        record.mu_over_t = mu
        log.info("mu/t=%g done%s", mu, f" ({record.error})" if record.error else "")
        records.append(record)
        warm = state
    return records


def _check_writable(path) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"output directory {parent} is not writable")


def run_sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    """Evaluate every grid point.

    With ``jobs > 1`` the grid is split into contiguous blocks, and warm
    starts chain only within a block.
    """
    _check_writable(config.csv_path)
    _check_writable(config.json_path)
    n = len(config.grid())
    if jobs <= 1 or n < 2:
        return _run_block(config, range(n))
    jobs = min(jobs, n)
    blocks = [list(b) for b in np.array_split(np.arange(n), jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_block, [config] * len(blocks), blocks))
    return [r for part in parts for r in part]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse(name: str, text: str):
    if name in _BOOL_COLUMNS:
        if text not in ("true", "false"):
            raise ParameterError(f"column {name}: expected true/false, got {text!r}")
        return text == "true"
    if name in _STR_COLUMNS:
        return text
    return float(text)


def emit(records: Sequence[SweepRecord], fmt: str, path) -> None:
    """Write records as CSV (fixed column order) or a JSON array of flat objects."""
    if not records:
        raise ParameterError("no records to emit")
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(COLUMNS)
                for r in records:
                    writer.writerow([_format(getattr(r, c)) for c in COLUMNS])
        elif fmt == "json":
            rows = [
                {c: _json_value(getattr(r, c)) for c in COLUMNS}
                for r in records
            ]
            path.write_text(json.dumps(rows, indent=1, allow_nan=False) + "\n")
        else:
            raise ParameterError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def read_csv(path) -> list[SweepRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ParameterError(f"{path}: unexpected header {header}")
        return [SweepRecord(**{c: _parse(c, v) for c, v in zip(header, row)}) for row in reader]


def read_json(path) -> list[SweepRecord]:
    rows = json.loads(Path(path).read_text())
    out = []
    for row in rows:
        values = {}
        for c in COLUMNS:
            v = row[c]
            if c in _BOOL_COLUMNS or c in _STR_COLUMNS:
                values[c] = v
            else:
                values[c] = math.nan if v is None else float(v)
        out.append(SweepRecord(**values))
    return out


def config_to_dict(config: SweepConfig) -> dict:
    return asdict(config)
