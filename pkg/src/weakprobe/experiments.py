"""Ensemble experiments: basis scatter, fidelity versus duration, tomography, single-run dumps.

All durations are given in units of the measurement time ``tau_m`` and
rounded to the nearest whole number of steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import analyze
from .detector import BinSet, DetectorParams, build_bins, calibrate
from .qmat import KET_0, KET_1, BlochVector, DensityMatrix, QubitParams, bloch_from_state, charge_states
from .tomography import TomographyEstimate, collect_directions, reconstruct
from .trajectory import TrajectoryResult, run_ensemble, run_trajectory

SCATTER_COLUMNS = ("run_index", "theta", "phi", "fidelity", "result_theta", "result_phi", "w1", "degenerate_flag")


@dataclass(frozen=True)
class Frame:
    """Numerical frame shared by every run; the coupling enters only through ``g``."""

    energy_splitting: float = 1.0
    delta_t: float = 0.01
    sigma: float = 1.0
    bin_width: float | None = None
    bin_range_sigmas: float = 6.0


@dataclass(frozen=True, eq=False)
class Setup:
    qp: QubitParams
    dp: DetectorParams
    bins: BinSet

    @property
    def tau_m(self) -> float:
        return self.dp.tau_m

    def steps(self, duration_tau: float) -> int:
        return max(1, int(round(duration_tau * self.tau_m / self.dp.delta_t)))


def make_setup(g: float, beta: float, frame: Frame = Frame()) -> Setup:
    qp = QubitParams(frame.energy_splitting, beta)
    dp = calibrate(g, frame.energy_splitting, frame.delta_t, frame.sigma,
                   bin_width=frame.bin_width, bin_range_sigmas=frame.bin_range_sigmas)
    return Setup(qp, dp, build_bins(dp, qp))


def initial_state(spec, qp: QubitParams) -> DensityMatrix:
    """Named state (L, R, ground, excited, +x, -x, +y, -y) or a BlochVector/(r, theta, phi)."""
    if isinstance(spec, str):
        key = spec.strip()
        state_l, state_r = charge_states(qp)
        named = {
            "L": state_l, "R": state_r,
            "ground": KET_0, "0": KET_0, "+z": KET_0,
            "excited": KET_1, "1": KET_1, "-z": KET_1,
        }
        if key in named:
            return DensityMatrix.from_state(named[key])
        axes = {"+x": (math.pi / 2, 0.0), "-x": (math.pi / 2, math.pi),
                "+y": (math.pi / 2, math.pi / 2), "-y": (math.pi / 2, -math.pi / 2)}
        if key in axes:
            return DensityMatrix.from_bloch(BlochVector(1.0, *axes[key]))
        raise ValueError(f"unknown initial state {spec!r}")
    r, theta, phi = spec
    return DensityMatrix.from_bloch(BlochVector(float(r), float(theta), float(phi)))


def basis_scatter(setup: Setup, initial: DensityMatrix, n_runs: int, duration_tau: float, master_seed,
                  workers: int | None = None, backend: str | None = None) -> np.ndarray:
    """Per-run basis axis, fidelity and result direction; columns as ``SCATTER_COLUMNS``."""
    ens = run_ensemble(initial, setup.steps(duration_tau), setup.bins, setup.qp, master_seed,
                       n_runs=n_runs, workers=workers, backend=backend)
    rows = np.empty((n_runs, len(SCATTER_COLUMNS)))
    for j in range(n_runs):
        out = analyze(ens.propagator(j))
        if out.degenerate:
            res = (math.nan, math.nan)
        else:
            b = bloch_from_state(out.winner)
            res = (b.theta, b.phi)
        rows[j] = (j, out.basis_angles.theta, out.basis_angles.phi, out.fidelity, *res, out.w1, float(out.degenerate))
    return rows


@dataclass(frozen=True)
class FidelityCurve:
    durations_tau: np.ndarray
    steps: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int


def fidelity_curve(setup: Setup, initial: DensityMatrix, n_runs: int, durations_tau, master_seed,
                   workers: int | None = None, backend: str | None = None) -> FidelityCurve:
    """Mean fidelity and its standard error at each duration.

    Shorter durations are read off as prefixes of the longest trajectories;
    a prefix of a record is itself a valid record of the shorter duration.
    """
    durations_tau = np.asarray(sorted(durations_tau), dtype=float)
    steps = np.array([setup.steps(d) for d in durations_tau])
    ens = run_ensemble(initial, int(steps.max()), setup.bins, setup.qp, master_seed, n_runs=n_runs,
                       checkpoints=steps.tolist(), workers=workers, backend=backend)
    fid = np.array([[analyze(ens.propagator(j, int(s))).fidelity for j in range(n_runs)] for s in steps])
    ddof = 1 if n_runs > 1 else 0
    return FidelityCurve(durations_tau, steps, fid.mean(axis=1), fid.std(axis=1, ddof=ddof) / math.sqrt(n_runs), n_runs)


@dataclass(frozen=True)
class TomographyResult:
    estimate: TomographyEstimate
    excluded: int
    true_bloch: np.ndarray
    error: float


def tomography_run(setup: Setup, initial: DensityMatrix, n_runs: int, duration_tau: float, master_seed,
                   workers: int | None = None, backend: str | None = None) -> TomographyResult:
    sample = collect_directions(initial, n_runs, setup.steps(duration_tau) * setup.dp.delta_t, setup.bins,
                                setup.qp, master_seed, workers=workers, backend=backend)
    est = reconstruct(sample)
    truth = initial.bloch_cartesian()
    return TomographyResult(est, sample.excluded, truth, float(np.linalg.norm(est.vector - truth)))


def single_trajectory(setup: Setup, initial: DensityMatrix, duration_tau: float, seed,
                      backend: str | None = None) -> TrajectoryResult:
    n = setup.steps(duration_tau)
    return run_trajectory(initial, n * setup.dp.delta_t, setup.bins, setup.qp, seed, history=True, backend=backend)
