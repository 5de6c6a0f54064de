"""Stochastic time stepping: Hamiltonian precession followed by detector back-action.

Each step draws one uniform variate, picks a current bin by inverse CDF from
the present state, applies ``kraus[k] @ U_H`` to the state, and multiplies it
onto the accumulated propagator. The propagator is kept in a Frobenius-norm
window by exact power-of-two rescaling, with the exponent tracked separately.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _accel
from .detector import BinSet, sample_bin
from .errors import ConfigError, DeadBranchError
from .qmat import DensityMatrix, QubitParams

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
CHUNK_STEPS = 8192
MAX_E_DT = 0.1


def hamiltonian_step(qp: QubitParams, delta_t: float) -> np.ndarray:
    """Exact ``exp(-i H dt)`` for ``H = -E sigma_z / 2``."""
    phase = qp.energy_splitting * delta_t
    if phase > MAX_E_DT:
        raise ConfigError(f"E*dt = {phase:g} exceeds {MAX_E_DT}; time step too coarse")
    h = complex(math.cos(phase / 2), math.sin(phase / 2))
    return np.array([[h, 0.0], [0.0, h.conjugate()]])


@dataclass(frozen=True, eq=False)
class ScaledPropagator:
    """Total evolution matrix stored as ``matrix * 2**exponent``."""

    matrix: np.ndarray
    exponent: int = 0

    @classmethod
    def identity(cls) -> ScaledPropagator:
        return cls(np.eye(2, dtype=complex), 0)

    @property
    def log_scale(self) -> float:
        return self.exponent * LN2

    def full(self) -> np.ndarray:
        """Unscaled product; may under- or overflow for long chains."""
        return self.matrix * math.exp(self.log_scale)


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    record: np.ndarray
    propagator: ScaledPropagator
    final_rho: DensityMatrix
    seed: int | tuple
    params: dict
    state_history: np.ndarray | None = None
    fidelity_history: np.ndarray | None = None


@dataclass(eq=False)
class EnsembleResult:
    """Final propagators/states for a batch of trajectories, merged by index.

    ``snapshots`` maps a step count to ``(acc, exps)`` arrays captured when
    every trajectory had completed exactly that many steps.
    """

    indices: np.ndarray
    acc: np.ndarray
    exps: np.ndarray
    rho: np.ndarray
    snapshots: dict = field(default_factory=dict)

    def propagator(self, j: int, step: int | None = None) -> ScaledPropagator:
        acc, exps = (self.acc, self.exps) if step is None else self.snapshots[step]
        return ScaledPropagator(_acc_to_matrix(acc[j]), int(exps[j]))

    def final_rho(self, j: int) -> DensityMatrix:
        return _rho_from_array(self.rho[j])


def trajectory_rng(seed) -> np.random.Generator:
    """Generator for one trajectory; ``seed`` is an int or ``(master_seed, index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def seed_key(master_seed) -> tuple:
    """Normalize an int or tuple master seed to a tuple of ints."""
    if isinstance(master_seed, (tuple, list)):
        return tuple(int(s) for s in master_seed)
    return (int(master_seed),)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("WEAKPROBE_WORKERS", "1")))
    except ValueError:
        return 1


def n_steps_for(duration: float, delta_t: float, strict: bool = True) -> int:
    ratio = duration / delta_t
    n = int(round(ratio))
    if n < 1:
        raise ConfigError(f"duration {duration} is shorter than one step of {delta_t}")
    if strict and abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"duration {duration} is not an integer number of steps of {delta_t}")
    return n


def _kernel_args(bins: BinSet, qp: QubitParams) -> tuple:
    hamiltonian_step(qp, bins.delta_t)  # validates E*dt
    half = 0.5 * qp.energy_splitting * bins.delta_t
    full = qp.energy_splitting * bins.delta_t
    k = bins.kraus
    return (
        np.ascontiguousarray(k[:, 0, 0].real),
        np.ascontiguousarray(k[:, 0, 1].real),
        np.ascontiguousarray(k[:, 1, 1].real),
        np.ascontiguousarray(bins.cum_L),
        np.ascontiguousarray(bins.cum_R),
        float(bins.state_L[0]),
        float(bins.state_L[1]),
        math.cos(half),
        math.sin(half),
        math.cos(full),
        math.sin(full),
    )


def _rho_to_array(rho: DensityMatrix) -> np.ndarray:
    m = rho.matrix
    return np.array([m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag])


def _rho_from_array(a) -> DensityMatrix:
    z = complex(a[2], a[3])
    return DensityMatrix(np.array([[a[0], z], [z.conjugate(), a[1]]]))


def _matrix_to_acc(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex).ravel()
    return np.column_stack([m.real, m.imag]).ravel()


def _acc_to_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return (a[0::2] + 1j * a[1::2]).reshape(2, 2)


_EMPTY_HIST = (np.zeros((0, 0, 4)), np.zeros((0, 0)))


def _run_kernel(kern, rho, acc, exps, uniforms, record, n_steps, replay, args, hist=_EMPTY_HIST):
    dead = kern.propagate(rho, acc, exps, uniforms, record, n_steps, replay, *args, *hist)
    if dead >= 0:
        raise DeadBranchError(f"trajectory {dead} reached an outcome of zero probability")


def _backend(name):
    return _accel.kernels if name is None else _accel.load(name)


def step(state: DensityMatrix, acc: ScaledPropagator, bins: BinSet, qp: QubitParams,
         rng: np.random.Generator, backend: str | None = None) -> tuple[DensityMatrix, ScaledPropagator, int]:
    """One measurement step: sample ``k`` from ``state``, then apply ``kraus[k] @ U_H``."""
    k = sample_bin(bins, state, rng)
    rho = _rho_to_array(state)[None, :]
    a = _matrix_to_acc(acc.matrix)[None, :]
    exps = np.array([acc.exponent], dtype=np.int64)
    record = np.array([[k]], dtype=np.int64)
    _run_kernel(_backend(backend), rho, a, exps, np.zeros((1, 1)), record, 1, True, _kernel_args(bins, qp))
    return _rho_from_array(rho[0]), ScaledPropagator(_acc_to_matrix(a[0]), int(exps[0])), k


def replay(record, initial: DensityMatrix, bins: BinSet, qp: QubitParams,
           backend: str | None = None) -> tuple[ScaledPropagator, DensityMatrix]:
    """Re-apply a recorded bin sequence starting from the unit propagator."""
    record = np.ascontiguousarray(record, dtype=np.int64)[None, :]
    if record.size and (record.min() < 0 or record.max() >= bins.n_bins):
        raise ValueError("record contains bin indices outside the bin set")
    rho = _rho_to_array(initial)[None, :]
    acc = _matrix_to_acc(np.eye(2))[None, :]
    exps = np.zeros(1, dtype=np.int64)
    _run_kernel(_backend(backend), rho, acc, exps, np.zeros((1, 0)), record, record.shape[1], True,
                _kernel_args(bins, qp))
    return ScaledPropagator(_acc_to_matrix(acc[0]), int(exps[0])), _rho_from_array(rho[0])


def run_trajectory(initial: DensityMatrix, duration: float, bins: BinSet, qp: QubitParams, seed,
                   history: bool = False, backend: str | None = None) -> TrajectoryResult:
    """Simulate one record of ``duration / delta_t`` steps from the unit propagator."""
    n_steps = n_steps_for(duration, bins.delta_t)
    kern = _backend(backend)
    args = _kernel_args(bins, qp)
    rng = trajectory_rng(seed)
    rho = _rho_to_array(initial)[None, :]
    acc = _matrix_to_acc(np.eye(2))[None, :]
    exps = np.zeros(1, dtype=np.int64)
    record = np.empty((1, n_steps), dtype=np.int64)
    hist = (np.empty((1, n_steps, 4)), np.empty((1, n_steps))) if history else _EMPTY_HIST

    done = 0
    while done < n_steps:
        c = min(CHUNK_STEPS, n_steps - done)
        u = rng.random(c)[None, :]
        rec = np.empty((1, c), dtype=np.int64)
        h = (hist[0][:, done:done + c], hist[1][:, done:done + c]) if history else _EMPTY_HIST
        if history:
            h = (np.ascontiguousarray(h[0]), np.ascontiguousarray(h[1]))
        _run_kernel(kern, rho, acc, exps, u, rec, c, False, args, h)
        record[:, done:done + c] = rec
        if history:
            hist[0][:, done:done + c] = h[0]
            hist[1][:, done:done + c] = h[1]
        done += c

    return TrajectoryResult(
        record=record[0],
        propagator=ScaledPropagator(_acc_to_matrix(acc[0]), int(exps[0])),
        final_rho=_rho_from_array(rho[0]),
        seed=seed,
        params=dict(energy_splitting=qp.energy_splitting, beta=qp.beta, delta_t=bins.delta_t,
                    n_bins=bins.n_bins, n_steps=n_steps),
        state_history=hist[0][0] if history else None,
        fidelity_history=hist[1][0] if history else None,
    )


def _run_block(kern, args, initial_arr, n_steps, master_seed, indices, checkpoints):
    n = len(indices)
    rngs = [trajectory_rng((*seed_key(master_seed), int(j))) for j in indices]
    rho = np.tile(initial_arr, (n, 1))
    acc = np.tile(_matrix_to_acc(np.eye(2)), (n, 1))
    exps = np.zeros(n, dtype=np.int64)
    snapshots = {}
    stops = sorted({c for c in checkpoints if 0 < c <= n_steps} | {n_steps})
    done = 0
    for stop in stops:
        while done < stop:
            c = min(CHUNK_STEPS, stop - done)
            u = np.empty((n, c))
            for i, g in enumerate(rngs):
                u[i] = g.random(c)
            record = np.empty((n, c), dtype=np.int64)
            _run_kernel(kern, rho, acc, exps, u, record, c, False, args)
            done += c
        if stop in checkpoints:
            snapshots[stop] = (acc.copy(), exps.copy())
    return rho, acc, exps, snapshots


def run_ensemble(initial: DensityMatrix, n_steps: int, bins: BinSet, qp: QubitParams, master_seed: int,
                 n_runs: int | None = None, indices: Sequence[int] | None = None,
                 checkpoints: Sequence[int] = (), workers: int | None = None,
                 backend: str | None = None) -> EnsembleResult:
    """Run independent trajectories seeded by ``(master_seed, index)``.

    Trajectory ``j`` is identical to ``run_trajectory(..., seed=(master_seed, j))``
    regardless of how indices are split across workers. ``master_seed`` may
    itself be a tuple, in which case ``j`` is appended to it.
    """
    if indices is None:
        if n_runs is None or n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        indices = np.arange(n_runs)
    indices = np.asarray(indices, dtype=np.int64)
    if n_steps < 1:
        raise ConfigError("n_steps must be at least 1")
    workers = default_workers() if workers is None else max(1, int(workers))
    kern = _backend(backend)
    args = _kernel_args(bins, qp)
    init = _rho_to_array(initial)
    checkpoints = set(int(c) for c in checkpoints)

    blocks = [b for b in np.array_split(indices, min(workers, len(indices))) if len(b)]
    job = lambda b: _run_block(kern, args, init, n_steps, master_seed, b, checkpoints)
    if len(blocks) == 1:
        parts = [job(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))

    snapshots = {
        c: (np.concatenate([p[3][c][0] for p in parts]), np.concatenate([p[3][c][1] for p in parts]))
        for c in parts[0][3]
    }
    return EnsembleResult(
        indices=indices,
        rho=np.concatenate([p[0] for p in parts]),
        acc=np.concatenate([p[1] for p in parts]),
        exps=np.concatenate([p[2] for p in parts]),
        snapshots=snapshots,
    )
