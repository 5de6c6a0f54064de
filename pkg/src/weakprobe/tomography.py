"""State reconstruction from runs measured in stochastically chosen bases.

Every run contributes the Bloch direction ``n_j`` of its inferred
pre-measurement state. The estimate minimizes

    T(r, theta, phi) = sum_j (1 - r cos Omega_j)^2,

which in ``v = r n`` reads ``sum_j (1 - v . n_j)^2``: a quadratic with
normal equations ``A v = b``, ``A = sum n_j n_j^T``, ``b = sum n_j``. A
solution outside the unit ball is replaced by the constrained minimizer on
the sphere ``|v| = 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .analysis import analyze, result_direction
from .detector import BinSet
from .errors import NoInformationError, ReconstructionError
from .qmat import BlochVector, DensityMatrix, QubitParams, bloch_from_cartesian, unit_vector
from .trajectory import n_steps_for, run_ensemble

log = logging.getLogger(__name__)

CLUSTER_WARNING = 0.02


@dataclass(frozen=True)
class DirectionSample:
    """Result directions ``(theta_j, phi_j)`` of the informative runs."""

    angles: np.ndarray
    excluded: int
    run_indices: np.ndarray

    def __len__(self):
        return len(self.angles)


@dataclass(frozen=True)
class TomographyEstimate:
    bloch: BlochVector
    residual: float
    n_runs: int
    moment_condition: float

    @property
    def vector(self) -> np.ndarray:
        return self.bloch.cartesian()

    @property
    def clustered(self) -> bool:
        """True when the bases are too concentrated for a reliable estimate."""
        return self.moment_condition < CLUSTER_WARNING


def unit_vectors(directions) -> np.ndarray:
    if isinstance(directions, DirectionSample):
        directions = directions.angles
    ang = np.asarray(directions, dtype=float).reshape(-1, 2)
    th, ph = ang[:, 0], ang[:, 1]
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def collect_directions(initial: DensityMatrix, n_runs: int, duration: float, bins: BinSet, qp: QubitParams,
                       master_seed: int, workers: int | None = None, backend: str | None = None) -> DirectionSample:
    """Simulate ``n_runs`` trajectories and keep each run's result direction.

    Zero-fidelity runs carry no direction; they are dropped and counted.
    """
    if n_runs < 1:
        raise ReconstructionError("need at least one run")
    n_steps = n_steps_for(duration, bins.delta_t, strict=False)
    ens = run_ensemble(initial, n_steps, bins, qp, master_seed, n_runs=n_runs, workers=workers, backend=backend)
    angles, kept = [], []
    for j in range(n_runs):
        try:
            d = result_direction(analyze(ens.propagator(j)))
        except NoInformationError:
            continue
        angles.append((d.theta, d.phi))
        kept.append(j)
    if not angles:
        raise ReconstructionError(f"all {n_runs} runs had zero fidelity")
    return DirectionSample(np.array(angles), n_runs - len(angles), np.array(kept))


def cost(r: float, theta: float, phi: float, directions) -> float:
    n = unit_vectors(directions)
    c = n @ unit_vector(theta, phi)
    return float(np.sum((1.0 - r * c) ** 2))


def reconstruct(directions) -> TomographyEstimate:
    n = unit_vectors(directions)
    m = len(n)
    if m == 0:
        raise ReconstructionError("no directions to reconstruct from")
    a = n.T @ n
    b = n.sum(axis=0)
    lam, q = np.linalg.eigh(a)
    bq = q.T @ b
    live = lam > 1e-10 * lam[-1]
    if np.any(np.abs(bq[~live]) > 1e-8 * max(1.0, np.linalg.norm(b))):
        raise ReconstructionError("directions do not determine the Bloch vector")

    coef = np.zeros(3)
    coef[live] = bq[live] / lam[live]
    if coef @ coef > 1.0:
        lam_l, bq_l = lam[live], bq[live]
        shift = brentq(lambda s: np.sum((bq_l / (lam_l + s)) ** 2) - 1.0, 0.0, np.linalg.norm(b), xtol=1e-15)
        coef[live] = bq_l / (lam_l + shift)
        coef /= max(1.0, math.sqrt(coef @ coef))
    v = q @ coef
    residual = float(np.sum((1.0 - n @ v) ** 2))
    est = TomographyEstimate(
        bloch=bloch_from_cartesian(v),
        residual=residual,
        n_runs=m,
        moment_condition=float(max(lam[0], 0.0) / m),
    )
    if est.clustered:
        log.warning("measurement bases are clustered (moment condition %.3g < %g); estimate unreliable",
                    est.moment_condition, CLUSTER_WARNING)
    return est


def density_from_bloch(est) -> DensityMatrix:
    bloch = est.bloch if isinstance(est, TomographyEstimate) else est
    if bloch.r > 1.0 + 1e-12:
        raise ValueError(f"Bloch length {bloch.r} exceeds 1")
    return DensityMatrix.from_bloch(BlochVector(min(bloch.r, 1.0), bloch.theta, bloch.phi))
