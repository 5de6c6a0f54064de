"""Measurement basis, outcome likelihoods and fidelity from an accumulated propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoInformationError
from .qmat import BlochVector, bloch_from_state, svd2, unit_vector, wrap_angle
from .trajectory import ScaledPropagator

DEGENERATE_TOL = 1e-9
EQUATOR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    psi1: np.ndarray
    psi2: np.ndarray
    w1: float
    w2: float
    fidelity: float
    rotation: np.ndarray
    basis_angles: BlochVector
    result_index: int
    final_state: np.ndarray
    degenerate: bool

    @property
    def winner(self) -> np.ndarray:
        return self.psi1 if self.result_index == 1 else self.psi2


def _fix_phase(psi: np.ndarray) -> np.ndarray:
    """Make the first nonzero amplitude real and positive."""
    lead = psi[0] if abs(psi[0]) > 0.0 else psi[1]
    return psi * (abs(lead) / lead)


def analyze(prop) -> MeasurementOutcome:
    """Split the propagator into rotation and measurement parts and read off the outcome.

    Accepts a :class:`ScaledPropagator` or a bare 2x2 matrix; the overall
    scale never enters any output.
    """
    m = prop.matrix if isinstance(prop, ScaledPropagator) else np.asarray(prop, dtype=complex)
    w, s, v = svd2(m)
    rotation = w @ v.conj().T
    ratio = s[1] / s[0]
    r2 = ratio * ratio
    w1 = 1.0 / (1.0 + r2)
    w2 = r2 / (1.0 + r2)
    fidelity = 1.0 - 2.0 * w2
    psi1 = _fix_phase(v[:, 0])
    psi2 = _fix_phase(v[:, 1])
    result_index = 1 if w1 >= w2 else 2
    winner = psi1 if result_index == 1 else psi2
    return MeasurementOutcome(
        psi1=psi1,
        psi2=psi2,
        w1=w1,
        w2=w2,
        fidelity=fidelity,
        rotation=rotation,
        basis_angles=canonical_axis(psi1, psi2),
        result_index=result_index,
        final_state=rotation @ winner,
        degenerate=abs(w1 - w2) < DEGENERATE_TOL,
    )


def measurement_matrix(outcome: MeasurementOutcome, norm_sq: float = 1.0) -> np.ndarray:
    """Positive part ``sqrt(P1)|psi1><psi1| + sqrt(P2)|psi2><psi2|`` with ``P1 + P2 = norm_sq``."""
    p1 = math.sqrt(outcome.w1 * norm_sq)
    p2 = math.sqrt(outcome.w2 * norm_sq)
    return p1 * np.outer(outcome.psi1, outcome.psi1.conj()) + p2 * np.outer(outcome.psi2, outcome.psi2.conj())


def _axis_rank(n: np.ndarray) -> tuple:
    x, y, z = n
    if z > EQUATOR_TOL:
        return (2, 0.0, 0.0)
    if z < -EQUATOR_TOL:
        return (0, 0.0, 0.0)
    phi = math.atan2(y, x)
    in_range = -math.pi / 2 <= phi < math.pi / 2
    return (1, 1.0 if in_range else 0.0, x)


def canonical_axis(psi1, psi2) -> BlochVector:
    """Representative direction of the measurement axis ``{psi1, psi2}``.

    Picks the eigenvector in the upper hemisphere; on the equator, the one
    with azimuth in ``[-pi/2, pi/2)``. The result does not depend on the
    order of the two inputs.
    """
    b1, b2 = bloch_from_state(psi1), bloch_from_state(psi2)
    n1, n2 = unit_vector(b1.theta, b1.phi), unit_vector(b2.theta, b2.phi)
    pick = b1 if _axis_rank(n1) > _axis_rank(n2) else b2 if _axis_rank(n2) > _axis_rank(n1) else min(b1, b2)
    return BlochVector(1.0, pick.theta, wrap_angle(pick.phi) if pick.theta > 0.0 else 0.0)


def result_direction(outcome: MeasurementOutcome) -> BlochVector:
    """Bloch direction of the inferred pre-measurement state."""
    if outcome.degenerate or outcome.fidelity <= 0.0:
        raise NoInformationError("zero-fidelity outcome has no preferred direction")
    return bloch_from_state(outcome.winner)


def running_fidelity(matrix) -> float:
    """Fidelity from the invariants ``|det M|`` and ``||M||_F`` alone."""
    m = np.asarray(matrix, dtype=complex)
    nf = float(np.sum(np.abs(m) ** 2))
    det = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return math.sqrt(max(0.0, 1.0 - 4.0 * det * det / (nf * nf)))
