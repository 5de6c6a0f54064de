"""2x2 linear algebra and Bloch-sphere helpers for a single charge qubit.

Everything lives in the energy eigenbasis ``{|0>, |1>}`` of the qubit
Hamiltonian ``H = -E sigma_z / 2``; ``|0>`` is the ground state and sits at
the north pole ``(theta, phi) = (0, 0)`` of the Bloch sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DegeneratePropagatorError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QubitParams:
    """Energy splitting ``E`` (hbar = 1) and charge/energy basis angle ``beta``."""

    energy_splitting: float
    beta: float

    def __post_init__(self):
        if not self.energy_splitting > 0:
            raise ConfigError(f"energy splitting must be positive, got {self.energy_splitting}")
        if not 0.0 <= self.beta <= math.pi / 2 + 1e-12:
            raise ConfigError(f"beta must lie in [0, pi/2], got {self.beta}")


class BlochVector(NamedTuple):
    r: float
    theta: float
    phi: float

    def cartesian(self) -> np.ndarray:
        return self.r * unit_vector(self.theta, self.phi)


class PolarFactors(NamedTuple):
    rotation: np.ndarray
    positive_part: np.ndarray


class SVD2(NamedTuple):
    """Singular-value factorization ``M = W diag(s) V^dagger`` with s[0] >= s[1]."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated 2x2 qubit density matrix in the energy eigenbasis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"density matrix must be 2x2, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(m)[0] < -1e-12:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_bloch(cls, bloch: BlochVector) -> DensityMatrix:
        x, y, z = bloch.cartesian()
        return cls(0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))

    @classmethod
    def maximally_mixed(cls) -> DensityMatrix:
        return cls(0.5 * IDENTITY)

    def bloch_cartesian(self) -> np.ndarray:
        m = self.matrix
        return np.array([2.0 * m[0, 1].real, -2.0 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real])

    def bloch(self) -> BlochVector:
        return bloch_from_cartesian(self.bloch_cartesian())

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, op) -> complex:
        return complex(np.trace(np.asarray(op) @ self.matrix))


def charge_states(qp: QubitParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(|L>, |R>)`` as real unit vectors in the energy eigenbasis."""
    c, s = math.cos(qp.beta / 2), math.sin(qp.beta / 2)
    state_l = np.array([s, -c], dtype=complex)
    state_r = np.array([c, s], dtype=complex)
    return state_l, state_r


def wrap_angle(phi: float) -> float:
    """Map an angle onto ``[-pi, pi)``."""
    w = math.fmod(phi + math.pi, _TWO_PI)
    if w < 0:
        w += _TWO_PI
    w -= math.pi
    return -math.pi if w >= math.pi else w


def unit_vector(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def bloch_from_cartesian(v) -> BlochVector:
    x, y, z = (float(c) for c in v)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return BlochVector(0.0, 0.0, 0.0)
    theta = math.atan2(math.hypot(x, y), z)
    phi = wrap_angle(math.atan2(y, x)) if (x != 0.0 or y != 0.0) else 0.0
    return BlochVector(r, theta, phi)


def bloch_from_state(psi) -> BlochVector:
    """Bloch coordinates of a pure state.

    The global phase is fixed so the ``|0>`` amplitude is real and
    non-negative; if that amplitude vanishes the state is ``|1>`` and maps to
    ``(1, pi, 0)``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {psi.shape}")
    norm = math.sqrt(float(np.vdot(psi, psi).real))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state is not normalized (norm {norm})")
    a, b = abs(psi[0]), abs(psi[1])
    if a == 0.0:
        return BlochVector(1.0, math.pi, 0.0)
    theta = 2.0 * math.atan2(b, a)
    phi = wrap_angle(float(np.angle(psi[1])) - float(np.angle(psi[0]))) if b > 0.0 else 0.0
    return BlochVector(1.0, theta, phi)


def state_from_bloch(theta: float, phi: float) -> np.ndarray:
    """``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``."""
    return np.array([math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2)])


def angle_between(a: BlochVector, b: BlochVector) -> float:
    """Angle between the directions of two Bloch vectors (lengths ignored)."""
    dot = float(unit_vector(a.theta, a.phi) @ unit_vector(b.theta, b.phi))
    return math.acos(min(1.0, max(-1.0, dot)))


def _orthogonal(u: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(u[1]), np.conj(u[0])])


def svd2(m) -> SVD2:
    """Closed-form singular-value factorization of a 2x2 complex matrix.

    The right singular vectors are the eigenvectors of ``M^dagger M``; the
    small singular value is taken from ``|det M| / s1`` so it keeps full
    relative precision even when the two values differ by many decades.
    """
    m = np.asarray(m, dtype=complex)
    amax = float(np.max(np.abs(m)))
    if not amax > 1e-300:
        raise DegeneratePropagatorError("matrix has no nonzero singular value")
    # exact power-of-two rescale keeps the squares below in range
    exp = math.frexp(amax)[1]
    ms = m * math.ldexp(1.0, -exp)

    a = float(np.vdot(ms[:, 0], ms[:, 0]).real)
    d = float(np.vdot(ms[:, 1], ms[:, 1]).real)
    c = complex(np.vdot(ms[:, 0], ms[:, 1]))
    half = 0.5 * (a - d)
    rad = math.hypot(half, abs(c))
    lam1 = 0.5 * (a + d) + rad
    s1 = math.sqrt(lam1)
    s2 = abs(complex(ms[0, 0] * ms[1, 1] - ms[0, 1] * ms[1, 0])) / s1

    if abs(c) == 0.0:
        v1 = np.array([1.0, 0.0], dtype=complex) if a >= d else np.array([0.0, 1.0], dtype=complex)
    elif a >= d:
        v1 = np.array([lam1 - d, np.conj(c)], dtype=complex)
    else:
        v1 = np.array([c, lam1 - a], dtype=complex)
    v1 /= np.linalg.norm(v1)
    v2 = _orthogonal(v1)

    w1 = ms @ v1 / s1
    w1 /= np.linalg.norm(w1)
    u = _orthogonal(w1)
    x = complex(np.vdot(u, ms @ v2))
    w2 = u * (x / abs(x)) if abs(x) > 0.0 else u

    scale = math.ldexp(1.0, exp)
    return SVD2(
        left=np.column_stack([w1, w2]),
        singular_values=np.array([s1 * scale, s2 * scale]),
        right=np.column_stack([v1, v2]),
    )


def polar_decompose(m) -> PolarFactors:
    """Right polar form ``M = rotation @ positive_part``."""
    w, s, v = svd2(m)
    vh = v.conj().T
    positive = (v * s) @ vh
    positive = 0.5 * (positive + positive.conj().T)
    return PolarFactors(rotation=w @ vh, positive_part=positive)
