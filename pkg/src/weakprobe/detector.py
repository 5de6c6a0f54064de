"""Discretized point-contact detector: Gaussian current histograms and Kraus matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError
from .qmat import DensityMatrix, QubitParams, charge_states

MIN_BINS = 8


@dataclass(frozen=True)
class DetectorParams:
    """Per-step current statistics of the detector.

    ``sigma`` is the standard deviation of the current averaged over one
    step of length ``delta_t``; ``bin_width`` is the histogram resolution.
    """

    mean_L: float
    mean_R: float
    sigma: float
    bin_width: float
    delta_t: float
    bin_range_sigmas: float = 6.0

    def __post_init__(self):
        for name in ("sigma", "bin_width", "delta_t", "bin_range_sigmas"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def separation(self) -> float:
        return abs(self.mean_R - self.mean_L)

    @property
    def tau_m(self) -> float:
        """Time after which the averaged noise ``2 sigma / sqrt(N)`` equals the separation."""
        if self.separation == 0.0:
            return math.inf
        return 4.0 * self.sigma**2 * self.delta_t / self.separation**2

    def coupling(self, energy_splitting: float) -> CouplingSpec:
        return CouplingSpec(g=energy_splitting * self.tau_m / (2.0 * math.pi), tau_m=self.tau_m)


@dataclass(frozen=True)
class CouplingSpec:
    """Dimensionless coupling ``g = E tau_m / 2 pi`` and the matching measurement time."""

    g: float
    tau_m: float


@dataclass(frozen=True, eq=False)
class BinSet:
    edges: np.ndarray
    bin_centers: np.ndarray
    mass_L: np.ndarray
    mass_R: np.ndarray
    kraus: np.ndarray
    cum_L: np.ndarray
    cum_R: np.ndarray
    state_L: np.ndarray
    state_R: np.ndarray
    delta_t: float

    @property
    def n_bins(self) -> int:
        return len(self.bin_centers)

    def povm_sum(self) -> np.ndarray:
        k = self.kraus
        return np.einsum("kji,kjl->il", k.conj(), k)


def calibrate(g: float, energy_splitting: float, delta_t: float, sigma: float,
              bin_width: float | None = None, bin_range_sigmas: float = 6.0) -> DetectorParams:
    """Place the two current means so that ``E tau_m / 2 pi == g``.

    The means sit symmetrically about zero; ``bin_width`` defaults to
    ``sigma / 10``.
    """
    for name, val in (("g", g), ("energy_splitting", energy_splitting), ("delta_t", delta_t), ("sigma", sigma)):
        if not val > 0:
            raise ConfigError(f"{name} must be positive, got {val}")
    tau_m = 2.0 * math.pi * g / energy_splitting
    separation = 2.0 * sigma * math.sqrt(delta_t / tau_m)
    if separation > 2.0 * bin_range_sigmas * sigma:
        raise ConfigError(
            f"coupling g={g} needs a current separation of {separation:.3g} sigma, "
            f"beyond the {2 * bin_range_sigmas:g} sigma histogram support"
        )
    return DetectorParams(
        mean_L=-separation / 2,
        mean_R=separation / 2,
        sigma=sigma,
        bin_width=sigma / 10.0 if bin_width is None else bin_width,
        delta_t=delta_t,
        bin_range_sigmas=bin_range_sigmas,
    )


def bin_edges(dp: DetectorParams) -> np.ndarray:
    lo = min(dp.mean_L, dp.mean_R) - dp.bin_range_sigmas * dp.sigma
    hi = max(dp.mean_L, dp.mean_R) + dp.bin_range_sigmas * dp.sigma
    n = math.ceil((hi - lo) / dp.bin_width - 1e-9)
    if n < MIN_BINS:
        raise ConfigError(f"only {n} current bins; decrease bin_width (need at least {MIN_BINS})")
    mid = 0.5 * (lo + hi)
    return mid + dp.bin_width * (np.arange(n + 1) - n / 2)


def gaussian_bin_masses(edges, mean: float, sigma: float) -> np.ndarray:
    """Probability of each bin under ``N(mean, sigma^2)``, without renormalization."""
    z = (np.asarray(edges, dtype=float) - mean) / sigma
    lower = ndtr(z[1:]) - ndtr(z[:-1])
    # upper tail through the mirrored CDF to avoid cancellation near 1
    upper = ndtr(-z[:-1]) - ndtr(-z[1:])
    return np.where(z[:-1] >= 0.0, upper, lower)


def build_bins(dp: DetectorParams, qp: QubitParams) -> BinSet:
    """Histogram the two current distributions and build one Kraus matrix per bin.

    Each Kraus matrix is ``sqrt(m_L)|L><L| + sqrt(m_R)|R><R|``, real and
    symmetric in the energy eigenbasis. The masses are renormalized after
    truncation so the POVM is complete.
    """
    edges = bin_edges(dp)
    mass_l = gaussian_bin_masses(edges, dp.mean_L, dp.sigma)
    mass_r = gaussian_bin_masses(edges, dp.mean_R, dp.sigma)
    mass_l = mass_l / mass_l.sum()
    mass_r = mass_r / mass_r.sum()

    state_l, state_r = (s.real for s in charge_states(qp))
    proj_l = np.outer(state_l, state_l)
    proj_r = np.outer(state_r, state_r)
    kraus = np.sqrt(mass_l)[:, None, None] * proj_l + np.sqrt(mass_r)[:, None, None] * proj_r

    arrays = dict(
        edges=edges,
        bin_centers=0.5 * (edges[1:] + edges[:-1]),
        mass_L=mass_l,
        mass_R=mass_r,
        kraus=kraus,
        cum_L=_cdf(mass_l),
        cum_R=_cdf(mass_r),
        state_L=state_l,
        state_R=state_r,
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return BinSet(delta_t=dp.delta_t, **arrays)


def _cdf(mass: np.ndarray) -> np.ndarray:
    cum = np.cumsum(mass)
    cum[-1] = 1.0
    return cum


def charge_populations(bins: BinSet, rho: DensityMatrix) -> tuple[float, float]:
    """``(<L|rho|L>, <R|rho|R>)``."""
    m = rho.matrix
    l0, l1 = bins.state_L
    # same term order as the trajectory kernels, so sampling agrees bit-for-bit
    p_l = float((l0 * l0) * m[0, 0].real + (l1 * l1) * m[1, 1].real + (2.0 * l0 * l1) * m[0, 1].real)
    return p_l, 1.0 - p_l


def outcome_distribution(bins: BinSet, rho: DensityMatrix) -> np.ndarray:
    p_l, p_r = charge_populations(bins, rho)
    return p_l * bins.mass_L + p_r * bins.mass_R


def select_bin(cum_L, cum_R, p_l: float, u: float) -> int:
    """Inverse-CDF lookup: smallest ``k`` with ``CDF[k] > u``."""
    cdf = p_l * np.asarray(cum_L) + (1.0 - p_l) * np.asarray(cum_R)
    k = int(np.searchsorted(cdf, u, side="right"))
    return min(k, len(cdf) - 1)


def sample_bin(bins: BinSet, rho: DensityMatrix, rng: np.random.Generator) -> int:
    p_l, _ = charge_populations(bins, rho)
    return select_bin(bins.cum_L, bins.cum_R, p_l, rng.random())
