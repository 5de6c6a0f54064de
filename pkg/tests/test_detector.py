import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import chisquare

from weakprobe.detector import (DetectorParams, bin_edges, build_bins, calibrate, gaussian_bin_masses,
                                outcome_distribution, sample_bin)
from weakprobe.errors import ConfigError
from weakprobe.qmat import KET_0, DensityMatrix, QubitParams, charge_states

QP = QubitParams(1.0, math.pi / 4)


def params(mean_l=-0.1, mean_r=0.1, sigma=1.0, bin_width=0.1, delta_t=0.01):
    return DetectorParams(mean_l, mean_r, sigma, bin_width, delta_t)


def test_identical_means_give_trivial_kraus():
    bins = build_bins(params(0.3, 0.3), QP)
    np.testing.assert_array_equal(bins.mass_L, bins.mass_R)
    for k in bins.kraus:
        np.testing.assert_allclose(k, k[0, 0] * np.eye(2), atol=1e-15)


def test_masses_match_quadrature_before_renormalization():
    dp = params(-0.1, 0.1)
    edges = bin_edges(dp)
    pdf = lambda x, mu: math.exp(-0.5 * ((x - mu) / dp.sigma) ** 2) / (dp.sigma * math.sqrt(2 * math.pi))
    for mean in (dp.mean_L, dp.mean_R):
        raw = gaussian_bin_masses(edges, mean, dp.sigma)
        ref = np.array([quad(pdf, a, b, args=(mean,), epsabs=1e-15, epsrel=1e-13)[0]
                        for a, b in zip(edges[:-1], edges[1:])])
        np.testing.assert_allclose(raw, ref, rtol=0, atol=1e-12)


def test_bins_tile_support():
    dp = params(-0.1, 0.1)
    bins = build_bins(dp, QP)
    assert bins.edges[0] <= -0.1 - 6 + 1e-12 and bins.edges[-1] >= 0.1 + 6 - 1e-12
    np.testing.assert_allclose(np.diff(bins.edges), 0.1, rtol=1e-9)
    assert bins.n_bins == 122


def test_too_few_bins():
    with pytest.raises(ConfigError):
        build_bins(params(bin_width=5.0), QP)


@settings(max_examples=50, deadline=None)
@given(
    sep=st.floats(0.0, 3.0),
    sigma=st.floats(0.2, 5.0),
    width_frac=st.floats(0.02, 0.5),
    beta=st.floats(0.0, math.pi / 2),
)
def test_povm_completeness_and_kraus_spectrum(sep, sigma, width_frac, beta):
    dp = DetectorParams(-sep / 2, sep / 2, sigma, width_frac * sigma, 0.01)
    bins = build_bins(dp, QubitParams(1.0, beta))
    assert abs(bins.mass_L.sum() - 1) < 1e-14 and abs(bins.mass_R.sum() - 1) < 1e-14
    assert (bins.mass_L >= 0).all() and (bins.mass_R >= 0).all()
    np.testing.assert_allclose(bins.povm_sum(), np.eye(2), atol=1e-12)
    for k in bins.kraus[:: max(1, bins.n_bins // 10)]:
        np.testing.assert_allclose(k, k.conj().T, atol=1e-15)
        ev = np.linalg.eigvalsh(k)
        assert ev[0] >= -1e-15 and ev[1] <= 1 + 1e-15


def test_calibrate_examples():
    dp = DetectorParams(-1.0, 1.0, 10.0, 1.0, 0.01)
    assert dp.tau_m == pytest.approx(1.0, rel=1e-14)
    dp = calibrate(5, 1.0, 0.01, 1.0)
    assert dp.tau_m == pytest.approx(10 * math.pi, rel=1e-12)
    assert dp.separation == pytest.approx(0.035682, abs=5e-7)
    # invert tau_m = 4 sigma^2 dt / dI^2 by hand
    assert 4 * dp.sigma**2 * dp.delta_t / dp.separation**2 == pytest.approx(10 * math.pi, rel=1e-12)
    assert dp.mean_L == -dp.mean_R


@given(st.floats(1e-3, 100), st.floats(0.1, 10), st.floats(1e-4, 0.05), st.floats(0.1, 10))
def test_calibrate_roundtrip(g, E, dt, sigma):
    try:
        dp = calibrate(g, E, dt, sigma)
    except ConfigError:
        return
    assert dp.coupling(E).g == pytest.approx(g, rel=1e-12)


def test_calibrate_rejects():
    with pytest.raises(ConfigError):
        calibrate(0, 1, 0.01, 1)
    with pytest.raises(ConfigError):
        calibrate(1e-6, 1, 0.01, 1)  # separation beyond the histogram support


def test_outcome_distribution_examples():
    bins = build_bins(params(-0.5, 0.5), QP)
    state_l, state_r = charge_states(QP)
    np.testing.assert_array_equal(outcome_distribution(bins, DensityMatrix.from_state(state_l)), bins.mass_L)
    p = outcome_distribution(bins, DensityMatrix.maximally_mixed())
    np.testing.assert_allclose(p, 0.5 * (bins.mass_L + bins.mass_R), atol=1e-17)
    rho0 = DensityMatrix.from_state(KET_0)
    p = outcome_distribution(bins, rho0)
    np.testing.assert_allclose(p, math.cos(math.pi / 8) ** 2 * bins.mass_R + math.sin(math.pi / 8) ** 2 * bins.mass_L,
                               atol=1e-16)
    direct = np.array([np.trace(k.conj().T @ k @ rho0.matrix).real for k in bins.kraus])
    np.testing.assert_allclose(p, direct, atol=1e-15)
    assert abs(p.sum() - 1) < 1e-12


def test_outcome_distribution_affine(rng):
    bins = build_bins(params(-0.5, 0.5), QP)
    for _ in range(20):
        a, b = (DensityMatrix.from_state(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(2))
        alpha = rng.uniform()
        mix = DensityMatrix(alpha * a.matrix + (1 - alpha) * b.matrix)
        np.testing.assert_allclose(outcome_distribution(bins, mix),
                                   alpha * outcome_distribution(bins, a) + (1 - alpha) * outcome_distribution(bins, b),
                                   atol=1e-12)


def test_sample_bin_statistics():
    bins = build_bins(params(-0.5, 0.5, bin_width=0.25), QP)
    state_l, _ = charge_states(QP)
    rho = DensityMatrix.from_state(state_l)
    rng = np.random.default_rng(7)
    n = 10**6
    # vectorized draw with the same inverse-CDF rule as sample_bin
    counts = np.bincount(np.minimum(np.searchsorted(bins.cum_L, rng.random(n), side="right"), bins.n_bins - 1),
                         minlength=bins.n_bins)
    expected = n * bins.mass_L
    keep = expected > 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 0.001

    rng = np.random.default_rng(7)
    draws = [sample_bin(bins, rho, rng) for _ in range(2000)]
    rng = np.random.default_rng(7)
    ref = np.minimum(np.searchsorted(bins.cum_L, rng.random(2000), side="right"), bins.n_bins - 1)
    np.testing.assert_array_equal(draws, ref)


def test_sample_bin_independent_of_state_when_means_equal():
    bins = build_bins(params(0.0, 0.0), QP)
    a = [sample_bin(bins, DensityMatrix.from_state(KET_0), np.random.default_rng(3)) for _ in range(1)]
    seq = lambda rho: [sample_bin(bins, rho, g) for g in [np.random.default_rng(3)] for _ in range(500)]
    assert seq(DensityMatrix.from_state(KET_0)) == seq(DensityMatrix.maximally_mixed())


def test_sample_bin_deterministic():
    bins = build_bins(params(), QP)
    rho = DensityMatrix.maximally_mixed()
    seq = lambda: [sample_bin(bins, rho, g) for g in [np.random.default_rng(11)] for _ in range(300)]
    assert seq() == seq()
