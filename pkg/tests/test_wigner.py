import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcq.core import build_structure, propagators, robertson_check
from hybridcq.wigner import (
    FIGURE_CONFIGS,
    PAIR_VARS,
    DispersionSeries,
    OscPairConfig,
    covariance_series,
    dispersion_series,
    generator,
    initial_state,
    monte_carlo_covariance,
    normal_mode_propagators,
    normal_modes,
    sample_transported,
    total_uncertainty_min,
)


def test_normal_modes_uncoupled():
    for W, w in [(3, 2), (2, 3)]:
        nm = normal_modes(OscPairConfig(W, w, 0.0))
        np.testing.assert_array_equal(nm.freqs_squared, [W**2, w**2])
        np.testing.assert_array_equal(nm.mode_matrix, np.eye(2))


def test_normal_modes_char_poly():
    # lam^2 - 13 lam + 35 = 0
    nm = normal_modes(OscPairConfig(3, 2, 1))
    roots = np.sort(np.roots([1, -13, 35]))
    np.testing.assert_allclose(np.sort(nm.freqs_squared), roots, rtol=1e-14)
    np.testing.assert_allclose(np.sort(nm.freqs_squared), [6.5 - np.sqrt(7.25), 6.5 + np.sqrt(7.25)], rtol=1e-14)
    R = nm.mode_matrix
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-15)
    assert nm.stable


def test_normal_modes_equal_frequencies():
    nm = normal_modes(OscPairConfig(1.73, 1.73, 1.0))
    np.testing.assert_allclose(nm.freqs_squared, [1.73**2 + 1, 1.73**2 - 1], rtol=1e-14)
    c = np.sqrt(0.5)
    np.testing.assert_allclose(nm.mode_matrix, [[c, -c], [c, c]], atol=1e-15)


def test_unstable_flagged():
    assert not normal_modes(OscPairConfig(0.5, 0.5, 1.0)).stable
    assert not OscPairConfig(0.5, 0.5, 1.0).stable


@given(st.floats(0.2, 4), st.floats(0.2, 4), st.floats(-3, 3), st.floats(0, 30))
@settings(max_examples=60, deadline=None)
def test_mode_propagator_matches_exponential(W, w, g, t):
    cfg = OscPairConfig(W, w, g)
    Um = normal_mode_propagators(cfg, [t])[0]
    Ue = propagators(generator(cfg), [t])[0]
    scale = max(1.0, np.max(np.abs(Ue)))
    assert np.max(np.abs(Um - Ue)) <= 1e-9 * scale


def test_mode_propagator_zero_frequency():
    # Omega^2 omega^2 = gamma^2 puts one mode at zero frequency (free motion)
    cfg = OscPairConfig(1.0, 1.0, 1.0)
    t = np.array([0.5, 2.0])
    np.testing.assert_allclose(normal_mode_propagators(cfg, t), propagators(generator(cfg), t), atol=1e-10)


def test_initial_state_examples():
    s = 1 / np.sqrt(2)
    st0 = initial_state(OscPairConfig(sigma_x=s, sigma_k=s))
    np.testing.assert_allclose(st0.cov, np.diag([0, 0, 0.5, 0.5]), atol=1e-16)
    assert not st0.mean.any()
    edge = initial_state(OscPairConfig(sigma_x=1.0, sigma_k=0.5))
    res = robertson_check(edge, build_structure(PAIR_VARS, [("q", "p"), ("x", "k")]), subset=[2, 3])
    assert res.feasible and abs(res.min_eigenvalue) <= 1e-15
    with pytest.raises(ValueError):
        initial_state(OscPairConfig(sigma_x=0.0, sigma_k=1.0))


def test_default_widths_match_oscillator():
    cfg = OscPairConfig(omega=2.0, hbar=0.5)
    assert cfg.sigma_x**2 == pytest.approx(0.5 / 4)
    assert cfg.sigma_k**2 == pytest.approx(0.5)
    assert cfg.sigma_x * cfg.sigma_k == pytest.approx(cfg.hbar / 2)


def test_series_starts_at_initial_data():
    s = dispersion_series(OscPairConfig(3, 2, 1), 1.0, 0.1)
    assert s.dqdp[0] == 0
    assert s.dxdk[0] == pytest.approx(0.5, abs=1e-15)
    assert set(s.columns()) == {"t", "dq", "dp", "dx", "dk", "dqdp", "dxdk", "total"}


def test_uncoupled_coherent_state_is_stationary():
    s = dispersion_series(OscPairConfig(3, 2, 0.0), 40.0, 0.05)
    assert not s.dqdp.any()
    np.testing.assert_allclose(s.dxdk, 0.5, atol=1e-13)
    assert total_uncertainty_min(s) == pytest.approx(0.5, abs=1e-13)


@pytest.mark.parametrize("cfg", FIGURE_CONFIGS)
def test_total_uncertainty_bound(cfg):
    c = OscPairConfig(*cfg)
    assert c.stable
    s = dispersion_series(c, 40.0, 0.01)
    assert total_uncertainty_min(s) >= c.hbar / 2 - 1e-9


@given(st.floats(0.3, 4), st.floats(0.3, 4), st.floats(-1, 1), st.floats(0.2, 3))
@settings(max_examples=30, deadline=None)
def test_total_uncertainty_bound_random(W, w, g, hbar):
    c = OscPairConfig(W, w, g, hbar)
    if not c.stable:
        return
    s = dispersion_series(c, 20.0, 0.05)
    assert total_uncertainty_min(s) >= hbar / 2 - 1e-9 * max(1.0, float(s.total.max()))


def test_single_sample_series():
    s = DispersionSeries(np.array([0.0]), np.array([1.0]), np.array([2.0]), np.array([0.5]), np.array([0.5]))
    assert total_uncertainty_min(s) == 2.25
    with pytest.raises(ValueError):
        total_uncertainty_min(DispersionSeries(*(np.array([]),) * 5))


def test_extreme_transfer():
    s = dispersion_series(OscPairConfig(1.0, 1.01, 1.0), 200.0, 0.01)
    assert s.dxdk.min() <= 0.05
    assert s.dqdp.max() >= 0.45
    # the two products bottom out at different times
    assert s.times[s.dxdk.argmin()] != s.times[s.dqdp.argmin()]


def test_weak_coupling_decouples():
    s = dispersion_series(OscPairConfig(3.0, 2.0, 0.01), 40.0, 0.01)
    # frozen from the normal-mode route: amplitude 8.195e-6
    assert s.dqdp.max() - s.dqdp.min() <= 1e-5
    assert np.ptp(s.dxdk) <= 1e-5


def test_commensurate_modes_return():
    # Omega = omega = sqrt(2.5), gamma = 1.5 -> mode frequencies 2 and 1, period 2 pi
    cfg = OscPairConfig(np.sqrt(2.5), np.sqrt(2.5), 1.5)
    np.testing.assert_allclose(np.sort(normal_modes(cfg).freqs_squared), [1.0, 4.0], rtol=1e-14)
    s = dispersion_series(cfg, 2 * np.pi, 2 * np.pi / 500)
    assert abs(s.dqdp[-1] - s.dqdp[0]) <= 1e-6
    assert abs(s.dxdk[-1] - s.dxdk[0]) <= 1e-6
    assert s.dqdp.max() > 0.01


@pytest.mark.parametrize("cfg", [(3.0, 2.0, 1.0), (2.0, 0.51, 1.0), (1.0, 1.01, 1.0)])
@pytest.mark.parametrize("t", [0.0, 5.0, 11.0])
def test_monte_carlo_matches_analytic(cfg, t):
    c = OscPairConfig(*cfg)
    est, se = monte_carlo_covariance(c, t, 100_000, seed=99)
    exact = covariance_series(c, [t])[0]
    diff = np.abs(est.cov - exact)
    ok = (diff <= 5 * se) | ((se == 0) & (diff <= 1e-12))
    assert ok.all(), diff / np.maximum(se, 1e-300)


def test_monte_carlo_classical_sector_exact_without_coupling():
    c = OscPairConfig(3.0, 2.0, 0.0, q0=1.2, p0=-0.4)
    est, _ = monte_carlo_covariance(c, 3.0, 5000, seed=1)
    assert not est.cov[:2, :].any()
    assert not est.cov[:, :2].any()


def test_monte_carlo_shard_independent():
    c = OscPairConfig(3.0, 2.0, 1.0)
    one = sample_transported(c, 4.0, 4001, seed=5, workers=1)
    for w in (2, 3, 8):
        np.testing.assert_array_equal(sample_transported(c, 4.0, 4001, seed=5, workers=w), one)
    assert not np.array_equal(sample_transported(c, 4.0, 4001, seed=6), one)


def test_monte_carlo_needs_two_samples():
    with pytest.raises(ValueError):
        monte_carlo_covariance(OscPairConfig(), 1.0, 1, seed=0)
