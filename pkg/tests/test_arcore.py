import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_mvn_logpdf, yule_walker_autocorrelations
from pcar.arcore import (
    ArLikelihood,
    ArProcess,
    NonStationaryError,
    autocorrelations,
    coef_to_pacf,
    correlation_matrix,
    distance_ar1_base0,
    distance_ar1_base1_standardised,
    distance_sequential,
    innovation_variance,
    kld_gaussian,
    log_likelihood,
    pacf_to_coef,
    simulate,
)

pacfs = st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=10)


# -- parameter maps ------------------------------------------------------------


def test_pacf_to_coef_order_one_is_identity():
    np.testing.assert_array_equal(pacf_to_coef([0.7]), [0.7])


def test_pacf_to_coef_white_noise():
    np.testing.assert_array_equal(pacf_to_coef([0, 0, 0]), [0, 0, 0])


def test_pacf_to_coef_two_step_by_hand():
    # phi_1 = psi_1 (1 - psi_2), phi_2 = psi_2
    np.testing.assert_allclose(pacf_to_coef([0.5, -0.3]), [0.5 * 1.3, -0.3], rtol=0, atol=1e-15)


@pytest.mark.parametrize("bad", [[1.0], [0.2, -1.0], [0.5, 1.5]])
def test_pacf_to_coef_rejects_boundary(bad):
    with pytest.raises(NonStationaryError):
        pacf_to_coef(bad)


def test_coef_to_pacf_examples():
    np.testing.assert_allclose(coef_to_pacf([0.65, -0.3]), [0.5, -0.3], atol=1e-14)
    np.testing.assert_array_equal(coef_to_pacf([0.0]), [0.0])
    with pytest.raises(NonStationaryError):
        coef_to_pacf([1.2])


def test_coef_to_pacf_flags_nonstationary_higher_order():
    # x_t = 0.5 x_{t-1} + 0.6 x_{t-2} has a root inside the unit circle
    with pytest.raises(NonStationaryError):
        coef_to_pacf([0.5, 0.6])


@given(st.lists(st.floats(-0.7, 0.7), min_size=1, max_size=10))
@settings(max_examples=200, deadline=None)
def test_roundtrip(psi):
    np.testing.assert_allclose(coef_to_pacf(pacf_to_coef(psi)), psi, rtol=0, atol=1e-12)


@given(pacfs)
@settings(max_examples=200, deadline=None)
def test_roundtrip_near_boundary(psi):
    # inverting near |psi| = 1 amplifies rounding in phi by about 1 / prod(1 - psi^2)
    psi = np.asarray(psi)
    err = np.max(np.abs(coef_to_pacf(pacf_to_coef(psi)) - psi))
    assert err <= 1e-13 / np.prod(1 - psi**2)


# -- autocorrelations ------------------------------------------------------------


def test_autocorrelations_ar1():
    np.testing.assert_allclose(autocorrelations([0.7], 2), [1, 0.7, 0.49], atol=1e-15)


def test_autocorrelations_white_noise():
    np.testing.assert_array_equal(autocorrelations([0, 0, 0], 5), [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(autocorrelations([], 3), [1, 0, 0, 0])


def test_autocorrelations_yule_walker_by_hand():
    rho = autocorrelations([0.5, -0.3], 2)
    phi1, phi2 = 0.65, -0.3
    assert rho[1] == pytest.approx(0.5, abs=1e-15)
    assert rho[2] == pytest.approx(phi1 * rho[1] + phi2, abs=1e-15)


@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=5), st.integers(0, 12))
@settings(max_examples=100, deadline=None)
def test_autocorrelations_match_linear_solve(psi, max_lag):
    expected = yule_walker_autocorrelations(pacf_to_coef(psi), max_lag)
    np.testing.assert_allclose(autocorrelations(psi, max_lag), expected, atol=1e-9)


def test_correlation_matrix_examples():
    np.testing.assert_array_equal(correlation_matrix([], 3), np.eye(3))
    np.testing.assert_allclose(correlation_matrix([0.7], 2), [[1, 0.7], [0.7, 1]])
    # hand-unrolled phi for psi = (0.2, 0.3): phi_1 = 0.2 * 0.7, phi_2 = 0.3
    rho = yule_walker_autocorrelations([0.14, 0.3], 3)
    expected = np.array([[rho[abs(i - j)] for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(correlation_matrix([0.2, 0.3], 4), expected, atol=1e-14)


@given(st.lists(st.floats(-0.999, 0.999), min_size=0, max_size=6), st.integers(1, 50))
@settings(max_examples=100, deadline=None)
def test_correlation_matrix_positive_definite(psi, n):
    np.linalg.cholesky(correlation_matrix(psi, n))


@given(st.lists(st.floats(-0.95, 0.95), min_size=2, max_size=6), st.integers(2, 20))
@settings(max_examples=100, deadline=None)
def test_nesting_leaves_lower_order_block_unchanged(psi, n):
    p = len(psi)
    big = correlation_matrix(psi, n)
    small = correlation_matrix(psi[:-1], n)
    b = min(p - 1, n)
    np.testing.assert_array_equal(big[:b, :b], small[:b, :b])
    b = min(p, n)
    np.testing.assert_array_equal(big[:b, :b], small[:b, :b])


# -- KLD identities on a dense grid ------------------------------------------------

_GRID = [
    (0.5,),
    (-0.8,),
    (0.3, 0.6),
    (-0.5, -0.7),
    (0.9, -0.2, 0.4),
    (0.1, 0.2, -0.3, 0.5),
    (-0.6, 0.4, -0.2, 0.8),
]


@pytest.mark.parametrize("psi", _GRID)
@pytest.mark.parametrize("n", [5, 12, 20])
def test_trace_identity(psi, n):
    s_prev = correlation_matrix(psi[:-1], n)
    s_cur = correlation_matrix(psi, n)
    assert np.trace(np.linalg.solve(s_prev, s_cur)) == pytest.approx(n, abs=1e-8)


@pytest.mark.parametrize("psi", _GRID)
@pytest.mark.parametrize("n", [5, 12, 20])
def test_determinant_identity(psi, n):
    sign, logdet = np.linalg.slogdet(correlation_matrix(psi, n))
    assert sign == 1
    expected = sum((n - i) * math.log(1 - v * v) for i, v in enumerate(psi, start=1))
    assert logdet == pytest.approx(expected, abs=1e-8)


def test_kld_examples():
    s = correlation_matrix([0.4, 0.1], 6)
    assert kld_gaussian(s, s) == pytest.approx(0.0, abs=1e-12)
    assert kld_gaussian(correlation_matrix([0.5], 2), np.eye(2)) == pytest.approx(-0.5 * math.log(0.75), abs=1e-14)
    for phi in (0.2, -0.7, 0.95):
        for n in (2, 7, 15):
            got = kld_gaussian(correlation_matrix([phi], n), np.eye(n))
            assert got == pytest.approx(-(n - 1) / 2 * math.log(1 - phi * phi), rel=1e-10)


def test_kld_nearly_equal_matrices():
    # a zero last partial autocorrelation leaves the covariance unchanged
    base = (0.9, -0.9, 0.9)
    s_prev = correlation_matrix(base, 20)
    assert math.sqrt(2 * kld_gaussian(correlation_matrix(base + (0.0,), 20), s_prev)) <= 1e-10
    small = 1e-5
    got = math.sqrt(2 * kld_gaussian(correlation_matrix(base + (small,), 20), s_prev))
    assert got == pytest.approx(distance_sequential(small, 20, 4), rel=1e-6)


def test_kld_errors():
    with pytest.raises(ValueError):
        kld_gaussian(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        kld_gaussian(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


def test_distance_ar1_base0():
    assert distance_ar1_base0(0.0, 10) == 0.0
    oracle = math.sqrt(2 * kld_gaussian(correlation_matrix([0.5], 2), np.eye(2)))
    assert distance_ar1_base0(0.5, 2) == pytest.approx(oracle, abs=1e-12)
    assert distance_ar1_base0(0.5, 2) == pytest.approx(0.5364, abs=5e-5)
    assert distance_ar1_base0(-0.5, 2) == distance_ar1_base0(0.5, 2)
    assert distance_ar1_base0(0.3, 10) < distance_ar1_base0(0.6, 10) < distance_ar1_base0(-0.9, 10)
    with pytest.raises(NonStationaryError):
        distance_ar1_base0(1.0, 3)


def test_distance_sequential():
    assert distance_sequential(0.0, 10, 3) == 0.0
    for v in (0.2, -0.9):
        assert distance_sequential(v, 8, 1) == distance_ar1_base0(v, 8)
    for psi1 in (-0.8, 0.0, 0.6):
        oracle = math.sqrt(
            2 * kld_gaussian(correlation_matrix([psi1, 0.3], 10), correlation_matrix([psi1], 10))
        )
        assert distance_sequential(0.3, 10, 2) == pytest.approx(oracle, abs=1e-10)
    with pytest.raises(ValueError):
        distance_sequential(0.3, 3, 3)


@pytest.mark.parametrize("psi", _GRID)
@pytest.mark.parametrize("n", [6, 13, 20])
def test_distance_closed_form_matches_kld(psi, n):
    p = len(psi)
    oracle = math.sqrt(2 * kld_gaussian(correlation_matrix(psi, n), correlation_matrix(psi[:-1], n)))
    assert distance_sequential(psi[-1], n, p) == pytest.approx(oracle, abs=1e-8)


def test_distance_base1_standardised():
    assert distance_ar1_base1_standardised(1 - 1e-12) == pytest.approx(0.0, abs=1e-5)
    assert distance_ar1_base1_standardised(-1 + 1e-12) == pytest.approx(math.sqrt(2), abs=1e-9)
    assert distance_ar1_base1_standardised(0.5) == math.sqrt(0.5)
    with pytest.raises(NonStationaryError):
        distance_ar1_base1_standardised(-1.0)


def test_base1_distance_is_limit_of_kld():
    # scaled by sqrt((1 - phi0^2) / (2 (n - 1))), the exact distance tends to sqrt(1 - phi)
    n, phi = 6, 0.3
    for phi0, tol in ((0.999, 2e-2), (0.99999, 2e-3)):
        d = math.sqrt(2 * kld_gaussian(correlation_matrix([phi], n), correlation_matrix([phi0], n)))
        scaled = d * math.sqrt((1 - phi0**2) / (2 * (n - 1)))
        assert scaled == pytest.approx(distance_ar1_base1_standardised(phi), rel=tol)


# -- process and simulation ---------------------------------------------------------


def test_innovation_variance():
    assert innovation_variance(ArProcess((), 1.0)) == 1.0
    assert innovation_variance(ArProcess((0.7,), 1.0)) == pytest.approx(0.51)
    assert innovation_variance(ArProcess((0.5, -0.3), 2.0)) == pytest.approx(0.34125, abs=1e-15)


def test_process_validation():
    with pytest.raises(ValueError):
        ArProcess((0.2,), 0.0)
    with pytest.raises(NonStationaryError):
        ArProcess((0.2, 1.0), 1.0)


def test_simulate_white_noise_variance():
    x = simulate(ArProcess((), 1.0), 100_000, seed=1)
    assert np.var(x) == pytest.approx(1.0, rel=0.02)


def test_simulate_ar1_autocorrelation():
    x = simulate(ArProcess((0.7,), 4.0), 100_000, seed=2)
    r1 = np.dot(x[:-1], x[1:]) / np.dot(x, x)
    assert r1 == pytest.approx(autocorrelations([0.7], 1)[1], abs=0.01)
    assert np.var(x) == pytest.approx(0.25, rel=0.05)


def test_simulate_ar3_sample_acf():
    psi = (0.5, -0.3, -0.1)
    x = simulate(ArProcess(psi, 1.0), 200_000, seed=3)
    acf = [np.dot(x[: x.size - k], x[k:]) / np.dot(x, x) for k in range(6)]
    np.testing.assert_allclose(acf, autocorrelations(psi, 5), atol=0.01)


def test_simulate_initial_values_are_stationary():
    # across many short series the first p values have covariance R_p / tau
    psi = (0.6, -0.4)
    xs = np.array([simulate(ArProcess(psi, 2.0), 3, seed=s) for s in range(20_000)])
    np.testing.assert_allclose(np.cov(xs.T), correlation_matrix(psi, 3) / 2.0, atol=0.02)


def test_simulate_deterministic():
    a = simulate(ArProcess((0.3, 0.2), 1.0), 500, seed=42)
    b = simulate(ArProcess((0.3, 0.2), 1.0), 500, seed=42)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate(ArProcess((0.3, 0.2), 1.0), 500, seed=43))


# -- likelihood ------------------------------------------------------------------


def test_log_likelihood_white_noise():
    x = np.random.default_rng(0).standard_normal(20)
    expected = np.sum(-0.5 * math.log(2 * math.pi) - 0.5 * x**2)
    assert log_likelihood(x, ArProcess((), 1.0)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "psi, tau, n",
    [((0.7,), 1.0, 8), ((0.5, -0.3, -0.1), 2.0, 12), ((0.9, 0.5), 0.3, 2), ((-0.4, 0.2, 0.6, -0.5), 5.0, 30)],
)
def test_log_likelihood_matches_dense(psi, tau, n):
    x = np.random.default_rng(n).standard_normal(n)
    dense = dense_mvn_logpdf(x, correlation_matrix(psi, n) / tau)
    assert log_likelihood(x, ArProcess(psi, tau)) == pytest.approx(dense, abs=1e-10)


@given(
    st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=4),
    st.floats(0.1, 10.0),
    st.integers(5, 40),
    st.integers(0, 2**31),
)
@settings(max_examples=60, deadline=None)
def test_cached_likelihood_matches_recursion(psi, tau, n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    if n <= len(psi):
        return
    like = ArLikelihood(x, len(psi))
    assert like(psi, tau) == pytest.approx(log_likelihood(x, ArProcess(tuple(psi), tau)), rel=1e-11, abs=1e-9)
