"""Transfer-function coefficients: oracles, circle checks, envelopes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oparma import (
    QuadratureError,
    SingularOperatorError,
    SpecificationError,
    arma_model,
    dense_operator,
)
from oparma.laurent import (
    evaluate_series,
    laurent_coeffs,
    transfer_function,
    unit_circle_check,
)


def scalar_model(ar, ma):
    return arma_model(
        [dense_operator([[a]]) for a in ar],
        [dense_operator([[b]]) for b in ma],
    )


def test_causal_ar1_coefficients_are_geometric():
    lc = laurent_coeffs(scalar_model([0.5], [1.0]))
    assert lc.k_min == 0
    for k in range(0, 10):
        assert lc.coefficient(k)[0, 0] == pytest.approx(0.5**k, rel=1e-10)
    # nothing on the anticausal side
    assert lc.reconstruction_residual <= 1e-6


def test_anticausal_ar1_coefficients():
    # 1/(1 - 2z) = -sum_{k>=1} 2^{-k} z^{-k} on an annulus around |z|=1
    lc = laurent_coeffs(scalar_model([2.0], [1.0]))
    assert lc.k_max == 0
    assert abs(lc.coefficient(0)[0, 0]) < 1e-12
    for k in range(1, 10):
        assert lc.coefficient(-k)[0, 0] == pytest.approx(-(2.0**-k), rel=1e-10)


def test_arma11_oracle():
    # (1 + 0.3 z)/(1 - 0.5 z): psi_0 = 1, psi_k = 0.8 * 0.5^(k-1)
    lc = laurent_coeffs(scalar_model([0.5], [1.0, 0.3]))
    assert lc.coefficient(0)[0, 0] == pytest.approx(1.0, rel=1e-12)
    for k in range(1, 8):
        assert lc.coefficient(k)[0, 0] == pytest.approx(0.8 * 0.5 ** (k - 1), rel=1e-10)


def test_ar2_partial_fraction_oracle():
    # 1/(1 - 0.5 z - 0.06 z^2): psi_k = (0.6^(k+1) - (-0.1)^(k+1)) / 0.7
    lc = laurent_coeffs(scalar_model([0.5, 0.06], [1.0]))
    for k in range(0, 12):
        expect = (0.6 ** (k + 1) - (-0.1) ** (k + 1)) / 0.7
        assert lc.coefficient(k)[0, 0] == pytest.approx(expect, rel=1e-9)


def test_two_sided_mixed_spectrum():
    model = arma_model(
        [dense_operator(np.diag([0.5, 2.0]))],
        [dense_operator(np.eye(2))],
    )
    lc = laurent_coeffs(model)
    assert lc.k_min < 0 < lc.k_max
    for k in range(1, 6):
        np.testing.assert_allclose(
            lc.coefficient(k), np.diag([0.5**k, 0.0]), atol=1e-11
        )
        np.testing.assert_allclose(
            lc.coefficient(-k), np.diag([0.0, -(2.0**-k)]), atol=1e-11
        )


def test_matrix_causal_convolution_oracle():
    # p = 1, q = 2: psi_k = sum_{j<=min(k,q)} A^(k-j) B_j
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2, 2))
    a *= 0.6 / np.abs(np.linalg.eigvals(a)).max()
    bs = [rng.normal(size=(2, 2)) for _ in range(3)]
    model = arma_model([dense_operator(a)], [dense_operator(b) for b in bs])
    lc = laurent_coeffs(model)
    for k in range(0, 11):
        expect = sum(
            np.linalg.matrix_power(a, k - j) @ bs[j] for j in range(min(k, 2) + 1)
        )
        np.testing.assert_allclose(lc.coefficient(k), expect, atol=1e-9)


def test_transfer_function_point_values():
    model = scalar_model([0.5], [1.0])
    assert transfer_function(model, 0.5)[0, 0] == pytest.approx(1 / 0.75)
    with pytest.raises(SingularOperatorError):
        transfer_function(model, 2.0)


def test_circle_check_pass_and_fail():
    good = unit_circle_check(scalar_model([0.5], [1.0]))
    assert good.passed
    assert good.min_singular_value == pytest.approx(0.5, rel=1e-6)
    assert good.leading_ar_invertible

    bad = unit_circle_check(scalar_model([1.0], [1.0]))
    assert not bad.passed
    assert bad.min_singular_value < 1e-6
    with pytest.raises(SingularOperatorError):
        laurent_coeffs(scalar_model([1.0], [1.0]))


def test_circle_check_reports_leading_ar_singularity():
    model = arma_model(
        [dense_operator(np.diag([0.5, 2.0])), dense_operator(np.zeros((2, 2)))],
        [dense_operator(np.eye(2))],
    )
    cc = unit_circle_check(model)
    assert not cc.leading_ar_invertible
    assert cc.leading_ar_condition == np.inf


def test_decay_envelope_majorizes_and_tracks_rate():
    lc = laurent_coeffs(scalar_model([0.5], [1.0]))
    ks = lc.ks
    env = lc.decay_a * lc.decay_b ** np.abs(ks)
    assert np.all(lc.norms <= env * (1 + 1e-9))
    assert lc.decay_b == pytest.approx(0.5, abs=0.05)
    assert lc.decay_b < 1.0


def test_pure_ma_degenerate_range():
    model = arma_model(
        [dense_operator(np.zeros((2, 2)))],
        [dense_operator(np.eye(2)), dense_operator(0.5 * np.eye(2))],
    )
    lc = laurent_coeffs(model)
    assert (lc.k_min, lc.k_max) == (0, 1)
    np.testing.assert_allclose(lc.coefficient(0), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(lc.coefficient(1), 0.5 * np.eye(2), atol=1e-12)
    env = lc.decay_a * lc.decay_b ** np.abs(lc.ks)
    assert np.all(lc.norms <= env * (1 + 1e-9))


def test_explicit_range_and_evaluate():
    model = scalar_model([0.5], [1.0])
    lc = laurent_coeffs(model, k_range=(-5, 12))
    assert (lc.k_min, lc.k_max) == (-5, 12)
    for k in range(-5, 0):
        assert abs(lc.coefficient(k)[0, 0]) < 1e-12
    z = 0.9 * np.exp(0.7j)
    np.testing.assert_allclose(
        evaluate_series(lc, z), transfer_function(model, z), atol=1e-3
    )
    with pytest.raises(SpecificationError):
        lc.coefficient(13)
    with pytest.raises(SpecificationError):
        laurent_coeffs(model, k_range=(4, -4))


def test_slow_decay_grows_the_grid():
    lc = laurent_coeffs(scalar_model([0.97], [1.0]))
    assert lc.n_quad >= 2048
    assert lc.k_max >= 850
    assert lc.coefficient(500)[0, 0] == pytest.approx(0.97**500, rel=1e-8)


def test_reconstruction_residual_certifies_expansion():
    rng = np.random.default_rng(9)
    s = rng.normal(size=(3, 3))
    lam = np.diag([0.4, 0.8, 1.7])
    a = s @ lam @ np.linalg.inv(s)
    model = arma_model(
        [dense_operator(a)],
        [dense_operator(np.eye(3)), dense_operator(rng.normal(size=(3, 3)) * 0.3)],
    )
    lc = laurent_coeffs(model)
    assert lc.reconstruction_residual <= 1e-6
    assert lc.k_min < 0 < lc.k_max


@given(st.integers(min_value=0, max_value=5000))
@settings(max_examples=20, deadline=None)
def test_random_stable_models_reconstruct(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    a *= rng.uniform(0.2, 0.8) / np.abs(np.linalg.eigvals(a)).max()
    b0 = rng.normal(size=(3, 3))
    model = arma_model([dense_operator(a)], [dense_operator(b0)])
    lc = laurent_coeffs(model)
    assert lc.reconstruction_residual <= 1e-6
    env = lc.decay_a * lc.decay_b ** np.abs(lc.ks)
    assert np.all(lc.norms <= env * (1 + 1e-9))
    np.testing.assert_allclose(lc.coefficient(0), b0, atol=1e-9)
