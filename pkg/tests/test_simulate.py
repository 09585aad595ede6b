import dataclasses

import numpy as np
import pytest

from oparma.engine.noise import NoisePath, NoiseSpec, sample_path
from oparma.engine.simulate import (
    ProbeResult,
    build_split_kernel,
    plim_probe,
    recursion_residual,
    simulate_ma,
    simulate_theorem1,
    stationarity_ks,
)
from oparma.errors import SpecificationError, WindowError
from oparma.laurent import laurent_coeffs
from oparma.operators import OperatorSpec, arma_model, build_operator, dense_operator
from oparma.spectral import hyperbolic_split


def scalar_model(a, bs=(1.0,)):
    return arma_model(
        [dense_operator(np.array([[a]]))],
        [dense_operator(np.array([[b]])) for b in bs],
    )


def unit_point_mass(dim, value, seed=0):
    return NoiseSpec(
        kind="point_mass", dim=dim, params={"value": list(value)}, seed=seed
    )


class TestPointMassOracles:
    def test_contracting_scalar_sums_to_two(self):
        model = scalar_model(0.5)
        res = simulate_theorem1(model, unit_point_mass(1, [1.0]), t_range=(0, 20))
        assert res.values.shape == (21, 1)
        assert np.allclose(res.values, 2.0, atol=1e-9)
        assert res.method == "theorem1_split"
        assert res.max_residual < 1e-10

    def test_expanding_scalar_sums_to_minus_one(self):
        model = scalar_model(2.0)
        res = simulate_theorem1(model, unit_point_mass(1, [1.0]), t_range=(0, 20))
        assert np.allclose(res.values, -1.0, atol=1e-9)
        assert res.max_residual < 1e-10

    def test_mixed_diagonal_both_branches(self):
        a = dense_operator(np.diag([0.5, 2.0]))
        model = arma_model([a], [build_operator(OperatorSpec(kind="identity", dim=2))])
        res = simulate_theorem1(model, unit_point_mass(2, [1.0, 1.0]), t_range=(0, 9))
        expected = np.array([2.0, -1.0])
        assert np.allclose(res.values, expected[None, :], atol=1e-9)

    def test_triangular_contracting_matches_resolvent(self):
        mat = np.array([[0.3, 0.2], [0.0, 0.4]])
        model = arma_model(
            [dense_operator(mat)], [build_operator(OperatorSpec(kind="identity", dim=2))]
        )
        v = np.array([1.0, -1.0])
        res = simulate_theorem1(model, unit_point_mass(2, v), t_range=(0, 5))
        expected = np.linalg.solve(np.eye(2) - mat, v)
        assert np.allclose(res.values, expected[None, :], atol=1e-9)

    def test_all_expanding_matches_negative_inverse(self):
        mat = np.diag([2.0, 4.0])
        model = arma_model(
            [dense_operator(mat)], [build_operator(OperatorSpec(kind="identity", dim=2))]
        )
        res = simulate_theorem1(model, unit_point_mass(2, [1.0, 1.0]), t_range=(0, 5))
        expected = -np.linalg.solve(mat - np.eye(2), np.array([1.0, 1.0]))
        assert np.allclose(res.values, expected[None, :], atol=1e-9)

    def test_zero_noise_gives_exactly_zero_path(self):
        model = scalar_model(0.5, bs=(1.0, 0.7))
        res = simulate_theorem1(model, unit_point_mass(1, [0.0]), t_range=(0, 30))
        assert np.all(res.values == 0.0)


class TestPureMovingAverage:
    def test_zero_ar_reproduces_ma_sum_exactly(self):
        d = 3
        model = arma_model(
            [build_operator(OperatorSpec(kind="zero", dim=d))],
            [build_operator(OperatorSpec(kind="identity", dim=d)), build_operator(OperatorSpec(kind="identity", dim=d))],
        )
        spec = NoiseSpec(kind="gaussian", dim=d, params={"sigma": 1.0}, seed=11)
        res = simulate_theorem1(model, spec, t_range=(0, 99))
        z = res.noise
        for t in range(0, 100):
            expected = z.at(t) + z.at(t - 1)
            assert np.allclose(res.values[t], expected, atol=1e-13)
        assert res.max_residual < 1e-14

    def test_short_window_residual_is_nan(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=3)
        res = simulate_theorem1(model, spec, t_range=(5, 5))
        assert len(res) == 1
        assert np.isnan(res.max_residual)


class TestTruncationControl:
    def test_tail_tol_sets_depth_and_residual(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=5)
        res = simulate_theorem1(model, spec, t_range=(0, 199), tail_tol=1e-18)
        assert res.truncation_K == 60
        assert res.max_residual <= 1e-12

    def test_default_depth_respects_floor(self):
        model = arma_model(
            [build_operator(OperatorSpec(kind="zero", dim=2))],
            [build_operator(OperatorSpec(kind="identity", dim=2))],
        )
        kernel, _ = build_split_kernel(model)
        assert -kernel.l_min >= 2 + 0 + 1

    def test_deeper_truncation_shrinks_residual(self):
        model = scalar_model(0.9)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=7)
        loose = simulate_theorem1(model, spec, t_range=(0, 99), tail_tol=1e-6)
        tight = simulate_theorem1(model, spec, t_range=(0, 99), tail_tol=1e-14)
        assert tight.max_residual < loose.max_residual
        assert tight.truncation_K > loose.truncation_K


class TestRecursionResidual:
    def test_corruption_is_detected(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=2)
        res = simulate_theorem1(model, spec, t_range=(0, 99))
        assert res.max_residual < 1e-10
        bad = res.values.copy()
        bad[50, 0] += 1.0
        holder = dataclasses.replace(res, values=bad)
        corrupted = recursion_residual(model, holder, res.noise)
        floor = 0.5 / (1.0 + np.linalg.norm(bad, axis=1).max())
        assert corrupted >= floor

    def test_empty_overlap_raises(self):
        model = scalar_model(0.5)
        z = sample_path(
            NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0), 5
        )
        holder = type("Y", (), {"t_start": 100, "values": np.zeros((3, 1))})()
        with pytest.raises(WindowError):
            recursion_residual(model, holder, z)


def random_hyperbolic_model(rng, dim, q, margin=0.15):
    while True:
        moduli = np.concatenate(
            [
                rng.uniform(0.2, 1.0 - margin, size=dim // 2 + 1),
                rng.uniform(1.0 + margin, 2.5, size=dim // 2),
            ]
        )[:dim]
        phases = rng.uniform(0, 2 * np.pi, size=dim)
        eigs = moduli * np.exp(1j * phases)
        s = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        if np.linalg.cond(s) < 20:
            break
    a = s @ np.diag(eigs) @ np.linalg.inv(s)
    mas = [
        dense_operator(rng.normal(size=(dim, dim)) / np.sqrt(dim))
        for _ in range(q + 1)
    ]
    return arma_model([dense_operator(a)], mas)


class TestCrossMethodAgreement:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_split_and_ma_routes_agree(self, seed):
        rng = np.random.default_rng(400 + seed)
        dim = int(rng.integers(1, 5))
        q = int(rng.integers(0, 3))
        model = random_hyperbolic_model(rng, dim, q)
        coeffs = laurent_coeffs(model)
        kernel, _ = build_split_kernel(model)
        reach = max(-kernel.l_min, abs(coeffs.k_min), abs(coeffs.k_max))
        spec = NoiseSpec(kind="gaussian", dim=dim, params={"sigma": 1.0}, seed=seed)
        t0, t1 = 0, 50
        path = sample_path(spec, (t1 + reach) - (t0 - reach) + 1, t_start=t0 - reach)
        res_split = simulate_theorem1(model, path, t_range=(t0, t1))
        res_ma = simulate_ma(model, coeffs, path, t_range=(t0, t1))
        gap = np.linalg.norm(res_split.values - res_ma.values, axis=1).max()
        assert gap <= 1e-6
        assert res_split.max_residual <= 1e-8
        assert res_ma.max_residual <= 1e-6

    def test_order_two_model_agrees_through_lift(self):
        a1 = dense_operator(np.array([[3.5]]))
        a2 = dense_operator(np.array([[-1.5]]))
        b0 = dense_operator(np.array([[1.0]]))
        b1 = dense_operator(np.array([[0.4]]))
        model = arma_model([a1, a2], [b0, b1])
        coeffs = laurent_coeffs(model)
        kernel, _ = build_split_kernel(model)
        reach = max(-kernel.l_min, abs(coeffs.k_min), abs(coeffs.k_max))
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=9)
        path = sample_path(spec, 60 + 2 * reach, t_start=-reach)
        res_split = simulate_theorem1(model, path, t_range=(0, 59))
        res_ma = simulate_ma(model, coeffs, path, t_range=(0, 59))
        gap = np.abs(res_split.values - res_ma.values).max()
        assert gap <= 1e-8
        assert res_split.max_residual <= 1e-9

    def test_ma_route_rejects_uncertified_coeffs(self):
        model = scalar_model(0.5)
        coeffs = laurent_coeffs(model)
        broken = dataclasses.replace(coeffs, reconstruction_residual=1.0)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0)
        with pytest.raises(SpecificationError):
            simulate_ma(model, broken, spec)


class TestDeterminismAndLinearity:
    def test_same_spec_same_result_bitwise(self):
        model = scalar_model(0.7, bs=(1.0, 0.3))
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 2.0}, seed=21)
        r1 = simulate_theorem1(model, spec, t_range=(0, 99))
        r2 = simulate_theorem1(model, spec, t_range=(0, 99))
        assert np.array_equal(r1.values, r2.values)

    def test_scaling_noise_scales_path(self):
        model = scalar_model(0.6, bs=(1.0, -0.5))
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=13)
        kernel, _ = build_split_kernel(model)
        reach = -kernel.l_min
        path = sample_path(spec, 40 + 2 * reach, t_start=-reach)
        alpha = 2.5
        scaled = NoisePath(
            t_start=path.t_start,
            values=alpha * path.values,
            log_mags=None,
        )
        base = simulate_theorem1(model, path, t_range=(0, 39))
        big = simulate_theorem1(model, scaled, t_range=(0, 39))
        scale = 1.0 + np.abs(base.values).max()
        assert np.abs(big.values - alpha * base.values).max() <= 1e-12 * scale

    def test_explicit_split_reused(self):
        a = dense_operator(np.diag([0.5, 2.0]))
        model = arma_model([a], [build_operator(OperatorSpec(kind="identity", dim=2))])
        split = hyperbolic_split(a)
        spec = NoiseSpec(kind="gaussian", dim=2, params={"sigma": 1.0}, seed=1)
        r1 = simulate_theorem1(model, spec, t_range=(0, 20), split=split)
        r2 = simulate_theorem1(model, spec, t_range=(0, 20))
        assert np.allclose(r1.values, r2.values, atol=1e-12)


class TestWindowHandling:
    def test_insufficient_path_raises(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0)
        path = sample_path(spec, 10)
        with pytest.raises(WindowError):
            simulate_theorem1(model, path, t_range=(0, 5))

    def test_empty_range_rejected(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0)
        with pytest.raises(SpecificationError):
            simulate_theorem1(model, spec, t_range=(5, 4))

    def test_offset_window_matches_shifted_noise(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=6)
        res = simulate_theorem1(model, spec, t_range=(-30, -10))
        assert res.t_start == -30
        assert res.t_stop_inclusive == -10
        assert res.max_residual < 1e-10


class TestStationarity:
    def test_ks_shift_invariance(self):
        a = dense_operator(np.diag([0.5, 1.8]))
        model = arma_model([a], [build_operator(OperatorSpec(kind="identity", dim=2))])
        spec = NoiseSpec(kind="gaussian", dim=2, params={"sigma": 1.0}, seed=30)
        report = stationarity_ks(model, spec, replicates=4000)
        assert report["passed"]
        assert report["ks_statistic_t"] < report["critical_value"]


class TestPlimProbe:
    def test_contracting_scalar_converges_geometrically(self):
        model = scalar_model(0.5)
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0)
        probe = plim_probe(model, spec, n_grid=(4, 8, 16, 32), replicates=200)
        assert isinstance(probe, ProbeResult)
        assert probe.converges
        drops = [
            probe.dispersions[i + 1] / probe.dispersions[i]
            for i in range(len(probe.dispersions) - 1)
        ]
        assert all(r < 0.2 for r in drops)

    def test_circular_shift_diverges(self):
        model = arma_model(
            [build_operator(OperatorSpec(kind="circular_shift", dim=8))],
            [build_operator(OperatorSpec(kind="identity", dim=8))],
        )
        spec = NoiseSpec(kind="gaussian", dim=8, params={"sigma": 1.0}, seed=1)
        probe = plim_probe(model, spec, n_grid=(64, 128, 256, 512), replicates=100)
        assert not probe.converges
        assert probe.dispersions[-1] > 1.0

    def test_multiplication_family_converges(self):
        d = 64
        lambdas = [1.0 - 1.0 / (i + 2) for i in range(1, d + 1)]
        sigmas = [(i + 1) ** -2.0 for i in range(1, d + 1)]
        model = arma_model(
            [
                build_operator(
                    OperatorSpec(
                        kind="multiplication", dim=d, params={"multipliers": lambdas}
                    )
                )
            ],
            [build_operator(OperatorSpec(kind="identity", dim=d))],
        )
        spec = NoiseSpec(
            kind="componentwise_gaussian", dim=d, params={"sigmas": sigmas}, seed=2
        )
        probe = plim_probe(model, spec, n_grid=(64, 128, 256, 512), replicates=100)
        assert probe.converges
        assert probe.dispersions[-1] < 1e-3

    def test_precondition_violations(self):
        spec = NoiseSpec(kind="gaussian", dim=1, params={"sigma": 1.0}, seed=0)
        with pytest.raises(SpecificationError):
            plim_probe(scalar_model(1.5), spec)
        two = arma_model(
            [dense_operator(np.array([[0.1]])), dense_operator(np.array([[0.1]]))],
            [dense_operator(np.array([[1.0]]))],
        )
        with pytest.raises(SpecificationError):
            plim_probe(two, spec)
        with pytest.raises(SpecificationError):
            plim_probe(scalar_model(0.5, bs=(1.0, 1.0)), spec, n_grid=(1, 2))
