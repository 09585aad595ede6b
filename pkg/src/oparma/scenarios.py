"""Worked example gallery with automated pass/fail checks.

Each scenario builds a concrete operator family, runs its documented
checks, and returns a ScenarioReport whose numbers are bitwise
reproducible per seed.  Check descriptions carry a marker for where the
expected value comes from:

- [exact]  identities that hold to rounding (nilpotency, zero series);
- [oracle] independently derived numeric values (exceedance-count
  expectations, variance formulas, norm asymptotics);
- [direct] properties checked by running the machinery end to end
  (residuals, cross-method agreement, statistical invariance).

Divergence demonstrations follow a fixed recipe: count how many series
terms exceed 1 in log space, compare the replicate mean against the
analytic expectation, and read summability (or its failure) off the
exceedance probabilities.  Thresholds and replicate counts are stated
inline; nothing is tuned per run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1, gammaln

from .engine.moments import moment_estimate
from .engine.noise import NoiseSpec, log_magnitude_samples, make_rng, sample_path
from .engine.simulate import (
    build_split_kernel,
    partial_sum_quantiles,
    plim_probe,
    recursion_residual,
    simulate_ma,
    simulate_theorem1,
    stationarity_ks,
)
from .errors import SpecificationError, UnknownScenarioError
from .laurent import laurent_coeffs
from .operators import (
    OperatorSpec,
    arma_model,
    build_operator,
    dense_operator,
    power_log_norm,
    structured_log_norm,
    structured_norm,
)
from .spectral import check_split, hyperbolic_split


def _check(description, expected, observed, passed):
    return {
        "description": description,
        "expected": expected,
        "observed": observed,
        "pass": bool(passed),
    }


def _identity_model(a, dim):
    return arma_model([a], [build_operator(OperatorSpec(kind="identity", dim=dim))])


def _count_check(description, probs, counts, sigmas=3.0):
    """Compare a replicate-mean exceedance count to its oracle."""
    expected = float(np.sum(probs))
    var = float(np.sum(probs * (1.0 - probs)))
    se = math.sqrt(var / counts.shape[0]) if var > 0 else 0.0
    observed = float(np.mean(counts))
    passed = abs(observed - expected) <= sigmas * se if se > 0 else observed == expected
    return _check(
        f"{description} (mean over {counts.shape[0]} replicates within "
        f"{sigmas:g} standard errors of {expected:.4f})",
        expected,
        observed,
        passed,
    )


# ---------------------------------------------------------------------------
# individual scenarios


def _scenario_nilpotent(params, seed):
    d = int(params["dim"])
    a = build_operator(
        OperatorSpec(kind="weighted_shift", dim=d, params={"weights": [1.0] * (d - 1)})
    )
    model = _identity_model(a, d)
    checks = []

    power = np.linalg.matrix_power(a.matrix, d)
    checks.append(
        _check(
            f"[exact] shift with ones is nilpotent: A^{d} = 0 to the last bit",
            0.0,
            float(np.abs(power).max()),
            np.all(power == 0.0),
        )
    )

    kernel, _ = build_split_kernel(model)
    k0 = -kernel.l_min
    tail = max(
        float(np.linalg.norm(kernel.psis[k0 + j], 2))
        for j in range(d, kernel.l_max + 1)
    )
    checks.append(
        _check(
            f"[oracle] solution series terminates: kernel lags >= {d} vanish below 1e-12",
            0.0,
            tail,
            tail <= 1e-12,
        )
    )

    heavy = NoiseSpec(kind="pareto_exp", dim=d, params={}, seed=seed)
    res = simulate_theorem1(model, heavy, t_range=(0, 39))
    checks.append(
        _check(
            "[direct] finite series solves the recursion for heavy noise with no "
            "moment assumption (relative residual <= 1e-10)",
            1e-10,
            res.max_residual,
            res.max_residual <= 1e-10,
        )
    )

    probe = plim_probe(model, heavy, n_grid=(8, 16, 32, 64), replicates=100)
    checks.append(
        _check(
            "[exact] partial sums freeze after d terms: dispersion identically zero "
            "and converges flag set",
            0.0,
            max(probe.dispersions),
            probe.converges and max(probe.dispersions) == 0.0,
        )
    )
    return checks


def _scenario_quasinilpotent(params, seed):
    d = int(params["dim"])
    n_terms = int(params["n_terms"])
    sharp_near = int(params["sharp_terms"])
    sharp_far = int(params["sharp_terms_far"])
    reps = int(params["replicates"])
    sharp_reps = int(params["sharp_replicates"])

    # weights chosen so the leading window product is e^(1 - e^n); the
    # double-exponential collapse underflows doubles past n = 7, which the
    # truncation turns into exact zeros
    weights = [math.exp(math.e ** (n - 1) - math.e**n) for n in range(1, d)]
    a = build_operator(
        OperatorSpec(kind="weighted_shift", dim=d, params={"weights": weights})
    )
    checks = []

    log_ok = True
    worst = 0.0
    for n in range(1, 8):
        got = structured_log_norm(a, n)
        want = 1.0 - math.e**n
        rel = abs(got - want) / abs(want)
        worst = max(worst, rel)
        log_ok = log_ok and rel <= 1e-10
    checks.append(
        _check(
            "[oracle] log operator-power norms follow 1 - e^n for n <= 7 "
            "(relative 1e-10, evaluated in log space)",
            0.0,
            worst,
            log_ok,
        )
    )

    dense_ok = True
    worst_dense = 0.0
    for n in range(1, 5):
        got = power_log_norm(a, n)
        want = 1.0 - math.e**n
        rel = abs(got - want) / abs(want)
        worst_dense = max(worst_dense, rel)
        dense_ok = dense_ok and rel <= 1e-8
    checks.append(
        _check(
            "[oracle] dense matrix powers agree with the structured formula while "
            "they are representable (n <= 4, relative 1e-8)",
            0.0,
            worst_dense,
            dense_ok,
        )
    )

    # convergence under noise whose log magnitude is Pareto(1): the n-th
    # series term exceeds 1 iff P_n > e^n - 1, and those probabilities sum;
    # compare in log space so deep tails never overflow
    rng = make_rng(seed, stream=1)
    ns = np.arange(1.0, n_terms + 1.0)
    log_thr = ns + np.log1p(-np.exp(-ns))
    probs = np.exp(-log_thr)
    log_draws = -np.log1p(-rng.random((reps, n_terms)))
    counts = (log_draws > log_thr).sum(axis=1)
    checks.append(
        _count_check(
            "[oracle] summable exceedances: terms of the double-exponential series "
            "beat 1 only when P_n > e^n - 1",
            probs,
            counts,
        )
    )

    # sharpness: noise concentrated in component 0 whose log-log magnitude
    # is Pareto(1).  Exceedance needs P_n > log(e^n - 1) ~ n, a harmonic
    # (non-summable) family, so big terms recur forever
    rng = make_rng(seed, stream=2)
    far_draws = 1.0 / (1.0 - rng.random((sharp_reps, sharp_far)))
    ns_far = np.arange(1.0, sharp_far + 1.0)
    thr_far = np.maximum(1.0, ns_far + np.log1p(-np.exp(-ns_far)))
    probs_far = np.minimum(1.0, 1.0 / thr_far)
    counts_near = (far_draws[:, :sharp_near] > thr_far[:sharp_near]).sum(axis=1)
    counts_far = (far_draws > thr_far).sum(axis=1)
    checks.append(
        _count_check(
            f"[oracle] heavier tail is sharp: exceedance count over {sharp_near} "
            "terms matches the harmonic-sum expectation",
            probs_far[:sharp_near],
            counts_near,
        )
    )
    checks.append(
        _count_check(
            f"[oracle] harmonic counts keep growing ({sharp_near} -> {sharp_far} "
            "terms), the signature of a divergent series",
            probs_far[sharp_near:],
            counts_far - counts_near,
        )
    )
    return checks


def _scenario_rescaled_half_shift(params, seed):
    d = int(params["dim"])
    far = int(params["far_dim"])
    reps = int(params["replicates"])
    a = build_operator(
        OperatorSpec(kind="scaled_unilateral_shift", dim=d, params={"scale": 0.5})
    )
    checks = []

    power = np.linalg.matrix_power(a.matrix, d)
    checks.append(
        _check(
            f"[exact] truncation is nilpotent at its own order: A^{d} = 0",
            0.0,
            float(np.abs(power).max()),
            np.all(power == 0.0),
        )
    )

    worst = max(
        abs(structured_log_norm(a, n) - n * math.log(0.5)) for n in range(1, d)
    )
    checks.append(
        _check(
            "[exact] power norms halve per step: log ||A^n|| = n log(1/2) "
            "for n < d",
            0.0,
            worst,
            worst <= 1e-12,
        )
    )

    # scalar-projection divergence: with log-Pareto noise per component the
    # candidate series has terms 2^{-j} e^{P_j}, which exceed 1 whenever
    # P_j > j log 2; the full necessity argument needs the untruncated
    # left shift and stays documentation
    ln2 = math.log(2.0)
    rng = make_rng(seed, stream=1)
    draws = 1.0 / (1.0 - rng.random((reps, far)))
    thr = np.maximum(1.0, np.arange(1, far + 1) * ln2)
    probs = np.minimum(1.0, 1.0 / thr)
    counts_d = (draws[:, :d] > thr[:d]).sum(axis=1)
    counts_far = (draws > thr).sum(axis=1)
    checks.append(
        _count_check(
            f"[oracle] exceedance count at depth {d} matches 1 + (H_{d} - 1)/log 2",
            probs[:d],
            counts_d,
        )
    )
    checks.append(
        _count_check(
            f"[oracle] count grows with depth ({d} -> {far}): harmonic over log 2, "
            "unbounded in the untruncated limit",
            probs[d:],
            counts_far - counts_d,
        )
    )
    return checks


def _scenario_volterra(params, seed):
    m = int(params["grid"])
    x1 = float(params["x1"])
    conv_terms = int(params["conv_terms"])
    conv_reps = int(params["conv_replicates"])
    sharp_near = int(params["sharp_terms_near"])
    sharp_far = int(params["sharp_terms_far"])
    sharp_reps = int(params["sharp_replicates"])
    moment_n = int(params["moment_samples"])

    a = build_operator(OperatorSpec(kind="volterra", dim=m, params={}))
    checks = []

    worst = 0.0
    for n in range(1, 7):
        rel = abs(structured_norm(a, n) * math.factorial(n) - 1.0)
        worst = max(worst, rel)
    checks.append(
        _check(
            "[oracle] iterated-integration norms track 1/n! within 2% for n <= 6 "
            f"on the {m}-point grid",
            0.02,
            worst,
            worst <= 0.02,
        )
    )

    # convergent noise: magnitudes e^Y with slowly decaying Y-tail; the
    # n-th term exceeds 1 iff Y_n > log n!, and those probabilities are
    # summable, which is exactly the Borel-Cantelli sufficiency route
    spec = NoiseSpec(kind="gamma_inv_tail", dim=1, params={"x1": x1}, seed=seed)
    y = log_magnitude_samples(spec, conv_reps * conv_terms, stream=1).reshape(
        conv_reps, conv_terms
    )
    thr = gammaln(np.arange(2, conv_terms + 2).astype(float))
    y1 = math.log(x1)
    den = float(exp1(math.log(y1)))
    probs = np.where(
        thr <= y1, 1.0, exp1(np.log(np.maximum(thr, y1))) / den
    )
    counts = (y > thr).sum(axis=1)
    checks.append(
        _count_check(
            "[oracle] gamma-inverse-moment noise: exceedances of 1/n!-weighted "
            f"terms over {conv_terms} lags are summable",
            probs,
            counts,
        )
    )

    rep = moment_estimate(spec, None, "gamma_inverse", moment_n, stream=2)
    checks.append(
        _check(
            "[direct] the matching moment is finite: gamma-inverse moment verdict "
            f"on the same noise at {moment_n} samples",
            "finite",
            rep.finite_verdict,
            rep.finite_verdict == "finite",
        )
    )

    # sharp side: log-Pareto magnitudes have a finite iterated-log moment
    # but no gamma-inverse moment; exceedance probabilities 1/log n! sum
    # like log log N and never stop growing
    rng = make_rng(seed, stream=3)
    draws = 1.0 / (1.0 - rng.random((sharp_reps, sharp_far)))
    thr_s = gammaln(np.arange(2, sharp_far + 2).astype(float))
    probs_s = np.minimum(1.0, 1.0 / np.maximum(thr_s, 1.0))
    counts_near = (draws[:, :sharp_near] > thr_s[:sharp_near]).sum(axis=1)
    counts_far = (draws > thr_s).sum(axis=1)
    checks.append(
        _count_check(
            "[oracle] noise with log magnitude Pareto(1): exceedance count over "
            f"{sharp_near} lags matches the divergent-series partial sum",
            probs_s[:sharp_near],
            counts_near,
        )
    )
    checks.append(
        _count_check(
            f"[oracle] those counts still grow from {sharp_near} to {sharp_far} "
            "lags (iterated-log growth, non-summable family)",
            probs_s[sharp_near:],
            counts_far - counts_near,
        )
    )

    model = _identity_model(a, m)
    gauss = NoiseSpec(kind="gaussian", dim=m, params={"sigma": 1.0}, seed=seed)
    probe = plim_probe(model, gauss, n_grid=(8, 16, 32, 64), replicates=50)
    checks.append(
        _check(
            "[direct] partial sums of the simulated series settle under "
            "square-integrable noise (probe dispersion below 1e-3)",
            True,
            probe.converges,
            probe.converges,
        )
    )
    return checks


def _scenario_multiplication(params, seed):
    d = int(params["dim"])
    comps = [int(c) for c in params["components"]]
    reps = int(params["replicates"])
    steps = int(params["steps"])
    dims_curve = [int(x) for x in params["dims_curve"]]

    lam = np.array([1.0 - 1.0 / (i + 2.0) for i in range(d)])
    sig = np.array([(i + 1.0) ** -2.0 for i in range(d)])
    checks = []

    lam_c = lam[comps]
    sig_c = sig[comps]
    rng = make_rng(seed, stream=1)
    y = np.zeros((reps, len(comps)))
    for _ in range(steps):
        y = y * lam_c + sig_c * rng.standard_normal((reps, len(comps)))
    target = sig_c**2 / (1.0 - lam_c**2)
    observed = np.var(y, axis=0)
    rel = np.abs(observed / target - 1.0)
    checks.append(
        _check(
            "[oracle] stationary component variances match sigma_i^2/(1-lambda_i^2) "
            f"within 5% at {reps} replicates (components {comps})",
            [float(t) for t in target],
            [float(v) for v in observed],
            bool(np.all(rel <= 0.05)),
        )
    )

    # square-summable component variances are not enough: with noise
    # variances (i+1)^{-2} each stationary share behaves like 1/(2i) and
    # the d-indexed partial sums climb harmonically
    partials = []
    for dd in dims_curve:
        ll = np.array([1.0 - 1.0 / (i + 2.0) for i in range(dd)])
        var = np.arange(1.0, dd + 1.0) ** -2.0
        partials.append(float(np.sum(var / (1.0 - ll**2))))
    increasing = all(b > a for a, b in zip(partials, partials[1:]))
    spread = partials[-1] - partials[0]
    checks.append(
        _check(
            "[oracle] with noise variances (i+1)^-2 the total stationary variance "
            f"grows without bound across d = {dims_curve} (last - first > 1.5)",
            "> 1.5 and strictly increasing",
            spread,
            increasing and spread > 1.5,
        )
    )

    mult = build_operator(
        OperatorSpec(kind="multiplication", dim=d, params={"multipliers": list(lam)})
    )
    model = _identity_model(mult, d)
    noise = NoiseSpec(
        kind="componentwise_gaussian",
        dim=d,
        params={"sigmas": [float(s) for s in sig]},
        seed=seed,
    )
    probe = plim_probe(model, noise, n_grid=(64, 128, 256, 512), replicates=100)
    checks.append(
        _check(
            "[direct] with square-summable scales the strongly stable partial sums "
            "converge in probability (probe at d = %d)" % d,
            True,
            probe.converges,
            probe.converges,
        )
    )
    return checks


def _scenario_isometry(params, seed):
    d = int(params["dim"])
    reps = int(params["replicates"])
    powers = [int(p) for p in params["powers"]]
    a = build_operator(OperatorSpec(kind="circular_shift", dim=d))
    model = _identity_model(a, d)
    noise = NoiseSpec(kind="gaussian", dim=d, params={"sigma": 1.0}, seed=seed)
    checks = []

    probe = plim_probe(model, noise, replicates=100)
    checks.append(
        _check(
            "[direct] rotations never forget: probe dispersion stays order "
            "sqrt(n * d), converges flag false",
            False,
            probe.converges,
            not probe.converges,
        )
    )
    floor = math.sqrt(d)
    checks.append(
        _check(
            "[oracle] increment dispersion exceeds sqrt(d) at every grid point "
            "(orthogonal increments of total variance n*d)",
            floor,
            min(probe.dispersions),
            min(probe.dispersions) > floor,
        )
    )

    n_grid = [2**p for p in powers]
    quants = partial_sum_quantiles(model, noise, n_grid, replicates=reps)
    slope = float(
        np.polyfit(np.log(np.asarray(n_grid, dtype=float)), np.log(quants), 1)[0]
    )
    checks.append(
        _check(
            "[oracle] 0.9-quantile of ||S_n|| grows like sqrt(n): log-log slope "
            "0.5 +/- 0.1 across n = 2^%d..2^%d" % (powers[0], powers[-1]),
            0.5,
            slope,
            abs(slope - 0.5) <= 0.1,
        )
    )
    gram_err = float(np.abs(a.matrix.conj().T @ a.matrix - np.eye(d)).max())
    checks.append(
        _check(
            "[exact] the circular shift is unitary on the truncation (the cut-off "
            "unilateral shift is not an isometry there; this substitution keeps "
            "the norm-preserving hypothesis): || A^H A - I || = 0",
            0.0,
            gram_err,
            gram_err == 0.0,
        )
    )
    return checks


def _scenario_expanding_shift(params, seed):
    d = int(params["dim"])
    reps = int(params["replicates"])
    delta = float(params["delta"])
    a = build_operator(
        OperatorSpec(kind="scaled_unilateral_shift", dim=d, params={"scale": 2.0})
    )
    checks = []

    worst = max(
        abs(structured_log_norm(a, n) - n * math.log(2.0)) for n in range(1, d)
    )
    checks.append(
        _check(
            "[exact] power norms double per step on the truncation: "
            "log ||A^n|| = n log 2 for n < d",
            0.0,
            worst,
            worst <= 1e-12,
        )
    )

    # the would-be anticausal solution forces component 0 to equal both
    # Z_t^(0) and -sum_j 2^{-j} Z^(j)_{t+j}; evaluate both members on one
    # sampled path and watch them disagree
    rng = make_rng(seed, stream=1)
    z0 = rng.standard_normal(reps)
    zj = rng.standard_normal((reps, d - 1))
    weights = 2.0 ** -np.arange(1.0, d)
    gap = z0 + zj @ weights
    frac = float(np.mean(np.abs(gap) > delta))
    sigma = math.sqrt(1.0 + float(np.sum(weights**2)))
    expected = 1.0 - 2.0 * delta / (sigma * math.sqrt(2.0 * math.pi))
    checks.append(
        _check(
            "[oracle] the two candidate expressions for component 0 differ by more "
            f"than {delta} in at least 99% of replicates (analytic rate "
            f"{expected:.4f} for centered normal of variance {sigma**2:.4f})",
            ">= 0.99",
            frac,
            frac >= 0.99,
        )
    )
    return checks


def _scenario_hyperbolic_pipeline(params, seed):
    d = int(params["dim"])
    q = int(params["q"])
    t1 = int(params["window"]) - 1
    ks_reps = int(params["ks_replicates"])
    n_in = d // 2
    rng = make_rng(seed, stream=0)
    while True:
        moduli = np.concatenate(
            [
                rng.uniform(0.4, 0.85, size=n_in),
                rng.uniform(1.25, 2.2, size=d - n_in),
            ]
        )
        phases = rng.uniform(0.0, 2.0 * np.pi, size=d)
        eigs = moduli * np.exp(1j * phases)
        s = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if np.linalg.cond(s) < 20.0:
            break
    a = dense_operator(s @ np.diag(eigs) @ np.linalg.inv(s))
    mas = [
        dense_operator(
            (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2 * d)
        )
        for _ in range(q + 1)
    ]
    model = arma_model([a], mas)
    checks = []

    split = hyperbolic_split(a)
    checks.append(
        _check(
            f"[exact] spectral splitting finds the planted {n_in}/{d - n_in} "
            "partition with contracting blocks on both sides",
            n_in,
            split.rank,
            split.rank == n_in
            and split.diagnostics["radius_inner"] < 1.0
            and split.diagnostics["radius_outer_inv"] < 1.0,
        )
    )
    flags = check_split(split, a)
    checks.append(
        _check(
            "[direct] projector identities hold at tolerance: " + ", ".join(sorted(flags)),
            True,
            all(flags.values()),
            all(flags.values()),
        )
    )

    coeffs = laurent_coeffs(model)
    checks.append(
        _check(
            "[direct] two-sided coefficient extraction certifies itself "
            "(reconstruction residual <= 1e-6)",
            1e-6,
            coeffs.reconstruction_residual,
            coeffs.reconstruction_residual <= 1e-6,
        )
    )

    kernel, _ = build_split_kernel(model, split=split)
    reach = max(kernel.l_max, -kernel.l_min, abs(coeffs.k_min), abs(coeffs.k_max))
    noise = NoiseSpec(kind="gaussian", dim=d, params={"sigma": 1.0}, seed=seed)
    path = sample_path(noise, t1 + 2 * reach + 1, t_start=-reach)
    res_split = simulate_theorem1(model, path, t_range=(0, t1), split=split)
    checks.append(
        _check(
            "[direct] split-series simulation satisfies the defining recursion "
            "(relative residual <= 1e-9)",
            1e-9,
            res_split.max_residual,
            res_split.max_residual <= 1e-9,
        )
    )

    res_ma = simulate_ma(model, coeffs, path, t_range=(0, t1))
    gap = float(np.linalg.norm(res_split.values - res_ma.values, axis=1).max())
    checks.append(
        _check(
            "[direct] the split series and the two-sided moving average agree on a "
            "shared noise path (sup gap <= 1e-6 over the window)",
            1e-6,
            gap,
            gap <= 1e-6,
        )
    )

    ks = stationarity_ks(model, noise, replicates=ks_reps)
    checks.append(
        _check(
            "[direct] simulated law is shift invariant: two-sample KS on paired "
            f"norms at lag 5, {ks_reps} replicates, 1% critical value",
            ks["critical_value"],
            max(ks["ks_statistic_t"], ks["ks_statistic_t_plus_1"]),
            ks["passed"],
        )
    )
    return checks


_CATALOG = (
    (
        "nilpotent",
        "shift with finitely many steps: the series terminates, no moment "
        "condition on the noise is needed",
        _scenario_nilpotent,
        {"dim": 6},
    ),
    (
        "quasinilpotent_shift",
        "weighted shift with double-exponentially collapsing powers: iterated-log "
        "noise converges, one notch heavier diverges",
        _scenario_quasinilpotent,
        {
            "dim": 12,
            "n_terms": 40,
            "sharp_terms": 50,
            "sharp_terms_far": 5000,
            "replicates": 4000,
            "sharp_replicates": 2000,
        },
    ),
    (
        "rescaled_half_shift",
        "half-scaled shift: geometric decay needs a log moment; the truncation "
        "is nilpotent so the necessity argument stays at the scalar projection",
        _scenario_rescaled_half_shift,
        {"dim": 16, "far_dim": 64, "replicates": 4000},
    ),
    (
        "volterra",
        "cumulative integration on a grid: power norms decay like 1/n!, the "
        "gamma-inverse moment is the matching noise condition",
        _scenario_volterra,
        {
            "grid": 512,
            "x1": 20.0,
            "conv_terms": 200,
            "conv_replicates": 3000,
            "sharp_terms_near": 200,
            "sharp_terms_far": 4000,
            "sharp_replicates": 2000,
            "moment_samples": 1_000_000,
        },
    ),
    (
        "multiplication_strongly_stable",
        "diagonal family with spectrum accumulating at 1: stationary variance "
        "formula per component; finite noise variance alone is not sufficient",
        _scenario_multiplication,
        {
            "dim": 64,
            "components": [0, 8, 32],
            "replicates": 100_000,
            "steps": 2048,
            "dims_curve": [16, 64, 256, 1024],
        },
    ),
    (
        "isometry",
        "circular shift (unitary truncation): nondegenerate noise makes partial "
        "sums wander at rate sqrt(n), so no stationary solution arises this way",
        _scenario_isometry,
        {"dim": 16, "replicates": 200, "powers": list(range(4, 13))},
    ),
    (
        "expanding_shift",
        "doubling shift: the causal and anticausal readings force contradictory "
        "values for component 0",
        _scenario_expanding_shift,
        {"dim": 16, "replicates": 1000, "delta": 0.005},
    ),
    (
        "hyperbolic_pipeline",
        "end to end on a random hyperbolic operator: split, simulate, extract "
        "coefficients, cross-check, test stationarity",
        _scenario_hyperbolic_pipeline,
        {"dim": 6, "q": 2, "window": 200, "ks_replicates": 4000},
    ),
)

_BY_NAME = {name: (anchor, fn, defaults) for name, anchor, fn, defaults in _CATALOG}


def list_scenarios():
    """Stable-ordered catalog: name, one-line anchor, default parameters."""
    return tuple(
        {"name": name, "anchor": anchor, "defaults": dict(defaults)}
        for name, anchor, fn, defaults in _CATALOG
    )


@dataclass(frozen=True)
class ScenarioReport:
    name: str
    params: dict
    checks: list
    seed: int
    runtime_ms: int

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def run_scenario(name: str, overrides: dict | None = None, seed: int = 0) -> ScenarioReport:
    """Run one catalog scenario and report its checks.

    ``overrides`` updates the scenario's default parameters (unknown keys
    are rejected).  Reports are bitwise deterministic per (name,
    overrides, seed) apart from runtime_ms.  Exceptions escaping a
    scenario body signal broken infrastructure and propagate; a failed
    check is a regular report entry with pass false.
    """
    if name not in _BY_NAME:
        known = ", ".join(sorted(_BY_NAME))
        raise UnknownScenarioError(f"unknown scenario {name!r}; catalog: {known}")
    anchor, fn, defaults = _BY_NAME[name]
    params = dict(defaults)
    if overrides:
        bad = sorted(set(overrides) - set(defaults))
        if bad:
            raise SpecificationError(
                f"unknown parameter(s) {bad} for scenario {name!r}; "
                f"known: {sorted(defaults)}"
            )
        params.update(overrides)
    t0 = time.perf_counter()
    checks = fn(params, int(seed))
    ms = int(round((time.perf_counter() - t0) * 1000.0))
    return ScenarioReport(
        name=name, params=params, checks=checks, seed=int(seed), runtime_ms=ms
    )
