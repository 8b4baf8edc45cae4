import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ascalc.contour as contour
from ascalc import (ContourSpec, QuadratureRule, SectorProfile, admissible_theta, affine_family,
                    build_contour, continuity_probe, diagonal, dirichlet_laplacian_1d, eig_oracle,
                    estimate_sector, growth_fit, jordan_block, nonnormal_bidiagonal,
                    oracle_function_apply, phi_calculus_apply, power_semigroup_apply,
                    random_normal, scalar, semigroup_apply, semigroup_derivative, semigroup_matrix,
                    tau_semigroup_apply)
from ascalc.errors import (ConfigError, InadmissibleAlpha, QuadratureNotConverged,
                           SectorViolationAtTau)

from conftest import diagonalizable_gallery, rel


def profile(omega=0.0, gamma=-1.0):
    return SectorProfile(omega=omega, gamma=gamma, constants=(), fit_window=(1.0, 10.0))


class TestBuildContour:
    def test_midpoint_theta(self):
        assert admissible_theta(np.pi / 6, 1.0) == pytest.approx((np.pi / 6, np.pi / 2))
        rule = build_contour(profile(np.pi / 6), 1.0, 1.0)
        assert rule.spec.theta == pytest.approx(np.pi / 3)

    def test_theta_capped_by_pi(self):
        rule = build_contour(profile(0.2), 0.25, 1.0)
        assert rule.spec.theta == pytest.approx(0.5 * (0.2 + np.pi))

    def test_inadmissible_alpha(self):
        with pytest.raises(InadmissibleAlpha):
            build_contour(profile(np.pi / 4), 3.0, 1.0)
        with pytest.raises(InadmissibleAlpha):
            admissible_theta(np.pi / 4, 2.0)

    def test_bad_inputs(self):
        with pytest.raises(ConfigError):
            build_contour(profile(), 1.0, 1.0, tol=1e-1)
        with pytest.raises(ConfigError):
            build_contour(profile(), 1.0, 0.0)
        with pytest.raises(ConfigError):
            build_contour(profile(0.3), 1.0, 1.0, theta=0.2)
        with pytest.raises(ConfigError):
            ContourSpec(theta=1.0, s_min=0.0, s_max=1.0, N=3, alpha=1.0, t_min=1.0)

    def test_decay_condition(self):
        for alpha in (0.3, 0.5, 1.0, 1.5, 1.9):
            spec = build_contour(profile(0.1), alpha, 1.0).spec
            assert 0.1 < spec.theta and np.cos(alpha * spec.theta) > 0
            assert spec.s_min < spec.s_max and spec.N >= 4

    def test_conjugate_pairs(self):
        rule = build_contour(profile(0.2), 1.0, 1.0)
        half = rule.nodes.size // 2
        np.testing.assert_array_equal(rule.nodes[half:], rule.nodes[:half].conj())
        np.testing.assert_array_equal(rule.weights[half:], rule.weights[:half].conj())

    def test_scalar_at_tol_1e8(self):
        A = scalar(1)
        rule = build_contour(estimate_sector(A), 1.0, 1.0, tol=1e-8, A=A)
        y = phi_calculus_apply(A, lambda z: np.exp(-z), rule, np.array([1.0]))
        assert abs(y[0] - np.exp(-1)) <= 1e-8


class TestPhiCalculus:
    def test_diag_exponential(self):
        A = diagonal(1, 2)
        rule = build_contour(estimate_sector(A), 1.0, 1.0, 1e-10, A=A)
        y = phi_calculus_apply(A, lambda z: np.exp(-z), rule, np.ones(2))
        np.testing.assert_allclose(y, [np.exp(-1), np.exp(-2)], rtol=1e-9)

    def test_sqrt_times_exponential(self):
        A = diagonal(1, 4)
        rule = build_contour(estimate_sector(A), 1.0, 1.0, 1e-10, A=A, beta=0.5)
        y = phi_calculus_apply(A, lambda z: np.sqrt(z) * np.exp(-z), rule, np.ones(2))
        oracle = oracle_function_apply(eig_oracle(A), lambda z: np.sqrt(z) * np.exp(-z), np.ones(2))
        np.testing.assert_allclose(y, oracle, rtol=1e-9)
        np.testing.assert_allclose(y, [np.exp(-1), 2 * np.exp(-4)], rtol=1e-9)

    def test_not_converged(self):
        A = diagonal(1, 2)
        rule = build_contour(estimate_sector(A), 1.0, 1.0, 1e-12, A=A, nodes=4)
        with pytest.raises(QuadratureNotConverged) as exc:
            phi_calculus_apply(A, lambda z: np.exp(-z), rule, np.ones(2))
        assert exc.value.estimate > 0

    def test_full_output(self):
        A = diagonal(1, 2)
        rule = build_contour(estimate_sector(A), 1.0, 1.0, 1e-10, A=A)
        y, info = phi_calculus_apply(A, lambda z: np.exp(-z), rule, np.ones(2), full_output=True)
        assert info["nodes_used"] > len(rule)
        assert info["est_error"] <= 1e-10 * np.sqrt(2)

    def test_threads_bit_identical(self, monkeypatch):
        monkeypatch.setattr(contour, "_CHUNK_ENTRIES", 500)
        A = dirichlet_laplacian_1d(8)
        x = np.linspace(1, 2, 8)
        a = semigroup_apply(A, None, 1.0, 0.5, x, 1e-10, threads=1)
        b = semigroup_apply(A, None, 1.0, 0.5, x, 1e-10, threads=4)
        np.testing.assert_array_equal(a, b)

    def test_env_thread_fallback(self, monkeypatch):
        monkeypatch.setenv("ASCALC_THREADS", "3")
        assert contour._threads(None) == 3
        assert contour._threads(2) == 2


class TestSemigroupExamples:
    def test_scalar(self):
        y = semigroup_apply(scalar(1), None, 1.0, 1.0, [1.0], 1e-8)
        assert abs(y[0] - 0.3678794) <= 1e-7

    def test_diag_half_power(self):
        y = semigroup_apply(diagonal(1, 4), None, 0.5, 2.0, np.ones(2), 1e-10)
        np.testing.assert_allclose(y, [np.exp(-2), np.exp(-4)], rtol=1e-9)

    def test_jordan(self):
        y = semigroup_apply(jordan_block(2, 2), None, 1.0, 1.0, [0.0, 1.0], 1e-10)
        np.testing.assert_allclose(y, np.exp(-2) * np.array([-1, 1]), rtol=1e-9, atol=1e-12)

    def test_power_examples(self):
        y = power_semigroup_apply(diagonal(1, 2), None, 1.0, 1.0, 1.0, np.ones(2), 1e-10)
        np.testing.assert_allclose(y, [np.exp(-1), 2 * np.exp(-2)], rtol=1e-9)
        y = power_semigroup_apply(diagonal(1, 4), None, 0.5, 0.5, 1.0, np.ones(2), 1e-10)
        np.testing.assert_allclose(y, [np.exp(-1), 2 * np.exp(-2)], rtol=1e-9)

    def test_power_requires_positive_beta(self):
        with pytest.raises(ConfigError):
            power_semigroup_apply(diagonal(1, 2), None, 1.0, 0.0, 1.0, np.ones(2))

    def test_complex_beta(self):
        A = diagonal(1, 3)
        beta = 0.5 + 0.7j
        y = power_semigroup_apply(A, None, 1.0, beta, 1.0, np.ones(2), 1e-10)
        ref = oracle_function_apply(eig_oracle(A), lambda z: z**beta * np.exp(-z), np.ones(2))
        assert rel(y, ref) <= 1e-8

    def test_derivative_examples(self):
        y = semigroup_derivative(scalar(1), None, 1.0, 1.0, [1.0], 1, 1e-10)
        assert y[0] == pytest.approx(-np.exp(-1), rel=1e-9)
        y = semigroup_derivative(diagonal(1, 2), None, 1.0, 1.0, np.ones(2), 2, 1e-10)
        np.testing.assert_allclose(y, [np.exp(-1), 4 * np.exp(-2)], rtol=1e-9)
        with pytest.raises(ConfigError):
            semigroup_derivative(scalar(1), None, 1.0, 1.0, [1.0], 0)

    def test_t_zero_identity(self):
        x = np.array([0.3, -1.2, 5.0])
        y = semigroup_apply(dirichlet_laplacian_1d(3), None, 0.5, 0.0, x)
        np.testing.assert_array_equal(y, x)
        assert y is not x


@pytest.mark.parametrize("A", diagonalizable_gallery(), ids=lambda A: A.label)
def test_oracle_equivalence(A):
    prof = estimate_sector(A)
    x = np.linspace(-1, 2, A.n)
    dec = eig_oracle(A)
    for alpha in (0.5, 1.0, 1.5):
        for t in (0.1, 1.0, 3.0):
            ref = oracle_function_apply(dec, lambda z: np.exp(-t * z**alpha), x)
            assert rel(semigroup_apply(A, prof, alpha, t, x, 1e-10), ref) <= 1e-8
            for beta in (alpha, 1.0):
                ref = oracle_function_apply(dec, lambda z: z**beta * np.exp(-t * z**alpha), x)
                assert rel(power_semigroup_apply(A, prof, alpha, beta, t, x, 1e-10), ref) <= 1e-8


SG_CASES = [diagonal(1, 2), dirichlet_laplacian_1d(8), dirichlet_laplacian_1d(16),
            random_normal(12, seed=1, spread=0.4), jordan_block(2, 2), nonnormal_bidiagonal(4, 1, 2)]


@pytest.mark.parametrize("A", SG_CASES, ids=lambda A: A.label)
def test_semigroup_law(A, rng):
    prof = estimate_sector(A)
    lo, hi = admissible_theta(prof.omega, 1.0)
    alphas = [a for a in (0.5, 1.0) if a < np.pi / (2 * prof.omega or 1e-300)]
    worst = 0.0
    for i in range(50):
        alpha = alphas[i % len(alphas)]
        t, s = rng.uniform(0.05, 2.0, 2)
        x = rng.standard_normal(A.n)
        lhs = semigroup_apply(A, prof, alpha, t + s, x, 1e-10)
        rhs = semigroup_apply(A, prof, alpha, t, semigroup_apply(A, prof, alpha, s, x, 1e-10), 1e-10)
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(x))
    assert worst <= 1e-6


@pytest.mark.parametrize("A,alpha", [(diagonal(1, 2), 1.0), (dirichlet_laplacian_1d(8), 0.5),
                                     (random_normal(8, seed=2), 1.5), (jordan_block(2, 2), 1.0)],
                         ids=lambda v: getattr(v, "label", str(v)))
def test_derivative_order_two(A, alpha):
    x = np.ones(A.n)
    t = 1.0
    exact = semigroup_derivative(A, None, alpha, t, x, 1, 1e-12)
    hs = [1e-2, 5e-3, 2.5e-3]
    errs = []
    for h in hs:
        fd = (semigroup_apply(A, None, alpha, t + h, x, 1e-12)
              - semigroup_apply(A, None, alpha, t - h, x, 1e-12)) / (2 * h)
        errs.append(np.linalg.norm(fd - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), orders


def test_power_matches_finite_difference_beta_alpha():
    A = diagonal(1, 3)
    alpha, t, x = 0.5, 1.0, np.ones(2)
    direct = power_semigroup_apply(A, None, alpha, alpha, t, x, 1e-12)
    errs = []
    for h in (1e-2, 5e-3):
        fd = -(semigroup_apply(A, None, alpha, t + h, x, 1e-12)
               - semigroup_apply(A, None, alpha, t - h, x, 1e-12)) / (2 * h)
        errs.append(np.linalg.norm(fd - direct))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


def test_derivative_fourth_order_laplacian():
    A = dirichlet_laplacian_1d(8)
    x = np.ones(8)
    t = 1.0
    exact = semigroup_derivative(A, None, 1.0, t, x, 1, 1e-13)

    def T(s):
        return semigroup_apply(A, None, 1.0, s, x, 1e-13)

    errs = []
    for h in (0.1, 0.05, 0.025):
        fd = (T(t - 2 * h) - 8 * T(t - h) + 8 * T(t + h) - T(t + 2 * h)) / (12 * h)
        errs.append(np.linalg.norm(fd - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.8), orders


@pytest.mark.parametrize("A", [diagonal(1, 2), dirichlet_laplacian_1d(8), random_normal(8, seed=3, spread=0.5)],
                         ids=lambda A: A.label)
@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_commutation(A, alpha, rng):
    dec = eig_oracle(A)
    for _ in range(5):
        t = rng.uniform(0.1, 2)
        x = rng.standard_normal(A.n)
        Ax = oracle_function_apply(dec, lambda z: z**alpha, x)
        lhs = power_semigroup_apply(A, None, alpha, alpha, t, x, 1e-10)
        rhs = semigroup_apply(A, None, alpha, t, Ax, 1e-10)
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(Ax)


@pytest.mark.parametrize("A", [diagonal(1, 2), dirichlet_laplacian_1d(8), jordan_block(2, 3),
                               nonnormal_bidiagonal(4, 1, 2), random_normal(8, seed=0)],
                         ids=lambda A: A.label)
@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_injectivity(A, t):
    T = semigroup_matrix(A, None, 1.0, t, 1e-10)
    assert np.linalg.svd(T, compute_uv=False)[-1] > 0


@given(t=st.floats(0.05, 5.0), alpha=st.sampled_from([0.5, 1.0, 1.5]),
       xs=st.lists(st.floats(-5, 5), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3))
@settings(max_examples=25, deadline=None)
def test_conjugate_symmetry(t, alpha, xs):
    A = dirichlet_laplacian_1d(8)
    y = semigroup_apply(A, None, alpha, t, np.asarray(xs), 1e-10)
    assert np.linalg.norm(y.imag) <= 1e-8 * np.linalg.norm(y.real)


def test_scalar_quadrature_convergence():
    A = scalar(1)
    prof = estimate_sector(A)
    errs = {N: abs(semigroup_apply(A, prof, 1.0, 1.0, [1.0], 1e-10, nodes=N)[0] - np.exp(-1))
            for N in (32, 64)}
    assert errs[64] <= max(errs[32] / 10, 1e-12)


class TestTauSemigroup:
    def test_tau_zero_reduction(self):
        A0 = dirichlet_laplacian_1d(4)
        fam = affine_family(A0, np.eye(4))
        x = np.ones(4)
        np.testing.assert_array_equal(tau_semigroup_apply(fam, 0.0, 0.7, x, 1e-10),
                                      semigroup_apply(A0, None, 1.0, 0.7, x, 1e-10))

    def test_diag_shift(self):
        fam = affine_family(diagonal(1, 2), np.eye(2))
        y = tau_semigroup_apply(fam, 1.0, 1.0, np.ones(2), 1e-10)
        np.testing.assert_allclose(y, [np.exp(-2), np.exp(-3)], rtol=1e-9)

    def test_violation_propagates(self):
        fam = affine_family(diagonal(1, 2), np.diag([-1.0, 0.0]))
        with pytest.raises(SectorViolationAtTau):
            tau_semigroup_apply(fam, 2.0, 1.0, np.ones(2))

    def test_growth_axiom(self):
        fam = affine_family(nonnormal_bidiagonal(3, 1, 2), np.eye(3))
        A = fam(0.5)
        fit = growth_fit(A, None, 1.0, np.geomspace(1, 1e-4, 9))
        assert np.isfinite(fit.witness) and fit.witness > 0


class TestGrowthFit:
    def test_scalar(self):
        fit = growth_fit(scalar(1), None, 1.0, np.geomspace(1, 1e-3, 8))
        np.testing.assert_allclose(fit.norms, np.exp(-np.geomspace(1, 1e-3, 8)), rtol=1e-7)
        assert abs(fit.kappa_eff) < 0.2

    def test_normal(self):
        fit = growth_fit(dirichlet_laplacian_1d(8), None, 1.0, np.geomspace(1, 1e-3, 8))
        assert abs(fit.kappa_eff) < 0.2 and np.isfinite(fit.witness)
        assert np.all(fit.norms <= 1 + 1e-8)

    def test_nonnormal_witness(self):
        fit = growth_fit(nonnormal_bidiagonal(4, 1, 10), None, 1.0, np.geomspace(1, 1e-3, 10))
        assert np.isfinite(fit.witness) and np.isfinite(fit.kappa_eff)
        ref = [np.linalg.norm(__import__("scipy.linalg").linalg.expm(-t * nonnormal_bidiagonal(4, 1, 10).entries), 2)
               for t in np.geomspace(1, 1e-3, 10)]
        np.testing.assert_allclose(fit.norms, ref, rtol=1e-6)


class TestContinuity:
    def test_scalar(self):
        ts = np.geomspace(1e-1, 1e-6, 6)
        vals = continuity_probe(scalar(1), None, 1.0, [1.0], ts)
        np.testing.assert_allclose(vals, 1 - np.exp(-ts), rtol=1e-4)

    def test_diag_half_matches_oracle(self):
        A = diagonal(1, 2)
        ts = np.geomspace(1e-1, 1e-6, 6)
        x = np.ones(2)
        vals = continuity_probe(A, None, 0.5, x, ts)
        dec = eig_oracle(A)
        ref = [np.linalg.norm(oracle_function_apply(dec, lambda z: np.exp(-t * z**0.5), x) - x) for t in ts]
        np.testing.assert_allclose(vals, ref, atol=1e-8)

    @pytest.mark.parametrize("A,alpha", [(jordan_block(2, 2), 1.0), (dirichlet_laplacian_1d(8), 0.5),
                                         (random_normal(6, seed=1), 1.5)])
    def test_decreases_to_zero(self, A, alpha):
        x = np.ones(A.n)
        t_final = 1e-6 * A.norm() ** (-alpha)
        vals = continuity_probe(A, None, alpha, x, np.geomspace(1e-1, t_final, 8))
        assert vals[-1] <= 1e-4 * np.linalg.norm(x)
        assert np.all(np.diff(vals[-5:]) < 0)

    def test_bad_sequence(self):
        with pytest.raises(ConfigError):
            continuity_probe(scalar(1), None, 1.0, [1.0], [0.1, 0.2])
