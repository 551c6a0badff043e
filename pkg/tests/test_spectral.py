import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depconc.mercer import MercerSetup
from depconc.mixing import MixingRate
from depconc.spectral import (
    EmpiricalSpectrum,
    FilterSpec,
    GaussianKernel,
    KernelModel,
    PowerLawSpectrum,
    SobolevKernel,
    SourceCondition,
    certify_filter,
    effective_dimension,
    error_bound_lemma43,
    ell_zero,
    filter_eval,
    fit,
    lambda_schedule,
    landweber_iterate,
    lemma41_deviations,
    load_dataset_csv,
    powerlaw_envelope_constant,
    rate_exponent,
    ratio_operator_check,
    save_dataset_csv,
    table1_sample_sizes,
)

LAMS = np.geomspace(1e-6, 1.0, 41)
TS = np.geomspace(1e-6, 1.0, 10_000)


def random_problem(rng, n, kernel=None):
    x = rng.uniform(0, 1, size=n)
    y = np.clip(np.sin(6 * x) + 0.3 * rng.standard_normal(n), -1, 1)
    return x, y, kernel or GaussianKernel(width=float(rng.uniform(0.05, 1.0)))


class TestFilterEval:
    def test_tikhonov(self):
        assert filter_eval(FilterSpec.tikhonov(), 0.2, 0.2) == pytest.approx(2.5)

    def test_cutoff_boundary(self):
        assert filter_eval(FilterSpec.cutoff(), 0.1, 0.1) == pytest.approx(10.0)
        assert filter_eval(FilterSpec.cutoff(), 0.1, 0.0999) == 0.0

    @pytest.mark.parametrize("lam", [1.0, 0.3, 0.01, 1e-4])
    def test_landweber_residual_identity(self, lam):
        m = math.ceil(1 / lam)
        F = filter_eval(FilterSpec.landweber(), lam, TS)
        # rounding grows with the m summed terms
        np.testing.assert_allclose(TS * F + (1 - TS) ** m, 1.0, rtol=0, atol=10 * m * np.finfo(float).eps)

    def test_landweber_small_m_is_geometric_sum(self):
        t = np.array([0.1, 0.5, 1.0])
        F = filter_eval(FilterSpec.landweber(), 0.25, t)
        np.testing.assert_allclose(F, sum((1 - t) ** i for i in range(4)), rtol=1e-14)

    @pytest.mark.parametrize("t", [0.0, 1.5, -0.1])
    def test_domain(self, t):
        with pytest.raises(ValueError):
            filter_eval(FilterSpec.tikhonov(), 0.1, t)

    def test_lambda_domain(self):
        with pytest.raises(ValueError):
            filter_eval(FilterSpec.tikhonov(), 2.0, 0.5)


class TestCertifyFilter:
    def test_tikhonov(self):
        cert = certify_filter(FilterSpec.tikhonov(), LAMS, TS)
        assert cert.passed
        assert cert.estimated.B_const <= 1 and cert.estimated.E_const <= 1

    def test_cutoff_all_orders(self):
        cert = certify_filter(FilterSpec.cutoff(), LAMS, TS)
        assert cert.passed
        assert set(cert.gamma_q_estimates) == set(range(1, 9))
        assert max(cert.gamma_q_estimates.values()) <= 1.0

    def test_landweber(self):
        cert = certify_filter(FilterSpec.landweber(), LAMS, TS)
        assert cert.passed
        assert cert.estimated.E_const <= 2.0

    def test_tikhonov_fails_beyond_qualification(self):
        cert = certify_filter(FilterSpec.tikhonov(), LAMS, TS, qs=[2])
        assert not cert.passed

    def test_custom_filter(self):
        showalter = FilterSpec.custom(lambda lam, t: -np.expm1(-t / lam) / t,
                                      B_const=1, E_const=1, gamma0=1, qualification_q=1, gamma_q=1)
        assert certify_filter(showalter, LAMS, TS).passed
        with pytest.raises(ValueError):
            showalter.to_dict()

    def test_serialization(self):
        for f in (FilterSpec.tikhonov(), FilterSpec.cutoff(), FilterSpec.landweber()):
            assert FilterSpec.from_dict(f.to_dict()) == f


class TestFit:
    def test_tikhonov_equals_krr(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(1, 200))
            x, y, k = random_problem(rng, n)
            lam = float(10 ** rng.uniform(-4, 0))
            model = fit(x, y, lam, FilterSpec.tikhonov(), k)
            K = k(x, x)
            beta = np.linalg.solve(K + n * lam * np.eye(n), y)
            xt = rng.uniform(0, 1, 20)
            np.testing.assert_allclose(model.predict(xt), k(xt, x) @ beta, atol=1e-8)

    def test_landweber_equals_iteration(self):
        rng = np.random.default_rng(1)
        x, y, k = random_problem(rng, 60)
        for lam in (0.5, 0.05, 0.01):
            model = fit(x, y, lam, FilterSpec.landweber(), k)
            it = landweber_iterate(k(x, x) / 60, y, math.ceil(1 / lam))
            np.testing.assert_allclose(model.alpha, it, atol=1e-10)

    def test_single_point_interpolates(self):
        model = fit(np.array([0.3]), np.array([0.7]), 0.5, FilterSpec.cutoff(), GaussianKernel(1.0))
        assert model.predict(np.array([0.3]))[0] == pytest.approx(0.7)

    def test_large_lambda_shrinks_to_zero(self):
        rng = np.random.default_rng(2)
        x, y, k = random_problem(rng, 30)
        model = fit(x, y, 1e8, FilterSpec.tikhonov(), k)
        assert np.abs(model.predict(x)).max() < 1e-7

    def test_sobolev_kernel(self):
        rng = np.random.default_rng(3)
        x, y, _ = random_problem(rng, 40)
        k = SobolevKernel()
        assert np.all(np.diag(k(x, x)) <= 1)
        model = fit(x, y, 1e-3, FilterSpec.tikhonov(), k)
        assert np.all(np.isfinite(model.predict(x)))
        with pytest.raises(ValueError):
            k(np.array([1.5]), np.array([0.2]))

    def test_output_bound(self):
        with pytest.raises(ValueError):
            fit(np.zeros(2), np.array([2.0, 0.0]), 0.1, FilterSpec.tikhonov(), GaussianKernel(), R=1.0)

    def test_kernel_bound_violation(self):
        big = lambda a, b: 2 * GaussianKernel()(a, b)  # noqa: E731
        with pytest.raises(ValueError, match="k\\(x, x\\) <= 1"):
            fit(np.zeros(3), np.zeros(3), 0.1, FilterSpec.tikhonov(), big)

    def test_json_roundtrip(self):
        rng = np.random.default_rng(4)
        x, y, k = random_problem(rng, 15)
        model = fit(x, y, 0.01, FilterSpec.landweber(), k)
        back = KernelModel.from_json(model.to_json())
        np.testing.assert_array_equal(back.predict(x), model.predict(x))
        assert back.filter == model.filter and back.lam == model.lam


class TestEffectiveDimension:
    def test_closed_form(self):
        value = effective_dimension(PowerLawSpectrum(2.0, 1.0), 1.0)
        assert value == pytest.approx((math.pi / math.tanh(math.pi) - 1) / 2, abs=1e-9)
        assert value == pytest.approx(1.07667, abs=1e-5)

    def test_empirical(self):
        assert effective_dimension(EmpiricalSpectrum((0.2,) * 8), 0.2) == pytest.approx(4.0)

    def test_vanishes(self):
        assert effective_dimension(PowerLawSpectrum(2.0, 1.0), 1e9) < 1e-8

    def test_b_must_exceed_one(self):
        with pytest.raises(ValueError):
            PowerLawSpectrum(1.0, 1.0)

    @pytest.mark.parametrize("b, beta", [(2.0, 1.0), (1.5, 0.3), (3.0, 2.0)])
    def test_envelope_and_monotone(self, b, beta):
        lams = np.geomspace(1e-4, 1, 25)
        vals = [effective_dimension(PowerLawSpectrum(b, beta), lam) for lam in lams]
        C = powerlaw_envelope_constant(b, beta)
        assert all(v <= C * lam ** (-1 / b) for v, lam in zip(vals, lams))
        assert all(np.diff(vals) < 0)

    def test_tail_vs_long_sum(self):
        spec = PowerLawSpectrum(1.5, 1.0)
        lam = 0.01
        j = np.arange(1, 4_000_001, dtype=float)
        direct = np.sum(1 / (1 + lam * j**1.5))
        tail = 2 / (lam * math.sqrt(4e6 + 0.5))  # integral of (lam u^1.5)^-1 beyond the end
        assert effective_dimension(spec, lam) == pytest.approx(direct + tail, rel=1e-6)


class TestTable1:
    def test_examples(self):
        poly = MixingRate.polynomial(1, 1)
        assert table1_sample_sizes("ell4", 200, poly, 1, 1, 1, 1) == 21
        expo = MixingRate.exponential(1, 1, 1)
        assert table1_sample_sizes("ell3", 100, expo, 1, 1, 1, 1) == 10

    def test_missing_lambda(self):
        with pytest.raises(ValueError):
            table1_sample_sizes("ell2", 100, MixingRate.polynomial(1, 1), 1, 1, 1, 1)

    def test_independent_rate(self):
        assert table1_sample_sizes("ell1", 100, MixingRate.independent(), 5, 1, 1, 1) == 50

    @given(which=st.sampled_from(["ell1", "ell2", "ell3", "ell4"]),
           kind=st.sampled_from(["exponential", "polynomial"]),
           n=st.integers(2, 10**6), K=st.floats(0.1, 100), gamma=st.floats(0.5, 3))
    def test_nondecreasing_in_n(self, which, kind, n, K, gamma):
        rate = (MixingRate.exponential(1.0, 1.0, gamma) if kind == "exponential"
                else MixingRate.polynomial(1.0, gamma))
        kw = dict(rate=rate, K_kernel=K, R=1.0, D=1.0, Sigma=0.5, lam=0.1, Nlam=3.0)
        a = table1_sample_sizes(which, n, **kw)
        b = table1_sample_sizes(which, n + 1, **kw)
        assert 1 <= a <= b <= n + 1


class TestRatioCheck:
    def test_identical(self):
        T = np.array([0.5, 0.2, 0.1])
        assert ratio_operator_check(T, 0.1, T).ratio == pytest.approx(1.0)

    def test_large_lambda(self):
        T = np.array([0.5, 0.2, 0.1])
        Tx = np.array([0.3, 0.25, 0.0])
        assert ratio_operator_check(Tx, 1e8, T).ratio == pytest.approx(1.0, abs=1e-7)

    def test_hypothesis_flag(self):
        T = np.array([0.5, 0.2])
        assert ratio_operator_check(T, 0.1, T, ell_prime=10, eta=0.05).hypothesis_holds is False
        assert ratio_operator_check(T, 0.1, T, ell_prime=10**8, eta=0.05).hypothesis_holds is True


class TestSchedules:
    source = SourceCondition(r=0.5, D=1.0, b=2.0, beta=0.44, R=1.0, Sigma=0.3)

    def test_exponents(self):
        assert rate_exponent("exponential", 2, 0.5, 0.5) == pytest.approx(0.8)
        assert rate_exponent("polynomial", 2, 0.5, 0.5, gamma=2) == pytest.approx(2 / 6.5)
        assert 2 / 6.5 == pytest.approx(0.30769, abs=1e-5)

    @pytest.mark.parametrize("n", [10, 1000, 10**6])
    def test_lambda_at_most_one(self, n):
        s = lambda_schedule("exponential", n, self.source, MixingRate.exponential(1, 1, 1), 20.0)
        assert 0 < s.lam <= 1
        p = lambda_schedule("polynomial", n, self.source, MixingRate.polynomial(0.5, 2), 20.0)
        assert 0 < p.lam <= 1 and 1 <= p.ell_prime <= n

    def test_polynomial_lambda(self):
        p = lambda_schedule("polynomial", 4096, self.source, MixingRate.polynomial(0.5, 2), 20.0)
        assert p.lam == pytest.approx(4096 ** (-2 / 6.5))

    def test_normalization_checked(self):
        bad = SourceCondition(r=0.5, D=0.5, b=2.0, beta=0.44, R=1.0, Sigma=0.3)
        with pytest.raises(ValueError):
            lambda_schedule("exponential", 100, bad, MixingRate.exponential(1, 1, 1), 1.0)

    def test_wrong_rate_kind(self):
        with pytest.raises(ValueError):
            lambda_schedule("polynomial", 100, self.source, MixingRate.exponential(1, 1, 1), 1.0)


class TestLemma43:
    source = SourceCondition(r=0.5, D=1.0, b=2.0, beta=1.0, R=1.0, Sigma=0.3)

    def test_s_ratio(self):
        lam = 0.04
        a = error_bound_lemma43(lam, 1000, self.source, FilterSpec.tikhonov(), 0.05, s=0.0)
        b = error_bound_lemma43(lam, 1000, self.source, FilterSpec.tikhonov(), 0.05, s=0.5)
        assert a.value / b.value == pytest.approx(lam**-0.5, rel=1e-12)

    def test_large_sample_limit(self):
        lam = 0.1
        res = error_bound_lemma43(lam, 10**15, self.source, FilterSpec.tikhonov(), 0.05, s=0.5)
        assert res.value == pytest.approx(math.log(8 / 0.05) * lam**0.5 * lam**0.5, rel=1e-5)
        assert res.feasible

    def test_qualification(self):
        with pytest.raises(ValueError, match="qualification"):
            error_bound_lemma43(0.1, 100, SourceCondition(1.0, 1, 2, 1, 1, 1), FilterSpec.tikhonov(), 0.05, s=0.5)

    def test_ell_zero(self):
        assert ell_zero(0.1, 0.5, 0.05) == pytest.approx(2500 / 0.1 * math.log(160) ** 2)

    def test_balance_on_schedule(self):
        # the schedule equates D lam^r with sqrt(Sigma^2 N / (lam l)) up to constants
        src = SourceCondition(r=0.5, D=1.0, b=2.0, beta=1.0, R=1.0, Sigma=1.0)
        rate = MixingRate.exponential(1, 1, 1)
        for n in (10**4, 10**5, 10**6, 10**7):
            s = lambda_schedule("exponential", n, src, rate, 1.0)
            N = effective_dimension(PowerLawSpectrum(2.0, 1.0), s.lam)
            approx = src.D * s.lam**src.r
            var = math.sqrt(src.Sigma**2 * N / (s.lam * s.ell_prime))
            assert 0.5 <= approx / var <= 2.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 80))
def test_fit_matches_feature_route(seed, n):
    setup = MercerSetup(J=16)
    rng = np.random.default_rng(seed)
    x, y, _ = setup.sample(n, rng)
    lam = 0.05
    model = fit(x, y, lam, FilterSpec.tikhonov(), setup.kernel)
    w = setup.fit_coords(x, y, lam, FilterSpec.tikhonov())
    xt = np.linspace(0, 1, 7)
    np.testing.assert_allclose(model.predict(xt), setup.features(xt) @ w, atol=1e-10)


def test_dataset_csv(tmp_path):
    x = np.array([0.1, 0.5])
    y = np.array([-0.2, 1.0 / 3])
    save_dataset_csv(tmp_path / "d.csv", x, y)
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "x,y"
    x2, y2 = load_dataset_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(x2, x)
    np.testing.assert_array_equal(y2, y)


class TestDeviations:
    setup = MercerSetup()

    def iid_sample(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 1, n)
        half = math.sqrt(3) * self.setup.Sigma
        return x, self.setup.f_nu(x) + rng.uniform(-half, half, n)

    @pytest.mark.parametrize("lam", [0.3, 0.05, 0.01])
    def test_iid_below_levels(self, lam):
        x, y = self.iid_sample(2000, 11)
        rep = lemma41_deviations(self.setup, x, y, lam, MixingRate.independent(), eta=0.05)
        assert all(rep.holds)
        assert rep.ells == (1000,) * 4  # n/2 without dependence
        assert rep.third_op <= rep.empirical[2] and rep.fourth_op <= rep.empirical[3]

    def test_deviations_shrink(self):
        small = lemma41_deviations(self.setup, *self.iid_sample(200, 1), 0.05, MixingRate.independent())
        large = lemma41_deviations(self.setup, *self.iid_sample(20_000, 1), 0.05, MixingRate.independent())
        assert all(b < a for a, b in zip(small.empirical, large.empirical))

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            lemma41_deviations(self.setup, np.array([0.5]), np.array([0.1]), 0.1, MixingRate.independent())

    def test_ratio_on_sampled_covariance(self):
        x, _ = self.iid_sample(4000, 3)
        Phi = self.setup.features(x)
        check = ratio_operator_check(Phi.T @ Phi / len(x), 0.1, self.setup.T)
        assert check.ratio <= 2 and check.below_two
