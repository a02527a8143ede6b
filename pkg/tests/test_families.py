"""Distribution-family operations: densities, CDFs, quantiles, moments,
sampling, and the nonnegative-integer discretization."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from uncertain_events.errors import DegenerateTruncationError, ParameterError
from uncertain_events.families import (
    EULER_GAMMA,
    DistributionSpec,
    FamilyId,
    cdf,
    density,
    discretize,
    mean,
    param_role_slots,
    quantile,
    sample,
    variance,
)
from uncertain_events.rng import substream

GUMBEL01 = DistributionSpec(FamilyId("gumbel"), (0.0, 1.0))


def gumbel_mix(mu, beta, w, anchor, shift=None):
    if shift is None:
        return DistributionSpec(FamilyId("gumbel", mixture=True),
                                (mu, beta, w), anchor=anchor)
    return DistributionSpec(FamilyId("gumbel", mixture=True, shifted=True),
                            (mu, beta, w, shift), anchor=anchor)


def random_spec(rng, base, mixture=False, shifted=False):
    params = {
        "gumbel": lambda: (rng.uniform(0, 30), rng.uniform(0.5, 8)),
        "normal": lambda: (rng.uniform(0, 30), rng.uniform(0.5, 8)),
        "lognormal": lambda: (rng.uniform(-1, 3), rng.uniform(0.2, 1.2)),
        "poisson": lambda: (rng.uniform(0.5, 40),),
        "negbin": lambda: (rng.uniform(0.5, 40), rng.uniform(0.5, 20)),
    }[base]()
    theta = list(params)
    anchor = None
    if mixture:
        theta.append(rng.uniform(0, 1))
        anchor = int(rng.integers(0, 50))
    if shifted:
        shift = rng.uniform(-3, 3)
        theta.append(round(shift) if base in ("poisson", "negbin") else shift)
    return DistributionSpec(FamilyId(base, mixture, shifted), theta, anchor=anchor)


ALL_BASES = ("gumbel", "normal", "lognormal", "poisson", "negbin")


class TestFamilyId:
    def test_parameter_counts(self):
        assert FamilyId("poisson").n_params == 1
        assert FamilyId("poisson", mixture=True).n_params == 2
        assert FamilyId("gumbel", mixture=True, shifted=True).n_params == 4
        for base in ALL_BASES:
            expected = 1 if base == "poisson" else 2
            assert FamilyId(base).n_params == expected

    def test_label_round_trip(self):
        for base in ALL_BASES:
            for mixture in (False, True):
                for shifted in (False, True):
                    fam = FamilyId(base, mixture, shifted)
                    assert FamilyId.from_label(fam.label()) == fam

    def test_unknown_base_rejected(self):
        with pytest.raises(ParameterError):
            FamilyId("weibull")

    def test_role_slots(self):
        fam = FamilyId("poisson", mixture=True)
        assert param_role_slots(fam, (4.0, 0.5)) == [4.0, None, 0.5, None]
        fam = FamilyId("gumbel", shifted=True)
        assert param_role_slots(fam, (1.0, 2.0, -1.0)) == [1.0, 2.0, None, -1.0]


class TestSpecValidation:
    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ParameterError):
            DistributionSpec(FamilyId("gumbel"), (0.0, 0.0))
        with pytest.raises(ParameterError):
            DistributionSpec(FamilyId("normal"), (0.0, -1.0))

    def test_weight_domain(self):
        with pytest.raises(ParameterError):
            gumbel_mix(0.0, 1.0, 1.5, anchor=3)

    def test_mixture_needs_anchor(self):
        with pytest.raises(ParameterError):
            DistributionSpec(FamilyId("gumbel", mixture=True), (0.0, 1.0, 0.5))

    def test_discrete_shift_must_be_integral(self):
        with pytest.raises(ParameterError):
            DistributionSpec(FamilyId("poisson", shifted=True), (4.0, 0.5))
        DistributionSpec(FamilyId("poisson", shifted=True), (4.0, 2.0))

    def test_wrong_length_rejected(self):
        with pytest.raises(ParameterError):
            DistributionSpec(FamilyId("poisson"), (4.0, 1.0))


class TestDensity:
    def test_standard_gumbel_mode(self):
        assert density(GUMBEL01, 0.0) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_standard_normal(self):
        spec = DistributionSpec(FamilyId("normal"), (0.0, 1.0))
        assert density(spec, 0.0) == pytest.approx(0.3989422804014327, abs=1e-12)

    def test_pure_point_mixture_has_zero_continuous_density(self):
        spec = gumbel_mix(2.0, 1.0, 1.0, anchor=5)
        for x in (-1.0, 0.0, 2.0, 5.0, 17.3):
            assert density(spec, x) == 0.0

    def test_continuous_component_integrates_to_one_minus_w(self):
        rng = np.random.default_rng(7)
        for base in ("gumbel", "normal", "lognormal"):
            for mixture in (False, True):
                spec = random_spec(rng, base, mixture=mixture)
                p1, p2 = spec.base_theta
                if base == "lognormal":
                    lo, hi = 0.0, float(np.exp(p1 + 40 * p2))
                    bulk = [float(np.exp(p1 + k * p2)) for k in (-2, 0, 2, 5)]
                else:
                    lo, hi = p1 - 40 * p2, p1 + 40 * p2
                    bulk = [p1 - 3 * p2, p1, p1 + 3 * p2, p1 + 10 * p2]
                total, _ = quad(lambda x: density(spec, x), lo, hi,
                                points=bulk, limit=300)
                assert total == pytest.approx(1.0 - spec.point_weight, abs=1e-6)

    def test_discrete_component_sums_to_one_minus_w(self):
        rng = np.random.default_rng(8)
        for base in ("poisson", "negbin"):
            spec = random_spec(rng, base, mixture=True)
            ks = np.arange(0, 4000)
            assert density(spec, ks).sum() == pytest.approx(
                1.0 - spec.point_weight, abs=1e-9)


class TestCdf:
    def test_standard_gumbel_at_location(self):
        assert cdf(GUMBEL01, 0.0) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_limit_is_one(self):
        rng = np.random.default_rng(11)
        for base in ALL_BASES:
            spec = random_spec(rng, base, mixture=True)
            assert cdf(spec, 1e9) == pytest.approx(1.0, abs=1e-12)

    def test_mixture_jump_at_anchor(self):
        spec = gumbel_mix(0.0, 1.0, 0.5, anchor=0)
        expected = 0.5 + 0.5 * math.exp(-1)
        assert cdf(spec, 0.0) == pytest.approx(expected, abs=1e-12)
        assert cdf(spec, -1e-9) == pytest.approx(0.5 * cdf(GUMBEL01, -1e-9), rel=1e-9)

    def test_monotone_nondecreasing(self):
        rng = np.random.default_rng(12)
        for base in ALL_BASES:
            spec = random_spec(rng, base, mixture=True)
            xs = np.sort(rng.uniform(-5, 80, size=200))
            values = cdf(spec, xs)
            assert np.all(np.diff(values) >= -1e-15)


class TestQuantile:
    def test_gumbel_closed_form(self):
        assert quantile(GUMBEL01, math.exp(-1)) == pytest.approx(0.0, abs=1e-12)
        spec = DistributionSpec(FamilyId("gumbel"), (3.0, 2.0))
        median = 3.0 - 2.0 * math.log(math.log(2.0))
        assert quantile(spec, 0.5) == pytest.approx(median, abs=1e-10)
        assert cdf(spec, quantile(spec, 0.5)) == pytest.approx(0.5, abs=1e-12)

    def test_pure_point_mixture(self):
        spec = gumbel_mix(2.0, 1.0, 1.0, anchor=7)
        for p in (0.01, 0.5, 0.99):
            assert quantile(spec, p) == 7.0

    def test_domain_error(self):
        for p in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(ParameterError):
                quantile(GUMBEL01, p)

    def test_round_trip_continuous(self):
        rng = np.random.default_rng(13)
        for base in ("gumbel", "normal", "lognormal"):
            spec = random_spec(rng, base)
            xs = quantile(spec, 0.05), quantile(spec, 0.4), quantile(spec, 0.95)
            for x in xs:
                assert quantile(spec, cdf(spec, x)) == pytest.approx(x, abs=1e-6)

    def test_generalized_inverse_of_mixture(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            spec = random_spec(rng, "gumbel", mixture=True)
            for p in rng.uniform(0.01, 0.99, size=5):
                x = quantile(spec, p)
                assert cdf(spec, x) >= p - 1e-9
                assert cdf(spec, x - 1e-6) < p + 1e-9 or x == spec.anchor

    def test_shifted_quantile(self):
        base = DistributionSpec(FamilyId("gumbel"), (3.0, 2.0))
        shifted = DistributionSpec(FamilyId("gumbel", shifted=True), (3.0, 2.0, 5.0))
        assert quantile(shifted, 0.3) == pytest.approx(quantile(base, 0.3) + 5.0)


class TestMean:
    def test_standard_gumbel(self):
        assert mean(GUMBEL01) == pytest.approx(EULER_GAMMA, abs=1e-12)

    def test_poisson(self):
        assert mean(DistributionSpec(FamilyId("poisson"), (4.0,))) == 4.0

    def test_table2_style_mixture(self):
        # hand-computed: w*1 + (1-w)*(mu + gamma*beta) for the y=1 parameters
        spec = gumbel_mix(2.4514, 1.3087, 0.4674, anchor=1)
        assert mean(spec) == pytest.approx(2.1753, abs=1e-3)

    def test_mixture_formula_all_bases(self):
        rng = np.random.default_rng(15)
        for base in ALL_BASES:
            spec = random_spec(rng, base, mixture=True, shifted=True)
            w, s = spec.point_weight, spec.shift
            plain = DistributionSpec(FamilyId(base), spec.base_theta)
            expected = w * spec.anchor + (1 - w) * (mean(plain) + s)
            assert mean(spec) == pytest.approx(expected, rel=1e-12)


class TestSample:
    def test_degenerate_mixture(self):
        spec = gumbel_mix(2.0, 1.0, 1.0, anchor=13)
        draws = sample(spec, substream(1, "t"), 5)
        assert list(draws) == [13.0] * 5

    def test_seeded_determinism(self):
        spec = random_spec(np.random.default_rng(3), "negbin", mixture=True)
        a = sample(spec, substream(42, "x"), 1000)
        b = sample(spec, substream(42, "x"), 1000)
        assert np.array_equal(a, b)

    def test_gumbel_mean_statistical(self):
        n = 1_000_000
        draws = sample(GUMBEL01, substream(7, "gumbel"), n)
        se = draws.std() / math.sqrt(n)
        assert abs(draws.mean() - EULER_GAMMA) < 3 * se

    def test_empirical_mean_matches_analytic_all_families(self):
        rng = np.random.default_rng(16)
        n = 1_000_000
        for index, base in enumerate(ALL_BASES):
            for mixture in (False, True):
                spec = random_spec(rng, base, mixture=mixture)
                draws = sample(spec, substream(100 + index, base, mixture), n)
                se = draws.std() / math.sqrt(n)
                assert abs(draws.mean() - mean(spec)) < 4 * se
                assert abs(draws.std() ** 2 - variance(spec)) / variance(spec) < 0.05


class TestDiscretize:
    def test_poisson_matches_native_pmf(self):
        from scipy.stats import poisson

        spec = DistributionSpec(FamilyId("poisson"), (6.5,))
        view = discretize(spec)
        ks = np.arange(0, 60)
        assert np.allclose(view.pmf(ks), poisson.pmf(ks, 6.5), atol=1e-12)
        assert view.normalizer == pytest.approx(1.0, abs=1e-12)

    def test_pmf_sums_to_one(self):
        spec = DistributionSpec(FamilyId("gumbel"), (10.0, 1.0))
        total = discretize(spec).pmf(np.arange(0, 1001)).sum()
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_pmf_sums_to_one_random_specs(self):
        rng = np.random.default_rng(17)
        for base in ALL_BASES:
            spec = random_spec(rng, base, mixture=True, shifted=True)
            total = discretize(spec).pmf(np.arange(0, 5001)).sum()
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_truncation_only_removes_negative_mass(self):
        # predicted parameters at a reported value of zero
        spec = gumbel_mix(0.8076, 0.7356, 0.4763, anchor=0)
        assert mean(spec) == pytest.approx(0.6453, abs=1e-3)
        view = discretize(spec)
        assert view.mean() >= mean(spec)

    def test_point_mass_dominates_anchor_pmf(self):
        rng = np.random.default_rng(18)
        for _ in range(10):
            spec = random_spec(rng, "gumbel", mixture=True)
            view = discretize(spec)
            assert view.pmf(spec.anchor) >= spec.point_weight / view.normalizer - 1e-12

    def test_degenerate_truncation_raises(self):
        spec = DistributionSpec(FamilyId("normal"), (-1000.0, 1.0))
        with pytest.raises(DegenerateTruncationError):
            discretize(spec)

    def test_view_mean_matches_manual_expectation(self):
        spec = gumbel_mix(15.0, 3.0, 0.4, anchor=13)
        view = discretize(spec)
        ks = np.arange(0, 4000)
        manual = float((ks * view.pmf(ks)).sum())
        assert view.mean() == pytest.approx(manual, abs=1e-9)

    def test_quantile_is_generalized_inverse(self):
        rng = np.random.default_rng(19)
        for base in ALL_BASES:
            spec = random_spec(rng, base, mixture=True)
            view = discretize(spec)
            qs = rng.uniform(0, 1, size=200)
            ks = view.quantile(qs)
            kmax = int(ks.max()) + 2
            grid = np.arange(0, kmax + 1)
            cum = np.cumsum(view.pmf(grid))
            for q, k in zip(qs, ks):
                assert cum[k] >= q - 1e-12
                if k > 0:
                    assert cum[k - 1] < q + 1e-12

    def test_integer_draws_match_pmf(self):
        spec = gumbel_mix(15.0, 3.0, 0.4, anchor=13)
        view = discretize(spec)
        draws = view.sample(substream(5, "disc"), 200_000)
        ks = np.arange(0, draws.max() + 1)
        observed = np.bincount(draws) / draws.size
        tv = 0.5 * np.abs(observed - view.pmf(ks)).sum()
        assert tv < 0.005


class TestShiftNeutrality:
    def test_zero_shift_equals_unshifted(self):
        rng = np.random.default_rng(20)
        for base in ALL_BASES:
            plain = random_spec(rng, base)
            shifted = DistributionSpec(FamilyId(base, shifted=True),
                                       plain.theta + (0.0,))
            xs = np.linspace(-5, 60, 40)
            assert np.allclose(cdf(plain, xs), cdf(shifted, xs), atol=1e-12)
            assert np.allclose(density(plain, xs), density(shifted, xs), atol=1e-12)
            assert mean(plain) == pytest.approx(mean(shifted), abs=1e-12)
