import numpy as np
import pytest

from levy_sync import (
    Convention,
    LevyConstants,
    SeedKey,
    StableLaw,
    c1_constant,
    char_exponent,
    empirical_char_function,
    increment,
    levy_measure_constant,
    make_stream,
    sample_standard,
)

mpmath = pytest.importorskip("mpmath")


def gamma_oracle_c1(n, alpha):
    mpmath.mp.dps = 40
    a = mpmath.mpf(repr(alpha))
    val = (
        mpmath.power(mpmath.pi, -0.5)
        * mpmath.gamma((1 + a) / 2)
        * mpmath.gamma(mpmath.mpf(n) / 2)
        / mpmath.gamma((n + a) / 2)
    )
    return float(val)


def gamma_oracle_levy(n, alpha):
    mpmath.mp.dps = 40
    a = mpmath.mpf(repr(alpha))
    val = (
        a
        * mpmath.gamma((n + a) / 2)
        / (mpmath.power(2, 1 - a) * mpmath.power(mpmath.pi, mpmath.mpf(n) / 2) * mpmath.gamma(1 - a / 2))
    )
    return float(val)


class TestConstants:
    def test_c1_unit_cases(self):
        assert c1_constant(1, 1.0) == pytest.approx(1.0, abs=1e-14)
        # alpha -> 2- limit, and the admitted alpha = 2 endpoint
        assert c1_constant(1, 1.999999999) == pytest.approx(1.0, abs=1e-8)
        assert c1_constant(1, 2.0) == pytest.approx(1.0, abs=1e-14)

    def test_c1_pinned(self):
        # frozen from the arbitrary-precision Gamma oracle
        assert c1_constant(2, 1.0) == pytest.approx(0.63661977236758134, rel=1e-13)
        assert c1_constant(3, 1.5) == pytest.approx(0.4, rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0, 1.2, 1.5, 1.8, 1.99])
    def test_c1_matches_gamma_oracle(self, n, alpha):
        assert c1_constant(n, alpha) == pytest.approx(gamma_oracle_c1(n, alpha), rel=1e-12)
        assert c1_constant(n, alpha) > 0.0

    def test_levy_constant_pinned(self):
        assert levy_measure_constant(1, 1.0) == pytest.approx(1.0 / np.pi, rel=1e-13)
        assert levy_measure_constant(1, 1.5) == pytest.approx(0.29920671030107451, rel=1e-13)
        assert levy_measure_constant(3, 0.5) == pytest.approx(0.047620226950680727, rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 4])
    @pytest.mark.parametrize("alpha", [0.5, 1.2, 1.9])
    def test_levy_constant_matches_gamma_oracle(self, n, alpha):
        assert levy_measure_constant(n, alpha) == pytest.approx(
            gamma_oracle_levy(n, alpha), rel=1e-12
        )
        assert levy_measure_constant(n, alpha) > 0.0

    @pytest.mark.parametrize("bad", [0.0, -0.5, 2.5])
    def test_domain_errors(self, bad):
        with pytest.raises(ValueError):
            c1_constant(1, bad)
        with pytest.raises(ValueError):
            levy_measure_constant(1, bad)
        with pytest.raises(ValueError):
            c1_constant(0, 1.0)

    def test_levy_constant_rejects_alpha_two(self):
        with pytest.raises(ValueError):
            levy_measure_constant(1, 2.0)

    def test_levy_constants_bundle(self):
        lc = LevyConstants.for_law(2, 1.2)
        assert lc.c1 == pytest.approx(gamma_oracle_c1(2, 1.2), rel=1e-12)
        assert lc.c_levy == pytest.approx(0.17674478557428508, rel=1e-13)


class TestStableLaw:
    def test_invariants(self):
        with pytest.raises(ValueError):
            StableLaw(alpha=1.0)
        with pytest.raises(ValueError):
            StableLaw(alpha=2.1)
        with pytest.raises(ValueError):
            StableLaw(alpha=1.5, scale=-1.0)
        with pytest.raises(ValueError):
            StableLaw(alpha=1.5, dim=0)

    def test_unit_scale_conventions(self):
        law = StableLaw(alpha=1.5, dim=1, scale=2.0)
        assert law.unit_scale() == 2.0
        paper = StableLaw(alpha=1.5, dim=1, scale=2.0, convention=Convention.PAPER_C1)
        c1 = c1_constant(1, 1.5)
        assert paper.unit_scale() == pytest.approx(2.0 * c1 ** (1 / 1.5), rel=1e-14)


class TestCharExponent:
    def test_zero_frequency(self):
        law = StableLaw(alpha=1.5, scale=1.0)
        assert char_exponent(law, 0.0) == 0.0

    def test_gaussian_case(self):
        law = StableLaw(alpha=2.0, scale=1.0)
        assert char_exponent(law, 3.0) == pytest.approx(-9.0, rel=1e-14)

    def test_paper_convention(self):
        # C1(1, 2) = 1, so the two conventions agree at alpha = 2 in dim 1
        unit = StableLaw(alpha=2.0, scale=1.0)
        paper = StableLaw(alpha=2.0, scale=1.0, convention=Convention.PAPER_C1)
        assert char_exponent(paper, 2.0) == pytest.approx(char_exponent(unit, 2.0), rel=1e-12)
        paper15 = StableLaw(alpha=1.5, scale=1.0, convention=Convention.PAPER_C1)
        want = -c1_constant(1, 1.5) * 2.0**1.5
        assert char_exponent(paper15, 2.0) == pytest.approx(want, rel=1e-13)

    def test_nonpositive(self):
        rng = np.random.default_rng(0)
        law = StableLaw(alpha=1.3, dim=3, scale=0.7)
        for _ in range(100):
            u = rng.normal(size=3) * 3
            assert char_exponent(law, u) <= 0.0


class TestSampler:
    def test_gaussian_variance(self):
        # alpha = 2 reduction: exp(-u^2) is a Gaussian of variance 2
        law = StableLaw(alpha=2.0)
        x = sample_standard(law, make_stream(42, 0, "var"), size=1_000_000)
        assert np.var(x) == pytest.approx(2.0, abs=0.02)

    def test_empirical_cf(self):
        law = StableLaw(alpha=1.5)
        x = sample_standard(law, make_stream(43, 0, "ecf"), size=1_000_000)
        val = empirical_char_function(x, 1.0)
        assert abs(val - np.exp(-1.0)) < 0.005
        assert abs(val.imag) < 0.005

    def test_symmetry_median(self):
        law = StableLaw(alpha=1.2)
        x = sample_standard(law, make_stream(44, 0, "median"), size=1_000_000)
        assert abs(np.median(x)) <= 0.01

    def test_scale_zero_degenerate(self):
        law = StableLaw(alpha=1.5, scale=0.0)
        x = sample_standard(law, make_stream(1, 0, "zero"), size=100)
        assert np.all(x == 0.0)

    def test_determinism(self):
        law = StableLaw(alpha=1.7, dim=2)
        a = sample_standard(law, make_stream(7, 3, "tag"), size=1000)
        b = sample_standard(law, make_stream(7, 3, "tag"), size=1000)
        assert np.array_equal(a, b)

    def test_streams_independent(self):
        law = StableLaw(alpha=1.7)
        a = sample_standard(law, make_stream(7, 0, "tag"), size=100)
        b = sample_standard(law, make_stream(7, 1, "tag"), size=100)
        c = sample_standard(law, make_stream(7, 0, "other"), size=100)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_chunked_draws_match_single_call(self):
        # chunk-transparent consumption: engine noise == one-shot noise
        law = StableLaw(alpha=1.5)
        whole = sample_standard(law, make_stream(9, 0, "chunk"), size=1000)
        rng = make_stream(9, 0, "chunk")
        parts = np.concatenate(
            [sample_standard(law, rng, size=n) for n in (100, 400, 500)]
        )
        assert np.array_equal(whole, parts)

    def test_paper_convention_sampling(self):
        law = StableLaw(alpha=1.5, convention=Convention.PAPER_C1)
        x = sample_standard(law, make_stream(5, 0, "paper"), size=200_000)
        u = 1.0
        want = np.exp(char_exponent(law, u))
        assert abs(empirical_char_function(x, u) - want) < 4.0 / np.sqrt(x.shape[0]) * 2

    def test_multivariate_coordinates_independent(self):
        law = StableLaw(alpha=1.6, dim=2)
        x = sample_standard(law, make_stream(6, 0, "multi"), size=400_000)
        u = np.array([0.7, -1.1])
        want = np.exp(char_exponent(law, u))
        assert abs(empirical_char_function(x, u) - want) < 0.01


class TestIncrement:
    def test_rejects_bad_dt(self):
        law = StableLaw(alpha=1.5)
        with pytest.raises(ValueError):
            increment(law, 0.0, make_stream(0))
        with pytest.raises(ValueError):
            increment(law, -1.0, make_stream(0))

    def test_self_similar_scaling_exact(self):
        # dt^(1/alpha) times the standard draw from the same stream position
        law = StableLaw(alpha=2.0)
        inc = increment(law, 1e-4, make_stream(3, 0, "inc"), size=64)
        std = sample_standard(law, make_stream(3, 0, "inc"), size=64)
        assert np.array_equal(inc, 0.01 * std)

    @pytest.mark.parametrize("dt", [0.1, 0.01])
    def test_self_similarity_ks(self, dt):
        from scipy.stats import ks_2samp

        law = StableLaw(alpha=1.5)
        n = 100_000
        inc = increment(law, dt, make_stream(10, 0, f"ks{dt}"), size=n).ravel()
        ref = dt ** (1 / 1.5) * sample_standard(
            law, make_stream(11, 0, f"ks-ref{dt}"), size=n
        ).ravel()
        assert ks_2samp(inc, ref).pvalue >= 0.01


class TestEmpiricalCF:
    def test_point_mass(self):
        val = empirical_char_function(np.zeros((3, 1)), 5.0)
        assert val == pytest.approx(1.0 + 0.0j)

    def test_symmetric_pair_is_real(self):
        x = np.array([[1.7], [-1.7]])
        val = empirical_char_function(x, 0.9)
        assert val.imag == pytest.approx(0.0, abs=1e-15)
        assert val.real == pytest.approx(np.cos(0.9 * 1.7), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_char_function([], 1.0)

    def test_heavy_tail_modulus(self):
        law = StableLaw(alpha=1.2)
        x = sample_standard(law, make_stream(12, 0, "mod"), size=1_000_000)
        val = empirical_char_function(x, 2.0)
        assert abs(abs(val) - np.exp(-(2.0**1.2))) < 0.005


def test_seed_key_stream_roundtrip():
    key = SeedKey(123, 4, "noise")
    a = key.stream().random(8)
    b = SeedKey(123, 4, "noise").stream().random(8)
    assert np.array_equal(a, b)
