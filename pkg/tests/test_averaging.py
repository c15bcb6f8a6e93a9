import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from levy_sync import (
    CoupledSpec,
    DivergenceError,
    FitError,
    MomentOrderError,
    SeedKey,
    StableLaw,
    averaged_drift_mc,
    empirical_char_function,
    estimate_invariant_measure,
    make_drift,
    mixing_rate,
    stationary_lp_moment,
)


def zero_spec(sigma1=1.0, sigma2=0.2, alpha=1.5, nu=10.0):
    return CoupledSpec(
        f=make_drift("zero"), g=make_drift("zero"),
        sigma1=sigma1, sigma2=sigma2, nu=nu, law=StableLaw(alpha=alpha),
    )


def tanh_spec(alpha=1.5):
    return CoupledSpec(
        f=make_drift("tanh", (3.0, 1.0)), g=make_drift("tanh", (2.0, 1.0)),
        sigma1=1.0, sigma2=0.2, nu=10.0, law=StableLaw(alpha=alpha),
    )


class TestInvariantMeasure:
    def test_point_mass_when_fast_channel_noiseless(self):
        spec = zero_spec(sigma1=0.5, sigma2=0.5)
        m = estimate_invariant_measure(spec, 0.0, 0.1, 2000, SeedKey(0, 0, "pm"))
        assert np.max(np.abs(m.samples)) == 0.0
        assert stationary_lp_moment(m, 1.2).value == 0.0

    def test_gaussian_stationary_variance(self):
        # stable-OU with lam = 2/eps = 20 and c = 0.4/sqrt(0.1):
        # stationary variance c^2 / lam = 1.6 / 20 = 0.08 exactly
        spec = zero_spec(alpha=2.0)
        m = estimate_invariant_measure(spec, 0.0, 0.1, 40_000, SeedKey(1, 0, "var"),
                                       n_replicas=128)
        assert np.var(m.samples) == pytest.approx(0.08, rel=0.03)

    def test_stable_stationary_cf(self):
        # closed form exp(-|u|^a c^a/(a lam)); c^a/(a lam) = 0.0843274 for
        # eps = 0.1, sigma = (1, 0.2), alpha = 1.5
        spec = zero_spec(alpha=1.5)
        m = estimate_invariant_measure(spec, 0.0, 0.1, 40_000, SeedKey(2, 0, "cf"),
                                       n_replicas=128)
        const = 0.084327404271156789
        for u in (0.5, 1.0, 2.0):
            want = np.exp(-(abs(u) ** 1.5) * const)
            got = empirical_char_function(m.samples, u)
            assert abs(got - want) < 6.0 / np.sqrt(m.samples.shape[0])

    def test_burn_in_floor_and_stationarity(self):
        spec = tanh_spec()
        with pytest.raises(ValueError):
            estimate_invariant_measure(spec, 0.0, 0.1, 2000, SeedKey(3), burn_in=0.1)
        m1 = estimate_invariant_measure(spec, 0.0, 0.1, 8000, SeedKey(3, 0, "b1"))
        m2 = estimate_invariant_measure(spec, 0.0, 0.1, 8000, SeedKey(3, 0, "b2"),
                                        burn_in=1.0)  # doubled burn-in
        e1 = stationary_lp_moment(m1, 1.2)
        e2 = stationary_lp_moment(m2, 1.2)
        assert abs(e1.value - e2.value) <= e1.band + e2.band

    def test_step_cap_enforced(self):
        with pytest.raises(ValueError):
            estimate_invariant_measure(zero_spec(), 0.0, 0.1, 2000, SeedKey(0), h=0.01)

    def test_divergent_spec_raises(self):
        # explosive bracket: f grows cubically and the noise kicks past the
        # basin, so more than 0.1% of steps go non-finite
        spec = CoupledSpec(
            f=make_drift("cubic", (0.0, -2.0)), g=make_drift("zero"),
            sigma1=60.0, sigma2=0.1, nu=2.0, law=StableLaw(alpha=1.5),
        )
        with pytest.raises(DivergenceError):
            estimate_invariant_measure(spec, 0.0, 0.5, 4000, SeedKey(4, 0, "boom"))


class TestAveragedDriftMC:
    def test_constant_drift_exact(self):
        spec = CoupledSpec(
            f=make_drift("const", (2.5,)), g=make_drift("const", (-1.0,)),
            sigma1=1.0, sigma2=0.2, nu=10.0, law=StableLaw(alpha=1.5),
        )
        m = estimate_invariant_measure(spec, 0.0, 0.1, 2000, SeedKey(5, 0, "c"))
        fbar, gbar = averaged_drift_mc(spec, 0.0, 0.1, m)
        assert fbar.value[0] == pytest.approx(2.5, rel=1e-12)
        assert gbar.value[0] == pytest.approx(-1.0, rel=1e-12)

    def test_linear_drift_symmetric_measure(self):
        # E f(x + c Y) = f(x) + f' c E[Y] = f(x) for a symmetric cloud
        spec = CoupledSpec(
            f=make_drift("linear", (1.0,)), g=make_drift("linear", (1.0,)),
            sigma1=1.0, sigma2=0.2, nu=10.0, law=StableLaw(alpha=1.5),
        )
        x = 0.7
        m = estimate_invariant_measure(spec, x, 0.1, 30_000, SeedKey(6, 0, "lin"),
                                       n_replicas=128)
        fbar, _ = averaged_drift_mc(spec, x, 0.1, m)
        assert fbar.lo[0] - 1e-9 <= -x <= fbar.hi[0] + 1e-9

    def test_wrong_frozen_state_rejected(self):
        spec = tanh_spec()
        m = estimate_invariant_measure(spec, 0.0, 0.1, 2000, SeedKey(7, 0, "x"))
        with pytest.raises(ValueError):
            averaged_drift_mc(spec, 1.0, 0.1, m)

    def test_small_eps_limit_envelope(self):
        # |F_bar(x, eps) - f(x)| <= L eps^(1/a) E|Y| + band, decreasing in eps
        spec = tanh_spec()
        x = 0.5
        fx = spec.f(np.array([x]))[0]
        gaps = []
        for j, eps in enumerate((0.1, 0.02)):
            m = estimate_invariant_measure(spec, x, eps, 20_000, SeedKey(8, j, "env"),
                                           n_replicas=128)
            fbar, _ = averaged_drift_mc(spec, x, eps, m)
            moment = stationary_lp_moment(m, 1.2)
            envelope = spec.f.lipschitz * eps ** (1 / spec.alpha) * moment.value
            gap = abs(fbar.value[0] - fx)
            assert gap <= envelope + (fbar.hi[0] - fbar.lo[0])
            gaps.append(gap)
        assert gaps[1] < gaps[0]


class TestStationaryMoment:
    def test_gaussian_absolute_moment(self):
        # for N(0, v): (E|Y|^p)^(1/p) = ((2v)^(p/2) Gamma((p+1)/2)/sqrt(pi))^(1/p)
        spec = zero_spec(alpha=2.0)
        m = estimate_invariant_measure(spec, 0.0, 0.1, 40_000, SeedKey(9, 0, "gm"),
                                       n_replicas=128)
        p, v = 1.5, 0.08
        want = ((2 * v) ** (p / 2) * gamma_fn((p + 1) / 2) / np.sqrt(np.pi)) ** (1 / p)
        assert stationary_lp_moment(m, p).value == pytest.approx(want, rel=0.03)

    def test_rejects_bad_order(self):
        spec = zero_spec(alpha=1.5)
        m = estimate_invariant_measure(spec, 0.0, 0.1, 2000, SeedKey(10, 0, "p"))
        for bad in (1.5, 1.7, 1.0):
            with pytest.raises(MomentOrderError):
                stationary_lp_moment(m, bad)

    def test_uniform_over_epsilon(self):
        # Lemma-9 style: the fast stationary norm stays in a common band
        spec = tanh_spec()
        vals = []
        for j, eps in enumerate((0.1, 0.05, 0.02)):
            m = estimate_invariant_measure(spec, 0.0, eps, 8000, SeedKey(11, j, "u"))
            vals.append(stationary_lp_moment(m, 1.2).value)
        assert max(vals) <= 2.0 * min(vals)


class TestMixingRate:
    def test_pure_relaxation_rate(self):
        for eps in (0.1, 0.05):
            est = mixing_rate(
                zero_spec(), 0.0, eps, 1.0, -1.0, 1.2,
                n_paths=16, t_grid=np.linspace(0.1 * eps, eps, 10), master_seed=12,
            )
            assert est.rate == pytest.approx(2.0 / eps, rel=0.01)
            assert est.fit_residual < 1e-6

    def test_identical_starts_sentinel(self):
        est = mixing_rate(zero_spec(), 0.0, 0.1, 1.0, 1.0, 1.2, 16, [0.05])
        assert est.rate == np.inf

    def test_lipschitz_perturbation_envelope(self):
        # f = +0.8/eps * x lowers the exact rate to 2/eps - 0.4/eps
        eps = 0.1
        spec = CoupledSpec(
            f=make_drift("linear", (-0.8 / eps,)), g=make_drift("zero"),
            sigma1=1.0, sigma2=0.2, nu=1 / eps, law=StableLaw(alpha=1.5),
        )
        est = mixing_rate(spec, 0.0, eps, 1.0, -1.0, 1.2, 16,
                          np.linspace(0.1 * eps, eps, 10), master_seed=13)
        base = 2.0 / eps
        assert est.rate == pytest.approx(0.8 * base, rel=0.02)
        halfwidth = 0.5 * (spec.f.lipschitz + 0.0)
        assert base - halfwidth - 0.01 * base <= est.rate <= base + halfwidth + 0.01 * base

    def test_expanding_bracket_fit_error(self):
        # perturbation strong enough to flip the sign of the contraction
        eps = 0.1
        spec = CoupledSpec(
            f=make_drift("linear", (-6.0 / eps,)), g=make_drift("zero"),
            sigma1=1.0, sigma2=0.2, nu=1 / eps, law=StableLaw(alpha=1.5),
        )
        with pytest.raises(FitError):
            mixing_rate(spec, 0.0, eps, 1.0, -1.0, 1.2, 16,
                        np.linspace(0.1 * eps, eps, 10), master_seed=14)

    def test_rejects_bad_order(self):
        with pytest.raises(MomentOrderError):
            mixing_rate(zero_spec(), 0.0, 0.1, 1.0, -1.0, 1.6, 16, [0.05])


def test_measure_csv_export():
    import io

    spec = zero_spec(sigma1=0.5, sigma2=0.5)
    m = estimate_invariant_measure(spec, 0.0, 0.1, 1500, SeedKey(30, 0, "csv"))
    buf = io.StringIO()
    m.to_csv(buf)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == m.samples.shape[0]
    assert float(lines[0]) == 0.0
