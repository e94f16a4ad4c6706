"""Long-time profile analytics and Wasserstein-1 comparisons."""
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import wasserstein_distance

from rbmsim.errors import DomainError, EmptySample, OutOfRange
from rbmsim.laws import EmpiricalLaw, ExponentialLaw
from rbmsim.profiles import (
    ExponentialProfile,
    SelfSimilarProfile,
    gamma_alpha,
    solve_c_alpha,
    wasserstein1,
    wasserstein1_se,
)


def normalization_oracle(alpha, c):
    val, err = quad(lambda x: c * np.exp(-alpha * c * x - 0.5 * x * x),
                    0, np.inf, epsabs=1e-12, limit=200)
    assert err < 5e-8
    return val


def test_c_zero_closed_form():
    assert abs(solve_c_alpha(0.0) - np.sqrt(2 / np.pi)) <= 1e-10
    assert abs(solve_c_alpha(0.0) - 0.797884560803) <= 1e-10


def test_c_half_normalizes():
    c = solve_c_alpha(0.5)
    assert abs(c - 1.224006361925) <= 1e-9
    assert abs(normalization_oracle(0.5, c) - 1.0) <= 1e-8


def test_c_near_one_large_but_finite():
    c = solve_c_alpha(0.999)
    assert 30 < c < 40
    assert abs(normalization_oracle(0.999, c) - 1.0) <= 1e-8


def test_c_alpha_domain():
    with pytest.raises(OutOfRange):
        solve_c_alpha(1.0)
    with pytest.raises(OutOfRange):
        solve_c_alpha(-0.1)


def test_gamma_bounds_and_monotone():
    alphas = np.linspace(0.005, 0.995, 99)
    g = np.array([gamma_alpha(a) for a in alphas])
    assert np.all(g <= 1.0 + 1e-12)
    assert np.all(g >= 2 / np.pi - 1e-12)
    assert np.all(np.diff(g) > 0)


def test_gamma_limits():
    assert abs(gamma_alpha(0.01) - 2 / np.pi) <= 0.02
    assert abs(gamma_alpha(0.99) - 1.0) <= 0.03


def test_profile_density_integrates_to_one():
    for alpha in (0.0, 0.3, 0.8):
        p = SelfSimilarProfile.for_alpha(alpha)
        val, _ = quad(p.density, 0, np.inf, epsabs=1e-12, limit=200)
        assert abs(val - 1.0) <= 1e-9


def test_profile_cdf_matches_quadrature():
    p = SelfSimilarProfile.for_alpha(0.5)
    for x in (0.1, 0.5, 1.0, 2.5):
        val, _ = quad(p.density, 0, x, epsabs=1e-12)
        assert abs(p.cdf(x) - val) <= 1e-10
    assert p.cdf(0.0) == 0.0
    assert abs(p.cdf(50.0) - 1.0) <= 1e-12


def test_profile_quantile_roundtrip():
    p = SelfSimilarProfile.for_alpha(0.4)
    u = np.linspace(0.001, 0.999, 57)
    x = p.quantile(u)
    assert np.max(np.abs(p.cdf(x) - u)) <= 1e-9
    with pytest.raises(DomainError):
        p.quantile(1.0)


def test_profile_mean_closed_form():
    # integral of x * c * exp(-c a x - x^2/2) equals c (1 - alpha) for the
    # normalizing c; check against quadrature
    for alpha in (0.0, 0.5, 0.9):
        p = SelfSimilarProfile.for_alpha(alpha)
        val, _ = quad(lambda x: x * p.density(x), 0, np.inf, epsabs=1e-12, limit=200)
        assert abs(p.mean - val) <= 1e-9
        assert abs(p.mean - p.c * (1 - alpha)) <= 1e-15


def test_profile_sample_mean():
    p = SelfSimilarProfile.for_alpha(0.5)
    rng = np.random.default_rng(9)
    xs = p.sample(rng, 100_000)
    assert np.all(xs >= 0)
    se = xs.std() / np.sqrt(len(xs))
    assert abs(xs.mean() - p.mean) <= 3 * se


def test_unit_mean_rescaling_identity():
    # after dividing by its mean, the density becomes
    # gamma * exp(-gamma a y - gamma (1-a) y^2 / 2) with gamma = c^2 (1-a)
    for alpha in (0.2, 0.6):
        p = SelfSimilarProfile.for_alpha(alpha)
        g = gamma_alpha(alpha)
        m = p.mean
        y = np.linspace(0.0, 10.0, 401)
        lhs = m * p.density(m * y)
        rhs = g * np.exp(-g * alpha * y - 0.5 * g * (1 - alpha) * y * y)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_exponential_profile_basics():
    p = ExponentialProfile(rate=1.0)
    assert p.ell(2.0) == pytest.approx(1.0)
    assert p.density(0.0) == pytest.approx(1.0)
    assert p.cdf(np.log(2)) == pytest.approx(0.5)
    assert abs(p.quantile(0.5) - np.log(2)) <= 1e-12


# -- Wasserstein-1 ----------------------------------------------------------------

def test_w1_exponential_pair():
    # |1 - 1/2| * mean of Exp(1) scaled: int |F1^-1 - F2^-1| = 1/2
    d = wasserstein1(ExponentialLaw(1.0), ExponentialLaw(2.0))
    assert abs(d - 0.5) <= 1e-8


def test_w1_translation_exact():
    a = EmpiricalLaw.from_samples([0.0, 1.0, 2.0, 5.0])
    b = EmpiricalLaw.from_samples([0.25, 1.25, 2.25, 5.25])
    assert wasserstein1(a, b) == pytest.approx(0.25, abs=1e-15)


def test_w1_metric_axioms_on_samples():
    rng = np.random.default_rng(4)
    laws = [EmpiricalLaw.from_samples(rng.exponential(1.0, n)) for n in (40, 57, 90)]
    a, b, c = laws
    assert wasserstein1(a, a) == 0.0
    dab = wasserstein1(a, b)
    assert dab == pytest.approx(wasserstein1(b, a), abs=1e-14)
    assert dab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-12


def test_w1_unequal_sizes_against_scipy():
    rng = np.random.default_rng(11)
    for na, nb in ((10, 17), (100, 33), (64, 64)):
        xa = rng.exponential(1.0, na)
        xb = rng.gamma(2.0, 1.0, nb)
        mine = wasserstein1(EmpiricalLaw.from_samples(xa), EmpiricalLaw.from_samples(xb))
        ref = wasserstein_distance(xa, xb)
        assert abs(mine - ref) <= 1e-12


def test_w1_empirical_vs_law_shrinks():
    p = SelfSimilarProfile.for_alpha(0.5)
    rng = np.random.default_rng(2)
    small = EmpiricalLaw.from_samples(p.sample(rng, 200))
    big = EmpiricalLaw.from_samples(p.sample(rng, 50_000))
    assert wasserstein1(big, p) < wasserstein1(small, p)
    assert wasserstein1(big, p) < 0.02


def test_w1_standard_error_reported():
    rng = np.random.default_rng(6)
    xs = EmpiricalLaw.from_samples(rng.exponential(1.0, 5000))
    d, se = wasserstein1_se(xs, ExponentialLaw(1.0))
    assert 0 < se < d + 0.05
    assert d < 0.05


def test_empty_sample_rejected():
    with pytest.raises(EmptySample):
        EmpiricalLaw.from_samples([])
