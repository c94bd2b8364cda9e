import math

import numpy as np
import pytest
from scipy import integrate, stats

from jps.distcat import CATALOG, GFunction, MomentError, parse_distribution
from jps.strata import (
    heterogeneity,
    stratum_cdfs,
    stratum_moments,
    transformed_stratum_moments,
)

IDENTITY = GFunction.identity()


def test_uniform_h2():
    sm = stratum_moments(CATALOG["uniform"], IDENTITY, 2)
    assert np.allclose(sm.mu_r, [1 / 3, 2 / 3], atol=1e-12)
    assert np.allclose(sm.sigma2_r, [1 / 18, 1 / 18], atol=1e-12)
    assert sm.delta_g == pytest.approx(1 / 3, abs=1e-12)


def test_exponential_h2():
    sm = stratum_moments(CATALOG["exp"], IDENTITY, 2)
    assert np.allclose(sm.mu_r, [0.5, 1.5], atol=1e-12)


def test_normal_h2_against_monte_carlo():
    sm = stratum_moments(CATALOG["normal"], IDENTITY, 2)
    assert np.allclose(sm.mu_r, [-1 / math.sqrt(math.pi), 1 / math.sqrt(math.pi)], atol=1e-12)
    z = np.random.default_rng(5).standard_normal((2, 1_000_000))
    mx = z.max(axis=0)
    assert abs(mx.mean() - sm.mu_r[1]) < 3 * mx.std() / 1000


def test_against_adaptive_quadrature():
    d, H, r = CATALOG["chisq(5)"], 4, 3
    dens = lambda x: d.pdf(x) * stats.beta(r, H - r + 1).pdf(d.cdf(x))
    ref = integrate.quad(lambda x: x * dens(x), 0, np.inf, epsabs=1e-13, limit=200)[0]
    assert stratum_moments(d, IDENTITY, H).mu_r[r - 1] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("name", list(CATALOG))
@pytest.mark.parametrize("g", ["identity", "pow:2", "ind"])
def test_mean_variance_decomposition(name, g):
    d = CATALOG[name]
    gf = GFunction.indicator(float(d.quantile(0.4))) if g == "ind" else GFunction.power(2) \
        if g == "pow:2" else IDENTITY
    if not d.moment_exists(gf.x_moment_needed()):
        pytest.skip("moment needed for the decomposition does not exist")
    for H in (1, 2, 5, 14):
        sm = stratum_moments(d, gf, H)
        assert np.mean(sm.mu_r) == pytest.approx(sm.mu_g, rel=1e-9, abs=1e-12)
        total = sm.within / H + sm.between / H
        assert total == pytest.approx(sm.sigma2_g, rel=1e-9)
        assert 0.0 <= sm.delta_g < 1.0


def test_h1_is_plain_moments():
    sm = stratum_moments(CATALOG["exp"], IDENTITY, 1)
    assert sm.mu_r[0] == pytest.approx(1.0) and sm.sigma2_g == pytest.approx(1.0)
    assert sm.delta_g == 0.0


def test_missing_moment():
    with pytest.raises(MomentError):
        stratum_moments(CATALOG["t3"], GFunction.power(2), 3)


def test_heterogeneity_fast_path():
    for name in ("normal", "exp", "pareto(4)"):
        assert heterogeneity(CATALOG[name], 6) == pytest.approx(
            stratum_moments(CATALOG[name], IDENTITY, 6).delta_g, rel=1e-10)


def test_stratum_cdfs():
    assert np.allclose(stratum_cdfs(None, 2, 0.0, F=0.5), [0.75, 0.25])
    assert np.allclose(stratum_cdfs(None, 3, 0.0, F=0.5), [7 / 8, 1 / 2, 1 / 8])
    assert np.allclose(stratum_cdfs(CATALOG["normal"], 4, np.inf), 1.0)


def test_transformed_identity_matches():
    d = CATALOG["exp"]
    a = transformed_stratum_moments(d, IDENTITY, 3, "Y")
    b = stratum_moments(d, IDENTITY, 3)
    assert np.allclose(a.mu_r, b.mu_r)


def test_transformed_square_on_symmetric_uniform():
    d = parse_distribution("uniform(-1,1)")
    g = GFunction.power(2)
    y = transformed_stratum_moments(d, g, 2, "Y", reps=2_000_000, seed=1)
    x = stratum_moments(d, g, 2)
    # X^2 ~ Beta(1/2, 1); the min and max of two draws have means 1/6 and 1/2
    assert np.allclose(y.mu_r, [1 / 6, 1 / 2], atol=5 * max(y.se_mu_r))
    assert sum(m * m for m in y.mu_r) > sum(m * m for m in x.mu_r)
