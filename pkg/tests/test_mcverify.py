import numpy as np
import pytest

from jps.coeffs import coefficient_set
from jps.design import Ranker
from jps.distcat import CATALOG, GFunction
from jps.estimators import theoretical_variance
from jps.mcverify import (
    mc_coefficient,
    mc_estimator_stats,
    mc_normality,
    mc_scheme_equivalence,
    run_suite,
    simulate_estimates,
    summarize,
    suite_moments,
)
from jps.strata import stratum_moments

IDENTITY = GFunction.identity()
UNIFORM = CATALOG["uniform"]


def test_summarize():
    rep = summarize(np.array([1.0, 2.0, 3.0, 4.0]), seed=7)
    assert rep.mean == 2.5 and rep.var == pytest.approx(5 / 3) and rep.seed == 7
    assert "elapsed" not in rep.as_dict()


def test_srs_uniform():
    rep = mc_estimator_stats("srs", UNIFORM, IDENTITY, 10, 3, reps=1_000_000, seed=1)
    assert abs(rep.mean - 0.5) < 4 * rep.se_mean
    assert abs(rep.var - 1 / 120) < 3 * rep.se_var


def test_jps_small_sample_variance():
    rep = mc_estimator_stats("jps", UNIFORM, IDENTITY, 3, 2, reps=1_000_000, seed=2)
    exact = theoretical_variance(coefficient_set("jps", 3, 2), stratum_moments(UNIFORM, IDENTITY, 2))
    assert abs(rep.var - exact) < 3 * rep.se_var


@pytest.mark.parametrize("scheme", ["srs", "jps", "ff"])
def test_uninformative_ranking_variance(scheme):
    # with random ranks every stratum has the parent law, so only the K1 term survives
    n, H = 6, 3
    rep = mc_estimator_stats(scheme, UNIFORM, IDENTITY, n, H, Ranker(0.0), reps=400_000, seed=3)
    co = coefficient_set(scheme, n, H)
    assert abs(rep.mean - 0.5) < 4 * rep.se_mean
    assert abs(rep.var - co.k1 / 12) < 3 * rep.se_var


def test_mc_coefficient_examples():
    v, se = mc_coefficient("jps", 2, 2, "V_C1", reps=1_000_000, seed=4)
    assert abs(v - 0.125) < 3 * se
    v, se = mc_coefficient("srs", 4, 2, "V_C1", reps=1_000_000, seed=5)
    assert abs(v - 1 / 16) < 3 * se
    for scheme in ("srs", "jps", "ff"):
        v, se = mc_coefficient(scheme, 5, 1, "V_C1", reps=1000, seed=6)
        assert v == 0.0


def test_normality_h1():
    rec = mc_normality("jps", CATALOG["normal"], 50, 1, reps=5000, seed=7)
    assert rec["ks_distance"] < rec["critical_95"] * 1.5


def test_scheme_equivalence_large_n():
    rec = mc_scheme_equivalence(CATALOG["normal"], 2000, 5, reps=2000, seed=8)
    assert rec["rms_diff_scaled"] < 0.05


def test_thread_count_does_not_change_results():
    kw = dict(dist=CATALOG["exp"], n=5, H=2, ranker=Ranker(1.0), reps=50_000, seed=11)
    a = simulate_estimates(threads=1, **kw)
    b = simulate_estimates(threads=3, **kw)
    for key in a:
        assert a[key].tobytes() == b[key].tobytes()


def test_small_variance_grid():
    checks = suite_moments(seed=12, reps=20_000, grid=[("exp", 5, 3)])
    assert len(checks) == 3 * 3 * 2
    assert all(c["pass"] for c in checks)


def test_suite_names():
    with pytest.raises(ValueError):
        run_suite("nope")
    checks = run_suite("coeffs", seed=1, reps=20_000)
    assert checks and all(c["pass"] for c in checks)
