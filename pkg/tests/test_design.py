import numpy as np
import pytest

from jps.design import PERFECT, JpsSample, Ranker, draw_brss, draw_jps, draw_srs
from jps.distcat import CATALOG


def rng(seed=0):
    return np.random.default_rng(seed)


def test_ranker_parse():
    assert Ranker.parse("perfect").perfect
    assert Ranker.parse("concomitant:0.5").rho == 0.5
    with pytest.raises(ValueError):
        Ranker.parse("concomitant:1.5")


def test_h1_is_srs():
    s = draw_jps(rng(), CATALOG["normal"], 50, 1, PERFECT)
    assert np.all(s.rank == 1) and s.h_n == 1 and s.full_rank


def test_perfect_lowest_stratum_mean():
    s = draw_jps(rng(1), CATALOG["uniform"], 100_000, 3, PERFECT)
    low = s.x[s.rank == 1]
    assert abs(low.mean() - 0.25) < 3 * low.std() / np.sqrt(low.size)
    assert s.counts.sum() == 100_000 and s.full_rank


def test_uninformative_ranking():
    s = draw_jps(rng(2), CATALOG["normal"], 100_000, 3, Ranker(0.0))
    for r in (1, 2, 3):
        v = s.x[s.rank == r]
        assert abs(v.mean() - s.x.mean()) < 3 * v.std() / np.sqrt(v.size)


def test_brss_rank_column_mean():
    b = draw_brss(rng(3), CATALOG["exp"], 100_000, 2, PERFECT)
    col = b.values[:, 1]
    assert b.values.shape == (100_000, 2)
    assert abs(col.mean() - 1.5) < 3 * col.std() / np.sqrt(col.size)


def test_brss_h1_and_determinism():
    b = draw_brss(rng(4), CATALOG["uniform"], 20, 1, PERFECT)
    assert b.values.shape == (20, 1)
    again = draw_brss(rng(4), CATALOG["uniform"], 20, 1, PERFECT)
    assert b.values.tobytes() == again.values.tobytes()


def test_srs():
    with pytest.raises(ValueError):
        draw_srs(rng(), CATALOG["uniform"], 0)
    x = draw_srs(rng(5), CATALOG["uniform"], 100_000)
    assert abs(x.mean() - 0.5) < 3 * x.std() / np.sqrt(x.size)


def test_sample_validation():
    with pytest.raises(ValueError):
        JpsSample(2, np.array([1.0, 2.0]), np.array([1, 3]))
    s = JpsSample(3, np.array([1.0, 2.0]), np.array([1, 1]))
    assert list(s.counts) == [2, 0, 0] and s.h_n == 1 and not s.full_rank
