import math

import numpy as np
import pytest

from odmvq.stats import (
    MD_TO_SD,
    IndexSample,
    StatsError,
    chi2_cdf,
    chi2_sf,
    chi2_similarity,
    chi2_statistic,
    f_cdf,
    f_sf,
    f_test,
    summarize,
)

import oracles

F_GRID = [(x, d1, d2) for x, d1, d2 in [
    (0.1, 1, 1), (0.5, 2, 3), (1.0, 5, 5), (1.7, 4, 9), (2.5, 10, 20), (4.0, 29, 29), (0.25, 29, 29),
    (3.3, 3, 7), (0.8, 12, 6), (6.0, 2, 30),
]]
CHI2_GRID = [(0.1, 1), (0.5556, 1), (1.0, 2), (2.379, 7), (3.0, 3), (5.0, 4), (7.5, 7), (10.0, 5),
             (12.0, 9), (0.7, 6)]


def test_summarize():
    s = summarize([1.0, 3.0])
    assert (s.mean, s.mean_deviation, s.count) == (2.0, 1.0, 2)
    with pytest.raises(StatsError):
        summarize([])


@pytest.mark.parametrize("x,d1,d2", F_GRID)
def test_f_cdf_matches_quadrature(x, d1, d2):
    assert f_cdf(x, d1, d2) == pytest.approx(oracles.f_cdf_quad(x, d1, d2), abs=1e-8)
    assert f_cdf(x, d1, d2) + f_sf(x, d1, d2) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("x,k", CHI2_GRID)
def test_chi2_cdf_matches_quadrature(x, k):
    assert chi2_cdf(x, k) == pytest.approx(oracles.chi2_cdf_quad(x, k), abs=1e-8)
    assert chi2_sf(x, k) == pytest.approx(1.0 - chi2_cdf(x, k), abs=1e-14)


def test_f_table_value():
    # upper 5% point of F(5, 10) is 3.326
    assert f_sf(3.3258, 5, 10) == pytest.approx(0.05, abs=1e-4)


def test_f_test_identical_is_one():
    a = IndexSample(3.0, 0.4, 30)
    assert f_test(a, a).p_value == 1.0


def test_f_test_ratio_four():
    # mean deviations in ratio 2 give variance ratio 4
    res = f_test(IndexSample(0.0, 2.0, 30), IndexSample(0.0, 1.0, 30))
    assert res.statistic == pytest.approx(4.0)
    expected = 2 * (1 - oracles.f_cdf_quad(4.0, 29, 29))
    assert res.p_value == pytest.approx(expected, abs=1e-6)
    assert f_test(IndexSample(0.0, 1.0, 30), IndexSample(0.0, 2.0, 30)).p_value == pytest.approx(res.p_value)


def test_f_test_conversion_factor():
    assert MD_TO_SD == pytest.approx(math.sqrt(math.pi / 2))
    with pytest.raises(StatsError):
        f_test(IndexSample(0, 0.0), IndexSample(0, 1.0))


def test_chi2_identical():
    s = [IndexSample(1.0, 0.2), IndexSample(5.0, 0.7)]
    res = chi2_similarity(s, s)
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_chi2_two_cell_fixture():
    res = chi2_statistic([10, 20], [12, 18])
    assert res.statistic == pytest.approx(4 / 12 + 4 / 18, abs=1e-12)
    assert res.statistic == pytest.approx(0.5556, abs=1e-4)
    assert res.degrees_of_freedom == 1
    assert res.p_value == pytest.approx(1 - oracles.chi2_cdf_quad(res.statistic, 1), abs=1e-8)


def test_chi2_errors():
    with pytest.raises(StatsError):
        chi2_statistic([1.0], [1.0])
    with pytest.raises(StatsError):
        chi2_statistic([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(StatsError):
        chi2_similarity([IndexSample(1, 1)], [])


def test_chi2_cells_interleave_mean_and_deviation():
    obs = [IndexSample(10.0, 2.0), IndexSample(20.0, 4.0)]
    exp = [IndexSample(12.0, 2.5), IndexSample(18.0, 4.0)]
    direct = chi2_statistic([10, 2, 20, 4], [12, 2.5, 18, 4])
    assert chi2_similarity(obs, exp) == direct
    assert direct.degrees_of_freedom == 3


def test_similarity_decreases_with_discrepancy():
    base = [IndexSample(50.0, 5.0), IndexSample(26.0, 2.0)]
    ps = [chi2_similarity([IndexSample(50.0 + d, 5.0), IndexSample(26.0, 2.0)], base).p_value
          for d in (0, 2, 5, 10)]
    assert ps[0] == 1.0 and np.all(np.diff(ps) < 0)
