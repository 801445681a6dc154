import numpy as np
import pytest

from kmpoly import (DicReport, McmcConfig, PosteriorDraws, PriorConfig, dic,
                    dic_parts, l2_credible_set, pointwise_band, predict,
                    run_chain, select_K)
from kmpoly.summaries import _mean_params, grid_l2_norms

from conftest import make_params, sine_data


def _const_draws(values, sigmas=None):
    """Chain whose draws are constant curves at the given values."""
    draws = []
    for i, c in enumerate(np.atleast_1d(values)):
        p = make_params(K=1, h=1.5, m=0, sigma=1.0 if sigmas is None else sigmas[i])
        p.xi[0, 0] = c
        draws.append(p)
    lls = np.zeros(len(draws))
    return PosteriorDraws(draws, lls, lls.copy(), {}, 1)


def _sorted_quantile(a, q):
    """Independent linear-interpolation quantile along axis 0."""
    s = np.sort(a)
    pos = q * (len(a) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(a) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


# ---------------------------------------------------------------- bands

def test_band_degenerate_chain_zero_width():
    draws = _const_draws([2.0] * 10)
    band = pointwise_band(draws, np.linspace(0, 1, 5))
    np.testing.assert_allclose(band.width(), 0.0, atol=1e-14)
    np.testing.assert_allclose(band.mean, 2.0)


def test_band_matches_sort_oracle(rng):
    values = rng.normal(size=1000)
    band = pointwise_band(_const_draws(values), np.array([0.5]), level=0.95)
    assert band.lower[0] == pytest.approx(_sorted_quantile(values, 0.025), abs=1e-12)
    assert band.upper[0] == pytest.approx(_sorted_quantile(values, 0.975), abs=1e-12)


def test_band_rejects_bad_level():
    with pytest.raises(ValueError):
        pointwise_band(_const_draws([1.0, 2.0]), np.array([0.5]), level=1.5)


def test_l2set_degenerate_chain():
    summ = l2_credible_set(_const_draws([1.5] * 5), np.linspace(0, 1, 7))
    assert summ.radius == 0.0
    np.testing.assert_allclose(summ.lower, 1.5, atol=1e-14)
    np.testing.assert_allclose(summ.upper, 1.5, atol=1e-14)


def test_l2set_envelope_contains_mean(rng):
    for _ in range(10):
        summ = l2_credible_set(_const_draws(rng.normal(size=40)),
                               np.linspace(0, 1, 9), level=0.5)
        assert np.all(summ.lower <= summ.mean + 1e-12)
        assert np.all(summ.mean <= summ.upper + 1e-12)


def test_l2_norms_weighted(rng):
    curves = rng.normal(size=(6, 4))
    center = rng.normal(size=4)
    w = np.array([1.0, 2.0, 3.0, 4.0])
    ref = np.sqrt(((curves - center) ** 2) @ (w / w.sum()))
    np.testing.assert_allclose(grid_l2_norms(curves, center, w), ref, atol=1e-12)


def test_l2set_wider_than_pointwise_on_synthetic_run():
    prior = PriorConfig()
    data = sine_data(120, sigma=0.2, seed=10)
    draws = run_chain(McmcConfig(burnin=200, samples=200, seed=3), prior, 4, data)
    grid = np.linspace(0, 1, 100)
    pw = pointwise_band(draws, grid)
    l2 = l2_credible_set(draws, grid)
    assert float(np.mean(l2.width())) >= float(np.mean(pw.width())) - 1e-6


# ---------------------------------------------------------------- dic

def test_dic_degenerate_chain():
    draws = _const_draws([1.0] * 8)
    data = sine_data(20, seed=11)
    draws.loglik[:] = -3.0   # consistent with identical draws
    parts = dic_parts(draws, data)
    ll = parts["plugin_loglik"]
    assert parts["p_dic"] == pytest.approx(2.0 * (ll + 3.0), abs=1e-8)
    assert dic(draws, data) == pytest.approx(-2 * ll + 2 * parts["p_dic"], rel=1e-12)


def test_dic_duplicate_draw_invariance():
    data = sine_data(20, seed=12)
    base = _const_draws([1.0, 2.0, 1.0, 2.0])
    base.loglik[:] = np.array([-3.0, -4.0, -3.0, -4.0])
    doubled = _const_draws([1.0, 2.0] * 4)
    doubled.loglik[:] = np.array([-3.0, -4.0] * 4)
    assert dic(base, data) == pytest.approx(dic(doubled, data), rel=1e-12)


def test_mean_params_feasible():
    prior = PriorConfig()
    data = sine_data(60, seed=13)
    draws = run_chain(McmcConfig(burnin=50, samples=50, seed=5), prior, 3, data)
    plug = _mean_params(draws)
    plug.validate(B=prior.B, h_lo=prior.h_lo, h_hi=prior.h_hi,
                  sigma_lo=prior.sigma_lo, sigma_hi=prior.sigma_hi)


def test_select_K_single_grid_point():
    prior = PriorConfig()
    data = sine_data(50, seed=14)
    cfg = McmcConfig(burnin=30, samples=30, seed=9)
    report, draws = select_K(data, prior, cfg, K_min=3, K_max=3)
    assert report.selected_K == 3 and draws.K == 3
    assert len(report.rows) == 1


def test_select_K_rejects_bad_range():
    with pytest.raises(ValueError):
        select_K(sine_data(30), PriorConfig(), McmcConfig(), K_min=5, K_max=4)


def test_dic_report_consistency_check():
    rows = [{"K": 4, "dic": 10.0, "mean_deviance": 9.0, "p_dic": 1.0},
            {"K": 5, "dic": 12.0, "mean_deviance": 9.0, "p_dic": 2.0}]
    with pytest.raises(ValueError):
        DicReport(rows, selected_K=5)


# ---------------------------------------------------------------- predict

def test_predict_zero_sigma_equals_band(rng):
    values = rng.normal(size=400)
    draws = _const_draws(values, sigmas=np.zeros(400))
    x = np.array([0.3])
    mean, lo, hi = predict(draws, x, level=0.9)
    band = pointwise_band(draws, x, level=0.9)
    assert lo[0] == pytest.approx(band.lower[0]) and hi[0] == pytest.approx(band.upper[0])


def test_predict_standard_normal_interval():
    draws = _const_draws([0.0], sigmas=[1.0])
    _, lo, hi = predict(draws, np.array([0.5]), level=0.95)
    assert lo[0] == pytest.approx(-1.959964, abs=0.01)
    assert hi[0] == pytest.approx(1.959964, abs=0.01)


def test_predict_mixture_matches_mc_oracle():
    # two-component mixture of N(-1, 0.5^2) and N(2, 1.5^2)
    draws = _const_draws([-1.0, 2.0], sigmas=[0.5, 1.5])
    _, lo, hi = predict(draws, np.array([0.5]), level=0.95)
    r = np.random.default_rng(21)
    comp = r.integers(0, 2, size=1_000_000)
    mc = np.where(comp == 0, -1.0 + 0.5 * r.standard_normal(1_000_000),
                  2.0 + 1.5 * r.standard_normal(1_000_000))
    assert lo[0] == pytest.approx(np.quantile(mc, 0.025), abs=0.01)
    assert hi[0] == pytest.approx(np.quantile(mc, 0.975), abs=0.01)
