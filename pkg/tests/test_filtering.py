import numpy as np
import pytest
from hypothesis import given, strategies as st

from msrg.filtering import (FilterUnderflow, bruteforce_loglik, filter_step, measurement_density,
                            return_density, run_filter)
from msrg.model import StateDistribution, simulate, stationary_distribution, reference_params
from msrg.panel import MarketPanel

# six-day fixture; the reference value comes from enumerating all 64 regime paths
RETURNS = np.array([0.004, -0.012, 0.007, -0.021, 0.001, 0.009])
RV = np.array([6e-5, 1.4e-4, 8e-5, 3.1e-4, 1.1e-4, 7e-5])
FROZEN_LOGLIK = 11.90111924071108


class _Series:
    def __init__(self, returns, log_x):
        self.returns, self.log_x = returns, log_x


def test_fixture_loglik_frozen(params):
    out = run_filter(_Series(RETURNS, np.log(RV)), params)
    assert out.loglik == pytest.approx(FROZEN_LOGLIK, abs=1e-10)


def test_fixture_bruteforce_frozen(params):
    assert bruteforce_loglik(RETURNS, np.log(RV), params) == pytest.approx(FROZEN_LOGLIK,
                                                                           abs=1e-12)


def test_single_state_has_trivial_probs(params):
    one = params.replace(xi=params.xi[:1], trans=[[1.0]])
    out = run_filter(_Series(RETURNS, np.log(RV)), one)
    assert np.all(out.filt_probs == 1.0)


def test_step_matches_run(params):
    out = run_filter(_Series(RETURNS, np.log(RV)), params)
    pred = stationary_distribution(params.trans)
    lh = out.log_h_path[0]
    for t in range(RETURNS.size):
        filt, pred, inc, lh = filter_step(pred, RETURNS[t], np.log(RV[t]), lh, params)
        assert np.allclose(filt.probs, out.filt_probs[t], atol=1e-14)
        assert inc == pytest.approx(out.increments[t], abs=1e-12)


def test_increment_is_log_of_mixture(params):
    out = run_filter(_Series(RETURNS[:1], np.log(RV[:1])), params)
    lh = out.log_h_path[0]
    h = np.exp(lh)
    z = out.z_path[0]
    pi = stationary_distribution(params.trans).probs
    dens = return_density(RETURNS[0], h, params) * sum(
        pi[s] * measurement_density(np.log(RV[0]), z, lh, s, params) for s in range(2))
    assert out.increments[0] == pytest.approx(np.log(dens), abs=1e-12)


def test_underflow_raises(params):
    # the only regime with prior mass cannot have produced the observation
    p = params.replace(xi=np.array([-0.9, 300.0]), trans=np.eye(2))
    wild = _Series(np.array([0.001]), np.array([300.0 - p.phi * 9.3]))
    kw = dict(init=StateDistribution.point(0, 2), log_h1=-9.3)
    with pytest.raises(FilterUnderflow):
        run_filter(wild, p, **kw)
    out = run_filter(wild, p, allow_underflow=True, **kw)
    assert out.loglik == -np.inf


def test_point_prior_is_respected(params):
    out = run_filter(_Series(RETURNS, np.log(RV)), params.replace(
        trans=np.array([[1.0, 0.0], [0.0, 1.0]])), init=StateDistribution.point(0, 2))
    assert np.all(out.filt_probs[:, 0] == 1.0)


@given(st.integers(0, 5000), st.integers(1, 7))
def test_matches_enumeration(seed, T):
    p = reference_params().replace(trans=np.array([[0.9, 0.1], [0.2, 0.8]]))
    path = simulate(p, T, seed=seed)
    out = run_filter(MarketPanel.from_path(path), p)
    assert out.loglik == pytest.approx(bruteforce_loglik(path.returns, path.log_x, p),
                                       abs=1e-10)
    assert np.allclose(out.filt_probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(out.filt_probs >= 0)


@given(st.integers(0, 5000))
def test_variance_path_ignores_regimes(seed):
    # the log-variance recursion is driven by data only
    p = reference_params()
    path = simulate(p, 40, seed=seed)
    a = run_filter(MarketPanel.from_path(path), p)
    b = run_filter(MarketPanel.from_path(path), p.replace(trans=np.array([[0.5, 0.5], [0.5, 0.5]])),
                   log_h1=a.log_h_path[0])
    assert np.array_equal(a.log_h_path, b.log_h_path)
