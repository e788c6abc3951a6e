import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msrg.model import reference_params
from msrg.risk_neutral import (VIX_SCALE, KernelParams, delta_map, expected_h, kernel_value,
                               log_mgf_G, log_vrp, pair_mean_se, simulate_q, term_structure,
                               theta_folded, theta_sequence, to_q, vix, vix_from_forecasts)


def test_kernel_pins_return_price(params):
    with pytest.raises(ValueError):
        to_q(params, KernelParams(chi=[0.0, 0.0], psi=0.0))
    with pytest.raises(ValueError):
        KernelParams.for_params(params, [0.1]).check(params)


def test_no_premia_means_no_change(params):
    p = params.replace(lam=0.0)
    q = to_q(p, KernelParams.for_params(p, [0.0, 0.0]))
    assert q.omega_star == p.omega and q.tau1_star == p.tau1
    assert q.delta1_star == p.delta1 and np.array_equal(q.xi_star, p.xi)


def test_q_intercepts_shift_with_chi(params, kernel):
    q = to_q(params, kernel)
    base = to_q(params, KernelParams.for_params(params, [0.0, 0.0]))
    assert np.allclose(q.xi_star - base.xi_star, params.sigma_u * kernel.chi, atol=1e-15)


def test_mgf_at_zero_is_exactly_zero(qparams):
    assert log_mgf_G(0.0, qparams) == 0.0


def test_mgf_domain_error(qparams):
    bad = qparams.replace(tau2=1.0, delta2=0.0)
    with pytest.raises(ValueError):
        log_mgf_G(0.6, bad)


def test_delta_of_constant_is_constant(params):
    assert np.allclose(delta_map(np.full(2, 1.7), params.trans), 1.7, atol=1e-15)


def test_split_and_folded_theta_agree(qparams):
    theta, kappa = theta_sequence(30, qparams)
    folded = theta_folded(30, qparams)
    # G is state-free, so it factors out of the log-sum-exp
    assert np.allclose(theta + kappa[:, None], folded, atol=1e-13)


def test_first_forecast_is_known_variance(qparams):
    for s in range(2):
        assert expected_h(1, -9.0, s, qparams) == math.exp(-9.0)


def test_vix_scale_constant():
    assert VIX_SCALE == pytest.approx(338.45, abs=0.01)


def test_vix_uses_filtered_weights(qparams):
    ts = term_structure(22, -9.3, qparams).sum(axis=0)
    w = np.array([0.3, 0.7])
    assert vix(-9.3, w, qparams) == pytest.approx(VIX_SCALE * math.sqrt(ts @ w), rel=1e-14)


def test_variance_premium_rises_with_chi(params):
    lo = log_vrp(params, KernelParams.for_params(params, [0.0, 0.0]), [0.5, 0.5])
    hi = log_vrp(params, KernelParams.for_params(params, [0.5, 0.5]), [0.5, 0.5])
    assert hi - lo == pytest.approx(params.gamma * params.sigma_u * 0.5, rel=1e-12)


def test_antithetic_pairs_are_averaged():
    vals = np.array([1.0, 2.0, 3.0, 5.0, 4.0, 3.0])
    mean, se = pair_mean_se(vals)
    assert mean == pytest.approx(3.0)
    assert se == pytest.approx(0.0, abs=1e-15)


def test_q_simulation_reproducible(qparams):
    a = simulate_q(qparams, -9.3, 0, 5, 1000, seed=4)
    b = simulate_q(qparams, -9.3, 0, 5, 1000, seed=4)
    assert np.array_equal(a.cum_returns, b.cum_returns)


def test_q_simulation_first_variance(qparams):
    sim = simulate_q(qparams, -9.3, 1, 3, 200, seed=1)
    assert sim.h_mean[0] == pytest.approx(math.exp(-9.3), rel=1e-14)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1))
def test_kernel_positive(z, u, s):
    p = reference_params()
    k = KernelParams.for_params(p, [-0.0052, 0.4586])
    assert kernel_value(z, u, s, k) > 0


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_delta_is_shift_equivariant(a, c):
    P = reference_params().trans
    phi = np.array([a, -a])
    assert np.allclose(delta_map(phi + c, P), delta_map(phi, P) + c, atol=1e-14)


@given(st.integers(1, 40), st.floats(-11.0, -7.0))
def test_term_structure_positive_and_ordered_in_h1(n, lh):
    q = to_q(reference_params(), KernelParams.for_params(reference_params(), [-0.0052, 0.4586]))
    a = term_structure(n, lh, q)[-1]
    b = term_structure(n, lh + 0.1, q)[-1]
    assert np.all(a > 0) and np.all(b > a)


@given(st.floats(1e-7, 1e-1))
def test_flat_forecast_gives_exact_index(h):
    assert vix_from_forecasts(np.full(22, h)) == VIX_SCALE * math.sqrt(22 * h)


@pytest.mark.parametrize("bad", [[], [[1e-4, 1e-4]], [-1e-4, 0.0]])
def test_vix_from_forecasts_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        vix_from_forecasts(bad)


def test_first_row_of_term_structure_is_known_variance(qparams):
    for lh in np.linspace(-11, -7, 41):
        assert np.all(term_structure(3, lh, qparams)[0] == math.exp(lh))
