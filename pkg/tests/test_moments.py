import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msrg.model import reference_params
from msrg.moments import (BLOCK_ARITY, MomentContext, block_factors, bruteforce_moments,
                          building_block, cross_moments, cumulants, cumulants_from_raw,
                          expect_product, raw_moments, raw_moments_all, zr_mgf)
from msrg.risk_neutral import log_mgf_G, reference_kernel, to_q

# brute-force raw moments at T=3, log h_1 = -9.3672, r = 1e-4 (frozen)
FROZEN_T3 = {
    0: (1.686984597115645e-04, 2.630732296372122e-04, -1.196185653153844e-06,
        2.237761033348461e-07),
    1: (1.618852163072226e-04, 2.767394684093485e-04, -1.321492009445328e-06,
        2.480908712824737e-07),
}


@pytest.fixture(scope="module")
def q_r():
    p = reference_params(r=1e-4)
    return to_q(p, reference_kernel(p))


@pytest.mark.parametrize("state", [0, 1])
def test_engine_matches_frozen_bruteforce(q_r, state):
    got = raw_moments(MomentContext(q_r, -9.3672, state, 3))
    assert np.allclose(got, FROZEN_T3[state], rtol=1e-10, atol=0)


@pytest.mark.parametrize("T", [1, 2, 4, 5])
@pytest.mark.parametrize("state", [0, 1])
def test_engine_matches_bruteforce(q_r, T, state):
    ctx = MomentContext(q_r, -9.1, state, T)
    assert np.allclose(raw_moments(ctx), bruteforce_moments(ctx), rtol=1e-10, atol=0)


def test_one_day_is_gaussian(qparams):
    mu, sd, k3, k4 = cumulants(MomentContext(qparams, -9.0, 0, 1))
    h = math.exp(-9.0)
    assert mu == pytest.approx(-h / 2, rel=1e-14)
    assert sd**2 == pytest.approx(h, rel=1e-12)
    assert abs(k3) < 1e-10 and k4 == pytest.approx(3.0, abs=1e-8)


def test_zr_mgf_order_zero_is_exp_G(qparams):
    for k in (-0.5, 0.2, 1.0):
        assert zr_mgf(0, k, qparams) == pytest.approx(math.exp(log_mgf_G(k, qparams)), rel=1e-14)


def test_zr_mgf_odd_at_zero_is_exact(qparams):
    assert zr_mgf(1, 0.0, qparams) == 0.0 and zr_mgf(3, 0.0, qparams) == 0.0


@pytest.mark.parametrize("block", sorted(BLOCK_ARITY, key=lambda b: int(b[1:])))
def test_blocks_match_generic_recursion(qparams, block):
    arity = BLOCK_ARITY[block]
    arity = arity[0] if isinstance(arity, tuple) else arity
    idx = (2, 1, 3, 2)[:arity]
    for s in range(2):
        ctx = MomentContext(qparams, -9.2, s, 10)
        want = expect_product(block_factors(block, *idx), qparams, -9.2)[s]
        assert building_block(block, idx, ctx) == pytest.approx(want, rel=1e-12)


def test_batched_h1_matches_scalar(qparams):
    lh = np.array([-9.6, -9.2, -8.8])
    batch = cross_moments(qparams, 6, lh)
    for i, v in enumerate(lh):
        assert np.allclose(batch[i], cross_moments(qparams, 6, v), rtol=1e-13)


def test_nonpositive_variance_rejected():
    with pytest.raises(ValueError):
        cumulants_from_raw(1.0, 1.0, 1.0, 1.0)


@given(st.floats(-10.5, -8.0), st.integers(2, 12))
def test_moments_satisfy_jensen(lh, T):
    p = reference_params()
    q = to_q(p, reference_kernel(p))
    m = raw_moments_all(q, T, lh)
    assert np.all(m[:, 1] > m[:, 0] ** 2)
    assert np.all(m[:, 3] * m[:, 1] >= m[:, 2] ** 2 * (1 - 1e-12))
