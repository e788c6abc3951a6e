"""End-to-end acceptance checks.

Each test prints one ``ACCEPTANCE <k> ... PASS|FAIL`` line before asserting.
Monte Carlo sizes and tolerances are the stated ones; nothing is loosened
to make a check pass.
"""

import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from msrg.experiments import nesting_study, recovery_study
from msrg.filtering import bruteforce_loglik, run_filter
from msrg.model import (REFERENCE_LOG_MEAN, long_run_log_variance, omega_from_log_mean, persistence,
                        simulate, stationary_distribution, reference_params, validate)
from msrg.moments import (MomentContext, bruteforce_moments, cumulants_from_raw, raw_moments,
                          raw_moments_all, zr_mgf)
from msrg.panel import MarketPanel
from msrg.pricing import OptionQuote, bs_price, call_price_state, implied_vol, mc_price, price
from msrg.risk_neutral import (VIX_SCALE, KernelParams, kernel_value, log_mgf_G, simulate_q,
                               reference_kernel, term_structure, to_q, vix, vix_from_forecasts)

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(k, name, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k:>2} {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def _reference():
    p = reference_params()
    return p, reference_kernel(p)


# ---------------------------------------------------------------------------
# 1. Edgeworth vs Monte Carlo

def test_c01_edgeworth_vs_monte_carlo(report):
    p, k = _reference()
    q = to_q(p, k)
    moneyness, maturities = (0.9, 0.95, 1.0, 1.05, 1.1), (21, 63, 126)
    spot, paths = 100.0, 1_000_000
    cells, worst = [], (0.0, None)
    for s in range(2):
        lh = long_run_log_variance(p, s)
        sim = simulate_q(q, lh, s, max(maturities), paths, seed=1000 + s,
                         record_days=maturities)
        for row, T in enumerate(sim.record_days):
            ST = spot * np.exp(sim.cum_returns[row])
            for m in moneyness:
                quote = OptionQuote(spot, m * spot, int(T), q.r)
                edge = price(quote, np.eye(2)[s], q, lh).price
                pay = np.maximum(ST - quote.strike, 0.0) * quote.discount
                half = paths // 2
                pairs = 0.5 * (pay[:half] + pay[half:])
                mc, se = pairs.mean(), pairs.std(ddof=1) / math.sqrt(half)
                tol = max(0.01 * mc, 2 * se)
                ok = abs(edge - mc) <= tol
                cells.append(ok)
                ratio = abs(edge - mc) / tol
                if ratio > worst[0]:
                    worst = (ratio, f"state={s} T={T} K/S={m} edge={edge:.4f} mc={mc:.4f}")
    passed = all(cells)
    report(1, "Edgeworth price within max(1%, 2 SE) of 1e6-path MC", passed,
           f"{sum(cells)}/{len(cells)} cells; worst gap/tol {worst[0]:.1f} at {worst[1]}")
    assert passed


# ---------------------------------------------------------------------------
# 2. moment engine: recursion vs brute force vs simulation

def _perturbations():
    """Five parameter sets around the fitted values, each kept stationary."""
    p, k = _reference()
    changes = [
        (dict(lam=0.05, tau1=-0.18), [-0.0052, 0.4586], -9.6),
        (dict(gamma=0.14, phi=0.95), [0.1, 0.3], -9.2),
        (dict(tau2=-0.02, delta2=0.12, sigma_u=0.55), [-0.2, 0.6], -9.0),
        (dict(xi=[-0.90, -0.70], trans=[[0.999, 0.001], [0.01, 0.99]]), [0.0, 0.4586], -9.4),
        (dict(delta1=-0.25, beta=0.83), [0.2, 0.8], -8.8),
    ]
    out = []
    for fields, chi, lh in changes:
        cand = p.replace(**fields)
        cand = cand.replace(omega=omega_from_log_mean(REFERENCE_LOG_MEAN, cand.beta, cand.gamma,
                                                      cand.phi, cand.xi, cand.trans))
        assert not validate(cand) and persistence(cand) < 1
        out.append((cand, KernelParams.for_params(cand.replace(r=1e-4), chi), lh))
    return out


def _batch_cumulants(x):
    """(mean, variance, skewness, kurtosis) along the last axis."""
    mu = x.mean(axis=-1, keepdims=True)
    d = x - mu
    v = (d**2).mean(axis=-1)
    return np.stack([mu[..., 0], v, (d**3).mean(axis=-1) / v**1.5,
                     (d**4).mean(axis=-1) / v**2], axis=-1)


def test_c02_moment_engine_triple_agreement(report):
    n_batches, batch, horizons = 100, 100_000, np.arange(1, 9)
    worst_rel, worst_z, exact_t1 = 0.0, (0.0, None), True
    for idx, (p, kern, lh) in enumerate(_perturbations()):
        p = p.replace(r=1e-4)
        q = to_q(p, kern)
        for T in horizons:
            for s in range(2):
                ctx = MomentContext(q, lh, s, int(T))
                fast, brute = raw_moments(ctx), bruteforce_moments(ctx)
                for a, b in zip(fast, brute):
                    worst_rel = max(worst_rel, abs(a - b) / abs(b))
        h = math.exp(lh)
        for s in range(2):
            mu, sd, k3, k4 = cumulants_from_raw(*raw_moments(MomentContext(q, lh, s, 1)))
            exact_t1 &= (abs(mu - (q.r - h / 2)) <= 1e-15 * h and abs(sd**2 - h) <= 1e-14 * h
                         and abs(k3) <= 1e-9 and abs(k4 - 3) <= 1e-12)
        # simulation from the stationary regime law, in independent batches
        probs = stationary_distribution(p.trans).probs
        est = np.empty((n_batches, horizons.size, 4))
        for b in range(n_batches):
            sim = simulate_q(q, lh, probs, int(horizons[-1]), batch, seed=10_000 * idx + b,
                             antithetic=False, record_days=horizons, chunk=batch)
            est[b] = _batch_cumulants(sim.cum_returns)
        mc, se = est.mean(axis=0), est.std(axis=0, ddof=1) / math.sqrt(n_batches)
        per_state = np.stack([raw_moments_all(q, int(T), lh) for T in horizons])
        raw = np.einsum("s,tsk->tk", probs, per_state)
        mu, sd, k3, k4 = cumulants_from_raw(*raw.T)
        exact = np.stack([mu, sd**2, k3, k4], axis=-1)
        z = np.abs(exact - mc) / se
        if z.max() > worst_z[0]:
            t, c = np.unravel_index(np.argmax(z), z.shape)
            worst_z = (float(z.max()), f"set {idx} T={horizons[t]} "
                       f"{['mean', 'var', 'skew', 'kurt'][c]}")
    ok = worst_rel <= 1e-10 and worst_z[0] <= 3 and exact_t1
    report(2, "moments: recursion == brute force, both within 3 SE of 1e7-path MC", ok,
           f"max rel gap {worst_rel:.1e}; max |z| {worst_z[0]:.2f} ({worst_z[1]}); "
           f"T=1 Gaussian exact: {exact_t1}")
    assert ok


# ---------------------------------------------------------------------------
# 3. variance term structure

def test_c03_term_structure(report):
    p, k = _reference()
    q = to_q(p, k)
    worst, first_exact = 0.0, True
    for s in range(2):
        lh = long_run_log_variance(p, s)
        ts = term_structure(22, lh, q)[:, s]
        sim = simulate_q(q, lh, s, 22, 1_000_000, seed=300 + s)
        se = np.sqrt(np.maximum(sim.h_pair_var, 0.0) / sim.n_pairs)
        first_exact &= ts[0] == math.exp(lh) and sim.h_mean[0] == pytest.approx(ts[0], rel=1e-13)
        worst = max(worst, float(np.max(np.abs(sim.h_mean[1:] - ts[1:]) / se[1:])))
    rho_ok = round(p.beta + p.gamma * p.phi, 4) == 0.9704
    ok = worst <= 3 and first_exact and rho_ok
    report(3, "term structure n=1..22 within 3 SE of Q-simulation", ok,
           f"max |z| {worst:.2f}; n=1 exact: {first_exact}; rho={persistence(p):.7f}")
    assert ok


# ---------------------------------------------------------------------------
# 4. martingale and kernel normalization

def test_c04_martingale_and_kernel(report):
    p, k = _reference()
    n = 1_000_000
    rng = np.random.default_rng(404)
    worst, lines = 0.0, []
    r = 1e-4
    for s, chi in enumerate((-0.0052, 0.4586)):
        assert k.chi[s] == chi
        z, u = rng.standard_normal(n), rng.standard_normal(n)
        m = kernel_value(z, u, s, k)
        h = math.exp(long_run_log_variance(p, s))
        ret = r + p.lam * math.sqrt(h) - h / 2 + math.sqrt(h) * z
        for name, x, target in (("E^P[M]", m, 1.0), ("E^P[M e^R]", m * np.exp(ret), math.exp(r))):
            zs = abs(x.mean() - target) / (x.std(ddof=1) / math.sqrt(n))
            worst = max(worst, zs)
            lines.append(f"{name}(chi={chi}) z={zs:.2f}")
        # multi-day Q martingale: the regime-dependent chi moves later variances
        q = to_q(p.replace(r=r), k)
        sim = simulate_q(q, long_run_log_variance(p, s), s, 5, n, seed=40 + s, antithetic=False,
                         record_days=[1, 5])
        for row, days in enumerate((1, 5)):
            g = np.exp(sim.cum_returns[row])
            zs = abs(g.mean() - math.exp(r * days)) / (g.std(ddof=1) / math.sqrt(n))
            worst = max(worst, zs)
            lines.append(f"E^Q[e^R_{days}](state {s}) z={zs:.2f}")
    ok = worst <= 3
    report(4, "E^P[M]=1 and E^Q[e^R]=e^r within 3 SE at 1e6 draws", ok, "; ".join(lines))
    assert ok


# ---------------------------------------------------------------------------
# 5. filter vs enumeration

def test_c05_filter_vs_enumeration(report):
    worst_ll, worst_simplex = 0.0, 0.0
    for T in range(1, 13):
        for seed in range(3):
            p = reference_params()
            if seed == 2:
                p = p.replace(trans=[[0.9, 0.1], [0.2, 0.8]])
            path = simulate(p, T, seed=500 + 10 * T + seed)
            out = run_filter(MarketPanel.from_path(path), p)
            ref = bruteforce_loglik(path.returns, path.log_x, p)
            worst_ll = max(worst_ll, abs(out.loglik - ref))
            for rows in (out.filt_probs, out.pred_probs):
                worst_simplex = max(worst_simplex, float(np.max(np.abs(rows.sum(axis=1) - 1))),
                                    float(-rows.min()))
    ok = worst_ll <= 1e-10 and worst_simplex <= 1e-12
    report(5, "filter loglik == path enumeration (N=2, T<=12)", ok,
           f"max |gap| {worst_ll:.1e}; max simplex violation {worst_simplex:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 6. parameter recovery

def test_c06_parameter_recovery(report):
    runs = recovery_study(reps=20, T=7559, restarts=2, seed0=100)
    share = np.mean([r.within_3se for r in runs])
    ordered = all(r.labels_ordered for r in runs)
    misses = {}
    for r in runs:
        for name, z in r.z.items():
            if abs(z) > 3:
                misses[name] = misses.get(name, 0) + 1
    ok = share >= 0.9 and ordered
    report(6, "P-only QMLE recovery within 3 sandwich SE in >= 90% of 20 runs", ok,
           f"share {share:.2f}; labels ordered in all runs: {ordered}; "
           f"misses by parameter {misses}; "
           f"share with transitions as log-odds {np.mean([r.within_3se_logodds for r in runs]):.2f}")
    assert ok


# ---------------------------------------------------------------------------
# 7. nesting

def test_c07_two_regimes_beat_one(report):
    res = nesting_study()
    checks = res.improves()
    red = res.relative_reductions()
    ok = all(checks.values())
    report(7, "two-regime joint fit beats one-regime on loglik, sigma_e, IV RMSE", ok,
           f"loglik {res.two.loglik_total:.1f} vs {res.one.loglik_total:.1f}; "
           f"sigma_e -{100 * red['sigma_e']:.1f}%; rmse_iv -{100 * red['rmse_iv']:.1f}%")
    assert ok


# ---------------------------------------------------------------------------
# 8. Black-Scholes collapse

def test_c08_black_scholes_collapse(report):
    worst_price, worst_iv = 0.0, 0.0
    for m in (0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2):
        for T in (5, 21, 63, 126, 252):
            for vol in (0.1, 0.2, 0.4):
                for r in (0.0, 2e-4):
                    quote = OptionQuote(100.0, 100.0 * m, T, r)
                    sig = vol * math.sqrt(quote.years)
                    edge = call_price_state(quote, r * T - 0.5 * sig**2, sig, 0.0, 3.0)
                    bs = bs_price(quote, vol)
                    worst_price = max(worst_price, abs(edge - bs))
                    # deep in-the-money short calls carry time value below double
                    # precision, so the inversion runs on the pricing grid only
                    if 0.9 <= m <= 1.1 and T in (21, 63, 126):
                        worst_iv = max(worst_iv, abs(implied_vol(quote, bs) - vol))
    ok = worst_price <= 1e-12 and worst_iv <= 1e-8
    report(8, "Gaussian cumulants reproduce Black-Scholes; IV round trip", ok,
           f"max price gap {worst_price:.1e}; max IV gap {worst_iv:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 9. shock transforms vs quadrature

def _gauss_hermite_expect(f, n=120):
    x, w = hermegauss(n)
    w = w / math.sqrt(2 * math.pi)
    z, u = np.meshgrid(x, x, indexing="ij")
    return float(np.sum(np.outer(w, w) * f(z, u)))


def test_c09_transforms_vs_quadrature(report):
    p, k = _reference()
    base = to_q(p, k)
    worst, g0 = 0.0, True
    for q in (base, base.replace(tau2=0.05, delta2=0.2)):
        v = lambda z, u: q.c1 * z + q.c2 * (z * z - 1) + q.gs * u
        for theta in (-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 3.0, 4.0):
            assert theta * q.c2 < 0.5
            ref = math.log(_gauss_hermite_expect(lambda z, u: np.exp(theta * v(z, u))))
            worst = max(worst, abs(log_mgf_G(theta, q) - ref))
            for r in range(5):
                ref = _gauss_hermite_expect(lambda z, u: z**r * np.exp(theta * v(z, u)))
                worst = max(worst, abs(zr_mgf(r, theta, q) - ref) / max(1.0, abs(ref)))
        g0 &= log_mgf_G(0.0, q) == 0.0
    ok = worst <= 1e-8 and g0
    report(9, "G and E[z^r exp(kv)] match Gauss-Hermite quadrature; G(0)=0", ok,
           f"max gap {worst:.1e}; G(0)==0: {g0}")
    assert ok


# ---------------------------------------------------------------------------
# 10. VIX

def test_c10_vix_constant_and_flat_variance(report):
    const_ok = abs(VIX_SCALE - 338.45) <= 0.01
    flat_ok = all(vix_from_forecasts(np.full(22, h)) == VIX_SCALE * math.sqrt(22 * h)
                  for h in np.geomspace(1e-6, 1e-2, 200))
    # a variance process that never moves gives the same value through the model
    p, k = _reference()
    frozen = to_q(p, k).replace(omega_star=0.0, beta=1.0, gamma=0.0, tau1_star=0.0, tau2=0.0)
    lh = -9.0
    model_ok = vix(lh, [0.4, 0.6], frozen) == pytest.approx(VIX_SCALE * math.sqrt(22 * math.exp(lh)),
                                                          rel=1e-14)
    ok = const_ok and flat_ok and model_ok
    report(10, "VIX scale 338.45 and flat-variance identity", ok,
           f"A={VIX_SCALE:.6f}; flat exact: {flat_ok}; frozen-variance model: {model_ok}")
    assert ok
