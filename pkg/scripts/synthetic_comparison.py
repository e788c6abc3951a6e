"""Two-regime vs one-regime vs Heston-Nandi on a synthetic return and option panel.

Simulates two-regime data with a model-generated option panel, fits both
realized-GARCH variants jointly, fits the HNG model to returns and its
variance-risk scale to the options, then prints the pricing-error table.
"""

import argparse
import json

import numpy as np
from scipy.optimize import minimize_scalar

from msrg.estimation import rmse_iv, vega_weighted_errors
from msrg.experiments import nesting_study
from msrg.hng import fit_hng_p, hng_simulate, hng_to_q, hng_variance_path


def hng_prices(options, params, h_path, paths, seed):
    """Monte Carlo call prices, one common-random-number simulation per (day, maturity)."""
    q = hng_to_q(params)
    out = np.empty(len(options))
    groups = {}
    for i in range(len(options)):
        groups.setdefault((int(options.day[i]), int(options.dtm_days[i])), []).append(i)
    for g, ((day, T), idx) in enumerate(sorted(groups.items())):
        cum, _ = hng_simulate(q, h_path[day + 1], T, paths, seed + g)
        idx = np.array(idx)
        ST = options.spot[idx, None] * np.exp(cum + options.rate[idx, None] * T)
        pay = np.maximum(ST - options.strike[idx, None], 0.0)
        out[idx] = pay.mean(axis=1) * np.exp(-options.rate[idx] * T)
    return out


def fit_hng(panel, paths, seed):
    params, ll = fit_hng_p(panel.returns)
    h_path = hng_variance_path(panel.returns, params, float(np.var(panel.returns)))
    opts = panel.options

    def loss(chi):
        p = params.__class__(**{**params.__dict__, "chi": chi})
        err, _ = vega_weighted_errors(opts, hng_prices(opts, p, h_path, paths, seed), warn=False)
        return float(np.mean(err**2))

    res = minimize_scalar(loss, bounds=(0.5, 3.0), method="bounded", options={"xatol": 1e-3})
    best = params.__class__(**{**params.__dict__, "chi": float(res.x)})
    return best, ll, hng_prices(opts, best, h_path, paths, seed)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--days", type=int, default=2000)
    ap.add_argument("--option-every", type=int, default=50)
    ap.add_argument("--noise", type=float, default=0.002)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--joint-iters", type=int, default=300)
    ap.add_argument("--hng-paths", type=int, default=20000)
    ap.add_argument("--out", default=None)
    a = ap.parse_args()

    res = nesting_study(a.days, a.option_every, a.noise, a.seed, a.joint_iters)
    hng, hng_ll, hng_px = fit_hng(res.panel, a.hng_paths, a.seed)
    hng_rmse = rmse_iv(res.panel.options, hng_px)
    rows = {
        "two-regime": {"loglik_p": res.two.loglik_p, "loglik_total": res.two.loglik_total,
                       "sigma_e": res.two.sigma_e, "rmse_iv": res.two.rmse["overall"]},
        "one-regime": {"loglik_p": res.one.loglik_p, "loglik_total": res.one.loglik_total,
                       "sigma_e": res.one.sigma_e, "rmse_iv": res.one.rmse["overall"]},
        "hng": {"loglik_p": hng_ll, "chi": hng.chi, "rmse_iv": hng_rmse["overall"]},
    }
    print(f"{'model':<12}{'loglik_p':>12}{'loglik_total':>14}{'sigma_e':>11}{'rmse_iv':>9}")
    for name, r in rows.items():
        tot = r.get("loglik_total", float("nan"))
        se = r.get("sigma_e", float("nan"))
        print(f"{name:<12}{r['loglik_p']:>12.1f}{tot:>14.1f}{se:>11.5f}{r['rmse_iv']:>9.3f}")
    print("(hng loglik_p covers returns only; the realized-GARCH rows add the realized measure)")
    red = res.relative_reductions()
    print(f"two vs one regime: sigma_e -{100 * red['sigma_e']:.1f}%, "
          f"rmse_iv -{100 * red['rmse_iv']:.1f}%")
    print("fitted chi (two-regime):", np.round(res.two.kernel.chi, 4),
          "truth:", np.round(res.kernel.chi, 4))
    if a.out:
        with open(a.out, "w") as fh:
            json.dump(rows, fh, indent=1)
