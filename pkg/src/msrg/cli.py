"""Command-line entry points.  Every command is deterministic given its inputs
and seed; failures exit nonzero with a JSON error object on stderr."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .estimation import EstimationConfig, estimate, mixture_prices, model_vix
from .filtering import bruteforce_loglik, run_filter
from .model import PhysicalParams, simulate, stationary_distribution, stationary_log_mean
from .moments import MomentContext, bruteforce_moments, raw_moments
from .panel import MarketPanel
from .pricing import OptionQuote, bs_price, call_price_state, implied_vol, mc_price
from .risk_neutral import QParams, kernel_value, pair_mean_se, simulate_q, to_q

__all__ = ["main", "build_parser", "q_as_physical", "load_config"]


def load_config(path, overrides: dict) -> EstimationConfig:
    """JSON config file merged with command-line overrides (which win)."""
    data = {}
    if path:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(EstimationConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return EstimationConfig(**data)


def q_as_physical(q: QParams) -> PhysicalParams:
    """Q-dynamics written as a parameter set with zero return premium."""
    return PhysicalParams(lam=0.0, omega=q.omega_star, beta=q.beta, gamma=q.gamma,
                          tau1=q.tau1_star, tau2=q.tau2, phi=q.phi, delta1=q.delta1_star,
                          delta2=q.delta2, sigma_u=q.sigma_u, xi=q.xi_star, trans=q.trans, r=q.r)


def _write_csv(path, header, rows):
    fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _fmt(v):
    return repr(float(v))


# ---------------------------------------------------------------------------
# commands

def cmd_estimate(a):
    cfg = load_config(a.config, {"n_states": a.states, "mode": a.mode, "seed": a.seed,
                                 "restarts": a.restarts, "max_iters": a.max_iters})
    panel = io.load_panel(a.data, a.options, maturity_filter=not a.no_maturity_filter,
                          convert_puts=a.convert_puts)
    report = estimate(panel, cfg)
    out = report.to_dict()
    out["inputs"] = {"data": a.data, "options": a.options,
                     "maturity_filter": not a.no_maturity_filter,
                     "convert_puts": a.convert_puts}
    io.save_json(out, a.out)
    return 0


def _panel_for(a, params):
    panel = io.load_panel(a.data)
    return panel, run_filter(panel, params)


def cmd_filter(a):
    params, _ = io.load_params(a.params)
    panel, filt = _panel_for(a, params)
    n = params.n_states
    header = ["date"] + [f"p_state{j}" for j in range(n)] + ["p_high", "log_h"]
    rows = [[panel.dates[t]] + [_fmt(v) for v in filt.filt_probs[t]]
            + [_fmt(filt.filt_probs[t, -1]), _fmt(filt.log_h_path[t])] for t in range(len(panel))]
    _write_csv(a.out, header, rows)
    return 0


def cmd_vix(a):
    params, kernel = io.load_params(a.params)
    if kernel is None:
        raise ValueError("parameter file has no kernel (fit in joint mode or add chi)")
    panel, filt = _panel_for(a, params)
    v = model_vix(panel, params, kernel, filt)
    _write_csv(a.out, ["date", "vix"], [[d, _fmt(x)] for d, x in zip(panel.dates, v)])
    return 0


def cmd_price(a):
    params, kernel = io.load_params(a.params)
    if kernel is None:
        raise ValueError("parameter file has no kernel (fit in joint mode or add chi)")
    if a.data:
        dates, rets, rv = io.read_returns(a.data)
        opts = io.read_options(a.quotes, dates, maturity_filter=False)
        filt = run_filter(MarketPanel(dates.astype(str), rets, rv), params)
        lh = np.append(filt.log_h_path[1:], filt.log_h_next)[opts.day]
        weights = filt.filt_probs[opts.day]
    else:
        # no history: stationary regime law and mean log variance on every date
        dates = _quote_dates(a.quotes)
        opts = io.read_options(a.quotes, dates, maturity_filter=False)
        lh = np.full(len(opts), stationary_log_mean(params))
        weights = np.tile(stationary_distribution(params.trans).probs, (len(opts), 1))
    q = to_q(params, kernel)
    if a.method == "edgeworth":
        prices = mixture_prices(opts, q, lh, weights)
        ses = np.full(len(opts), np.nan)
    else:
        prices, ses = np.empty(len(opts)), np.empty(len(opts))
        for i in range(len(opts)):
            quote = opts.quote(i)
            prices[i], ses[i] = mc_price(quote, q.replace(r=quote.rate), weights[i], lh[i],
                                         a.paths, a.seed + i)
    rows = []
    for i in range(len(opts)):
        quote = opts.quote(i)
        try:
            iv = implied_vol(quote, prices[i])
        except ValueError:
            iv = float("nan")
        rows.append([str(dates[opts.day[i]]), _fmt(opts.dtm_calendar[i]), _fmt(quote.strike),
                     quote.kind, _fmt(opts.price[i]), _fmt(prices[i]), _fmt(ses[i]), _fmt(iv)])
    _write_csv(a.out, ["date", "dtm_calendar_days", "strike", "kind", "mid_price",
                       "model_price", "mc_se", "model_iv"], rows)
    return 0


def _quote_dates(path):
    dates = set()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            dates.add(np.datetime64(row["date"].strip(), "D"))
    return np.array(sorted(dates))


def cmd_simulate(a):
    params, kernel = io.load_params(a.params)
    if a.measure == "q":
        if kernel is None:
            raise ValueError("Q simulation needs a kernel")
        params = q_as_physical(to_q(params, kernel))
    path = simulate(params, a.days, seed=a.seed)
    panel = MarketPanel.from_path(path, start=a.start)
    rows = [[panel.dates[t], _fmt(path.returns[t]), _fmt(math.exp(path.log_x[t])),
             int(path.states[t]), _fmt(path.log_h[t])] for t in range(a.days)]
    _write_csv(a.out, io.RETURNS_HEADER + ["state", "log_h"], rows)
    return 0


# ---------------------------------------------------------------------------
# validation suites

def _suite_edgeworth(params, kernel):
    checks = []
    for T in (21, 63):
        for m in (0.9, 1.0, 1.1):
            quote = OptionQuote(100.0, 100.0 * m, T, params.r)
            sig = 0.2 * math.sqrt(quote.years)
            mu = params.r * T - 0.5 * sig * sig
            ew = call_price_state(quote, mu, sig, 0.0, 3.0)
            bs = bs_price(quote, 0.2)
            checks.append({"check": f"bs-collapse T={T} m={m}", "gap": abs(ew - bs),
                           "pass": abs(ew - bs) < 1e-12})
            iv = implied_vol(quote, bs)
            checks.append({"check": f"iv-roundtrip T={T} m={m}", "gap": abs(iv - 0.2),
                           "pass": abs(iv - 0.2) < 1e-8})
    return checks


def _suite_moments(params, kernel):
    q = to_q(params, kernel)
    lh = stationary_log_mean(params)
    checks = []
    for T in range(1, 5):
        for s in range(params.n_states):
            ctx = MomentContext(q, lh, s, T)
            fast = np.array(raw_moments(ctx))
            brute = np.array(bruteforce_moments(ctx))
            gap = float(np.max(np.abs(fast - brute) / np.abs(brute)))
            checks.append({"check": f"engine-vs-bruteforce T={T} state {s}", "rel_gap": gap,
                           "pass": gap < 1e-10})
    return checks


def _suite_martingale(params, kernel, paths=200_000, seed=11):
    q = to_q(params, kernel)
    lh = stationary_log_mean(params)
    checks = []
    for s in range(params.n_states):
        sim = simulate_q(q, lh, s, 21, paths, seed + s)
        m, se = pair_mean_se(np.exp(sim.cum_returns[0]))
        target = math.exp(21 * q.r)
        checks.append({"check": f"E^Q[exp(R)] state {s}", "z": (m - target) / se,
                       "pass": abs(m - target) <= 3 * se})
        rng = np.random.default_rng(seed + 100 + s)
        z, u = rng.standard_normal((2, paths))
        mk, sek = pair_mean_se(kernel_value(z, u, s, kernel), antithetic=False)
        checks.append({"check": f"E^P[M] state {s}", "z": (mk - 1) / sek,
                       "pass": abs(mk - 1) <= 3 * sek})
    return checks


def _suite_filter(params, kernel, T=8, seed=5):
    path = simulate(params, T, seed=seed)
    panel = MarketPanel.from_path(path)
    ll = run_filter(panel, params).loglik
    ref = bruteforce_loglik(path.returns, path.log_x, params)
    return [{"check": f"filter-vs-enumeration T={T}", "gap": abs(ll - ref),
             "pass": abs(ll - ref) < 1e-10}]


SUITES = {"edgeworth": _suite_edgeworth, "moments": _suite_moments,
          "martingale": _suite_martingale, "filter": _suite_filter}


def cmd_validate(a):
    params, kernel = io.load_params(a.params)
    if kernel is None and a.suite in ("moments", "martingale"):
        raise ValueError(f"suite {a.suite} needs a kernel")
    checks = SUITES[a.suite](params, kernel)
    ok = all(c["pass"] for c in checks)
    print(json.dumps(io._jsonable({"suite": a.suite, "pass": ok, "checks": checks}), indent=1))
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msrg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="fit parameters by quasi maximum likelihood")
    e.add_argument("--data", required=True)
    e.add_argument("--options")
    e.add_argument("--states", type=int)
    e.add_argument("--mode", choices=["p-only", "joint"])
    e.add_argument("--config")
    e.add_argument("--seed", type=int)
    e.add_argument("--restarts", type=int)
    e.add_argument("--max-iters", dest="max_iters", type=int)
    e.add_argument("--no-maturity-filter", action="store_true")
    e.add_argument("--convert-puts", action="store_true")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    f = sub.add_parser("filter", help="filtered regime probabilities")
    f.add_argument("--data", required=True)
    f.add_argument("--params", required=True)
    f.add_argument("--out", default="-")
    f.set_defaults(func=cmd_filter)

    p = sub.add_parser("price", help="model option prices")
    p.add_argument("--params", required=True)
    p.add_argument("--quotes", required=True)
    p.add_argument("--data", help="returns file used to filter the state (optional)")
    p.add_argument("--method", choices=["edgeworth", "mc"], default="edgeworth")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_price)

    v = sub.add_parser("vix", help="model VIX series")
    v.add_argument("--params", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_vix)

    s = sub.add_parser("simulate", help="simulate a path")
    s.add_argument("--params", required=True)
    s.add_argument("--days", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--measure", choices=["p", "q"], default="p")
    s.add_argument("--start", default="2000-01-03")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("validate", help="run an oracle suite")
    c.add_argument("--suite", choices=sorted(SUITES), required=True)
    c.add_argument("--params", required=True)
    c.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.func(a)
    except Exception as exc:  # reported as machine-readable JSON
        err = {"error": type(exc).__name__, "message": str(exc), "command": a.command}
        line = getattr(exc, "line", None)
        if line is not None:
            err["line"] = line
        print(json.dumps(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
