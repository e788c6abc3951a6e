"""Heston-Nandi GARCH benchmark with a variance-dependent pricing kernel.

P-dynamics::

    R_{t+1} = r + (lam - 1/2) h_{t+1} + sqrt(h_{t+1}) z_{t+1}
    h_{t+1} = omega + beta h_t + tau2 (z_t - tau1 sqrt(h_t))^2

Under Q the variance is scaled by ``chi`` and the model keeps its form with
starred coefficients.  Prices come from Monte Carlo.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .risk_neutral import pair_mean_se

__all__ = [
    "HngParams",
    "HngQParams",
    "hng_to_q",
    "hng_simulate",
    "hng_mc_price",
    "hng_loglik",
    "hng_variance_path",
    "fit_hng_p",
    "unconditional_variance",
    "reference_hng",
]


@dataclass(frozen=True)
class HngParams:
    lam: float
    omega: float
    beta: float
    tau1: float
    tau2: float
    chi: float = 1.0
    r: float = 0.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.beta + self.tau2 * self.tau1**2 >= 1:
            out.append("persistence beta + tau2*tau1^2 must be < 1")
        if self.omega < 0 or self.tau2 < 0:
            out.append("omega and tau2 must be non-negative")
        if not self.chi > 0:
            out.append("chi must be positive")
        return out


@dataclass(frozen=True)
class HngQParams:
    omega: float
    beta: float
    tau1: float
    tau2: float
    chi: float
    r: float = 0.0

    @property
    def persistence(self) -> float:
        return self.beta + self.tau2 * self.tau1**2


def hng_to_q(params: HngParams, variant: str = "scaled_tau2") -> HngQParams:
    """Risk-neutral coefficients; Q-variance is ``chi`` times P-variance.

    The default ``variant="scaled_tau2"`` scales the news-impact
    coefficient as ``chi**2 * tau2``, which keeps the Q recursion in the
    same form.  ``variant="scaled_tau1"`` uses ``chi**2 * tau1`` instead and
    is kept for comparison only.
    """
    chi = params.chi
    tau1_q = (params.lam + params.tau1 - 0.5) / chi + 0.5
    if variant == "scaled_tau2":
        tau2_q = chi**2 * params.tau2
    elif variant == "scaled_tau1":
        tau2_q = chi**2 * params.tau1
    else:
        raise ValueError("variant must be 'scaled_tau2' or 'scaled_tau1'")
    return HngQParams(omega=chi * params.omega, beta=params.beta, tau1=tau1_q,
                      tau2=tau2_q, chi=chi, r=params.r)


def unconditional_variance(omega, beta, tau1, tau2) -> float:
    pers = beta + tau2 * tau1**2
    if pers >= 1:
        return math.inf
    return (omega + tau2) / (1.0 - pers)


def hng_simulate(model, h1: float, T: int, n_paths: int, seed: int, measure: str = "q",
                 antithetic: bool = True):
    """Simulate cumulative log-returns and the variance path.

    ``model`` is :class:`HngParams` (P, or Q after mapping when
    ``measure='q'``) or already-mapped :class:`HngQParams`.  ``h1`` is the
    P-variance of the first day; under Q it is scaled by ``chi``.
    Returns ``(cum_returns, h_paths)`` with ``h_paths`` of shape ``(T, n_paths)``.
    """
    if isinstance(model, HngParams) and measure == "q":
        model = hng_to_q(model)
    if isinstance(model, HngQParams):
        omega, beta, tau1, tau2, lam = model.omega, model.beta, model.tau1, model.tau2, 0.0
        h = model.chi * h1
        r = model.r
    else:
        omega, beta, tau1, tau2, lam = model.omega, model.beta, model.tau1, model.tau2, model.lam
        h = h1
        r = model.r
    rng = np.random.default_rng(seed)
    if antithetic and n_paths % 2:
        n_paths += 1
    m = n_paths // 2 if antithetic else n_paths
    h = np.full(n_paths, float(h))
    acc = np.zeros(n_paths)
    hs = np.empty((T, n_paths))
    for t in range(T):
        z = rng.standard_normal(m)
        if antithetic:
            z = np.concatenate([z, -z])
        hs[t] = h
        sh = np.sqrt(h)
        acc += r + (lam - 0.5) * h + sh * z
        h = omega + beta * h + tau2 * (z - tau1 * sh) ** 2
    return acc, hs


def hng_mc_price(quote, params: HngParams, h1: float, paths: int, seed: int,
                 variant: str = "scaled_tau2", antithetic: bool = True):
    """Discounted payoff mean and SE under the HNG risk-neutral dynamics."""
    q = dataclasses.replace(hng_to_q(params, variant), r=quote.rate)
    cum, _ = hng_simulate(q, h1, quote.dtm_days, paths, seed, antithetic=antithetic)
    ST = quote.spot * np.exp(cum)
    payoff = np.maximum(ST - quote.strike, 0) if quote.kind == "call" else \
        np.maximum(quote.strike - ST, 0)
    return pair_mean_se(payoff * quote.discount, antithetic=antithetic)


def hng_loglik(returns, params: HngParams, h1: float | None = None):
    """Gaussian log-likelihood of returns and the per-day contributions."""
    R = np.asarray(returns, dtype=float)
    p = params
    h = unconditional_variance(p.omega, p.beta, p.tau1, p.tau2) if h1 is None else h1
    out = np.empty(R.size)
    for t, ret in enumerate(R):
        if not (h > 0 and math.isfinite(h)):
            return -math.inf, out
        z = (ret - p.r - (p.lam - 0.5) * h) / math.sqrt(h)
        out[t] = -0.5 * (math.log(2 * math.pi * h) + z * z)
        h = p.omega + p.beta * h + p.tau2 * (z - p.tau1 * math.sqrt(h)) ** 2
    return float(out.sum()), out


def hng_variance_path(returns, params: HngParams, h1: float | None = None) -> np.ndarray:
    """Conditional variances ``h_1, ..., h_{T+1}``; the last entry is the next-day forecast."""
    R = np.asarray(returns, dtype=float)
    p = params
    h = unconditional_variance(p.omega, p.beta, p.tau1, p.tau2) if h1 is None else h1
    out = np.empty(R.size + 1)
    out[0] = h
    for t, ret in enumerate(R):
        sh = math.sqrt(h)
        z = (ret - p.r - (p.lam - 0.5) * h) / sh
        h = p.omega + p.beta * h + p.tau2 * (z - p.tau1 * sh) ** 2
        out[t + 1] = h
    return out


def _unpack(x, r):
    # positivity via exp, persistence kept below one by a logistic map
    lam, log_omega, log_tau2, tau1, pers_raw = x
    tau2 = math.exp(log_tau2)
    pers = 1.0 / (1.0 + math.exp(-pers_raw))
    beta = pers - tau2 * tau1**2
    return dict(lam=lam, omega=math.exp(log_omega), beta=beta, tau1=tau1, tau2=tau2, r=r)


def fit_hng_p(returns, r: float = 0.0, start: HngParams | None = None, max_iters: int = 4000):
    """P-measure QMLE of the HNG model on daily returns (chi left at 1)."""
    R = np.asarray(returns, dtype=float)
    s = start or HngParams(lam=2.0, omega=1e-6, beta=0.8, tau1=150.0, tau2=3e-6, r=r)
    x0 = np.array([s.lam, math.log(max(s.omega, 1e-12)), math.log(s.tau2), s.tau1,
                   math.log((s.beta + s.tau2 * s.tau1**2) / (1 - s.beta - s.tau2 * s.tau1**2))])
    h1 = float(np.var(R))

    def nll(x):
        kw = _unpack(x, r)
        if kw["beta"] < 0:
            return 1e10
        try:
            ll, _ = hng_loglik(R, HngParams(**kw), h1)
        except ValueError:
            return 1e10
        return -ll if math.isfinite(ll) else 1e10

    res = minimize(nll, x0, method="Nelder-Mead",
                   options={"maxiter": max_iters, "xatol": 1e-8, "fatol": 1e-8})
    return HngParams(**_unpack(res.x, r)), -res.fun


def reference_hng(r: float = 0.0, log_mean_h: float = -9.0665) -> HngParams:
    """Reference HNG values on the same scale; omega is implied by log E(h) and clipped at 0."""
    lam, beta, tau1, tau2, chi = 2.9196, 0.6601, 468.59, 1.49e-6, 1.1512
    pers = beta + tau2 * tau1**2
    omega = max(math.exp(log_mean_h) * (1.0 - pers) - tau2, 0.0)
    return HngParams(lam=lam, omega=omega, beta=beta, tau1=tau1, tau2=tau2, chi=chi, r=r)
