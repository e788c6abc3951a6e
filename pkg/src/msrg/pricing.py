"""Edgeworth-expansion option prices, Black-Scholes utilities and the MC oracle.

Maturities are counted in trading days and rates are daily log rates; the
Black-Scholes helpers annualize with 252 trading days per year.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .moments import cumulants_from_raw, raw_moments_all
from .risk_neutral import QParams, pair_mean_se, simulate_q

__all__ = [
    "OptionQuote",
    "PriceResult",
    "MomentCache",
    "TRADING_DAYS",
    "hermite",
    "edgeworth_density",
    "call_price_state",
    "call_price_vec",
    "price",
    "bs_price",
    "bs_vega",
    "implied_vol",
    "mc_price",
    "strike_monotonicity_violations",
]

TRADING_DAYS = 252


@dataclass(frozen=True)
class OptionQuote:
    spot: float
    strike: float
    dtm_days: int
    rate: float = 0.0
    kind: str = "call"
    market_price: float | None = None

    def __post_init__(self):
        if not (self.spot > 0 and self.strike > 0):
            raise ValueError("spot and strike must be positive")
        if int(self.dtm_days) < 1:
            raise ValueError("dtm_days must be >= 1")
        if self.kind not in ("call", "put"):
            raise ValueError(f"kind must be 'call' or 'put', got {self.kind!r}")
        object.__setattr__(self, "dtm_days", int(self.dtm_days))

    @property
    def years(self) -> float:
        return self.dtm_days / TRADING_DAYS

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.dtm_days)


@dataclass
class PriceResult:
    price: float
    state_prices: np.ndarray
    weights: np.ndarray
    cumulants: np.ndarray          # rows (mu, sigma_RT, kappa3, kappa4) per state
    implied_vol: float = float("nan")
    floored: bool = False
    flags: list = field(default_factory=list)


# ---------------------------------------------------------------------------

def hermite(n: int, z):
    """Probabilists' Hermite polynomial of order 3, 4 or 6."""
    z = np.asarray(z, dtype=float)
    if n == 3:
        out = z**3 - 3 * z
    elif n == 4:
        out = z**4 - 6 * z**2 + 3
    elif n == 6:
        out = z**6 - 15 * z**4 + 45 * z**2 - 15
    else:
        raise ValueError("only orders 3, 4 and 6 are used")
    return out if out.ndim else float(out)


def edgeworth_density(z, kappa3, kappa4):
    """Second-order Edgeworth approximation to the density of the negated standardized return."""
    z = np.asarray(z, dtype=float)
    corr = (1.0 - kappa3 / 6.0 * hermite(3, z) + (kappa4 - 3.0) / 24.0 * hermite(4, z)
            + kappa3**2 / 72.0 * hermite(6, z))
    out = corr * norm.pdf(z)
    return out if out.ndim else float(out)


def _edgeworth_terms(S, K, mu, sig, rT):
    d = (math.log(S / K) + mu) / sig + sig
    # forward adjustment that makes A0 collapse to Black-Scholes
    scale = S * math.exp(mu + 0.5 * sig * sig - rT)
    pdf, cdf = norm.pdf(d), norm.cdf(d)
    A0 = scale * cdf - K * math.exp(-rT) * norm.cdf(d - sig)
    A3 = scale * sig * ((2 * sig - d) * pdf + sig**2 * cdf)
    A4 = scale * sig * ((d * d - 1 - 3 * sig * (d - sig)) * pdf + sig**3 * cdf)
    A6 = scale * sig * (sig**5 * cdf
                        + (3 - 6 * d * d + d**4
                           + 5 * sig * (d - (d - sig) * (sig * d - 2) - (d - sig) ** 3)) * pdf)
    return A0, A3, A4, A6


def call_price_state(quote: OptionQuote, mu: float, sigma_rt: float, kappa3: float,
                     kappa4: float) -> float:
    """Edgeworth call price given the conditional cumulants of R_T (not floored)."""
    if not sigma_rt > 0:
        raise ValueError("sigma_RT must be positive")
    rT = quote.rate * quote.dtm_days
    A0, A3, A4, A6 = _edgeworth_terms(quote.spot, quote.strike, mu, sigma_rt, rT)
    return A0 + kappa3 / 6 * A3 + (kappa4 - 3) / 24 * A4 + kappa3**2 / 72 * A6


def call_price_vec(spot, strike, dtm_days, rate, mu, sigma_rt, kappa3, kappa4):
    """Array version of :func:`call_price_state` (broadcasting inputs)."""
    S, K = np.asarray(spot, dtype=float), np.asarray(strike, dtype=float)
    rT = np.asarray(rate, dtype=float) * np.asarray(dtm_days, dtype=float)
    sig = np.asarray(sigma_rt, dtype=float)
    if np.any(sig <= 0):
        raise ValueError("sigma_RT must be positive")
    d = (np.log(S / K) + mu) / sig + sig
    scale = S * np.exp(mu + 0.5 * sig * sig - rT)
    pdf, cdf = norm.pdf(d), norm.cdf(d)
    A0 = scale * cdf - K * np.exp(-rT) * norm.cdf(d - sig)
    A3 = scale * sig * ((2 * sig - d) * pdf + sig**2 * cdf)
    A4 = scale * sig * ((d * d - 1 - 3 * sig * (d - sig)) * pdf + sig**3 * cdf)
    A6 = scale * sig * (sig**5 * cdf
                        + (3 - 6 * d * d + d**4
                           + 5 * sig * (d - (d - sig) * (sig * d - 2) - (d - sig) ** 3)) * pdf)
    return A0 + kappa3 / 6 * A3 + (kappa4 - 3) / 24 * A4 + kappa3**2 / 72 * A6


class MomentCache:
    """Memo of per-state cumulants keyed by (Q parameters, maturity, log h_1)."""

    def __init__(self):
        self._store: dict = {}

    def cumulants(self, q: QParams, T: int, log_h1) -> np.ndarray:
        """Array ``(len(log_h1), N, 4)`` of (mu, sigma_RT, kappa3, kappa4)."""
        lh = np.atleast_1d(np.asarray(log_h1, dtype=float))
        qk = q.key()
        missing = [v for v in np.unique(lh) if (qk, T, float(v)) not in self._store]
        if missing:
            raw = raw_moments_all(q, T, np.array(missing))
            cums = np.stack(cumulants_from_raw(*np.moveaxis(raw, -1, 0)), axis=-1)
            for v, c in zip(missing, cums):
                self._store[(qk, T, float(v))] = c
        return np.stack([self._store[(qk, T, float(v))] for v in lh])

    def clear(self):
        self._store.clear()


def price(quote: OptionQuote, filt, q: QParams, log_h1: float,
          cache: MomentCache | None = None) -> PriceResult:
    """Regime-mixture Edgeworth price; puts follow from put-call parity."""
    weights = np.asarray(getattr(filt, "probs", filt), dtype=float)
    cache = cache or MomentCache()
    cums = cache.cumulants(q, quote.dtm_days, log_h1)[0]
    calls = np.array([call_price_state(quote, *c) for c in cums])
    call = float(weights @ calls)
    flags = []
    if quote.kind == "call":
        value = call
    else:
        value = call - quote.spot + quote.strike * quote.discount
    floored = value < 0
    if floored:
        flags.append("negative approximate price floored at 0")
        value = 0.0
    state_prices = calls if quote.kind == "call" else \
        calls - quote.spot + quote.strike * quote.discount
    iv = float("nan")
    try:
        iv = implied_vol(quote, value)
    except ValueError as exc:
        flags.append(f"implied vol: {exc}")
    return PriceResult(price=value, state_prices=state_prices, weights=weights,
                       cumulants=cums, implied_vol=iv, floored=floored, flags=flags)


def strike_monotonicity_violations(strikes, calls) -> list[tuple[float, float]]:
    """Adjacent strike pairs where the call price increases."""
    order = np.argsort(strikes)
    k = np.asarray(strikes, dtype=float)[order]
    c = np.asarray(calls, dtype=float)[order]
    return [(k[i], k[i + 1]) for i in range(len(k) - 1) if c[i + 1] > c[i]]


# ---------------------------------------------------------------------------
# Black-Scholes

def bs_price(quote: OptionQuote, vol: float) -> float:
    """Black-Scholes price with annualized ``vol``."""
    tau = quote.years
    sd = vol * math.sqrt(tau)
    S, K, df = quote.spot, quote.strike, quote.discount
    if sd <= 0:
        fwd = S - K * df
        return max(fwd, 0.0) if quote.kind == "call" else max(-fwd, 0.0)
    d1 = (math.log(S / (K * df)) + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    if quote.kind == "call":
        return S * norm.cdf(d1) - K * df * norm.cdf(d2)
    return K * df * norm.cdf(-d2) - S * norm.cdf(-d1)


def bs_vega(quote: OptionQuote, vol: float) -> float:
    tau = quote.years
    sd = vol * math.sqrt(tau)
    d1 = (math.log(quote.spot / (quote.strike * quote.discount)) + 0.5 * sd * sd) / sd
    return quote.spot * norm.pdf(d1) * math.sqrt(tau)


def bs_delta(quote: OptionQuote, vol: float) -> float:
    sd = vol * math.sqrt(quote.years)
    d1 = (math.log(quote.spot / (quote.strike * quote.discount)) + 0.5 * sd * sd) / sd
    return norm.cdf(d1) if quote.kind == "call" else norm.cdf(d1) - 1.0


def implied_vol(quote: OptionQuote, target: float, lo: float = 1e-6, hi: float = 5.0) -> float:
    """Black-Scholes implied volatility on ``[lo, hi]`` (annualized)."""
    S, K, df = quote.spot, quote.strike, quote.discount
    if quote.kind == "call":
        lower, upper = max(S - K * df, 0.0), S
    else:
        lower, upper = max(K * df - S, 0.0), K * df
    if not lower <= target < upper:
        raise ValueError(f"price {target:.6g} outside no-arbitrage bounds [{lower:.6g}, {upper:.6g})")
    f = lambda v: bs_price(quote, v) - target
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValueError("implied volatility outside the search bracket")
    if f_lo == 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


# ---------------------------------------------------------------------------

def mc_price(quote: OptionQuote, q: QParams, filt, log_h1: float, paths: int, seed: int,
             antithetic: bool = True) -> tuple[float, float]:
    """Discounted payoff mean and its standard error under regime-aware Q-simulation."""
    if paths < 1:
        raise ValueError("paths must be >= 1")
    probs = np.asarray(getattr(filt, "probs", filt), dtype=float)
    sim = simulate_q(q, log_h1, probs, quote.dtm_days, paths, seed, antithetic=antithetic)
    ST = quote.spot * np.exp(sim.cum_returns[0])
    if quote.kind == "call":
        payoff = np.maximum(ST - quote.strike, 0.0)
    else:
        payoff = np.maximum(quote.strike - ST, 0.0)
    mean, se = pair_mean_se(payoff * quote.discount, antithetic=antithetic)
    return mean, se


def _warn_drop(what: str, count: int):
    if count:
        warnings.warn(f"dropped {count} {what}", RuntimeWarning, stacklevel=3)
