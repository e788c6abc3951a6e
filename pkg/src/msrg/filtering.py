"""Forward filter for the hidden regime and the P-measure quasi-likelihood.

The conditional variance path is a deterministic function of the data, so
the filter only has to carry the regime probabilities.  The likelihood is
defined on ``y = log x`` (no log-normal Jacobian).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np

from .model import PhysicalParams, StateDistribution, stationary_distribution, stationary_log_mean

__all__ = [
    "FilterOutput",
    "FilterUnderflow",
    "return_density",
    "measurement_density",
    "filter_step",
    "run_filter",
    "bruteforce_loglik",
]

_LOG_2PI = math.log(2.0 * math.pi)


class FilterUnderflow(FloatingPointError):
    """Total likelihood of an observation is exactly zero."""


@dataclass(frozen=True)
class FilterOutput:
    loglik: float
    increments: np.ndarray   # per-day log-likelihood contributions
    pred_probs: np.ndarray   # row t: P_t(s_{t+1})
    filt_probs: np.ndarray   # row t: P_t(s_t)
    log_h_path: np.ndarray
    z_path: np.ndarray
    log_h_next: float


def return_density(R, h, params: PhysicalParams):
    """Gaussian density of the log-return given the conditional variance ``h``."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ValueError("conditional variance must be positive")
    mean = params.r + params.lam * np.sqrt(h) - 0.5 * h
    out = np.exp(-0.5 * (R - mean) ** 2 / h) / np.sqrt(2.0 * np.pi * h)
    return out if out.ndim else float(out)


def measurement_density(log_x, z, log_h, state: int, params: PhysicalParams):
    if not params.sigma_u > 0:
        raise ValueError("sigma_u must be positive")
    mean = (params.xi[state] + params.phi * log_h + params.delta1 * z
            + params.delta2 * (z * z - 1.0))
    s = params.sigma_u
    return np.exp(-0.5 * ((log_x - mean) / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)


def _residual(R, log_h, params):
    h = math.exp(log_h)
    sh = math.sqrt(h)
    return (R - params.r - params.lam * sh + 0.5 * h) / sh


def filter_step(pred: StateDistribution, R: float, log_x: float, log_h: float,
                params: PhysicalParams):
    """One Bayes update and one-step prediction.

    Returns ``(filt, pred_next, increment, log_h_next)``.
    """
    p = np.asarray(getattr(pred, "probs", pred), dtype=float)
    z = _residual(R, log_h, params)
    zz = z * z - 1.0
    base = params.phi * log_h + params.delta1 * z + params.delta2 * zz
    resid = (log_x - params.xi - base) / params.sigma_u
    log_m = -0.5 * resid**2 - 0.5 * _LOG_2PI - math.log(params.sigma_u)
    top = log_m.max()
    w = p * np.exp(log_m - top)
    total = w.sum()
    if not total > 0:
        raise FilterUnderflow("observation has zero likelihood under every regime")
    filt = w / total
    pred_next = filt @ params.trans
    log_r = -0.5 * (_LOG_2PI + log_h) - 0.5 * z * z
    inc = log_r + top + math.log(total)
    log_h_next = (params.omega + params.beta * log_h + params.gamma * log_x
                  + params.tau1 * z + params.tau2 * zz)
    return StateDistribution(filt / filt.sum()), StateDistribution(pred_next / pred_next.sum()), inc, log_h_next


@numba.njit(cache=True)
def _filter_core(R, y, log_h1, p0, xi, trans, r, lam, omega, beta, gamma,
                 tau1, tau2, phi, d1, d2, sig):
    T = R.shape[0]
    n = xi.shape[0]
    inc = np.empty(T)
    filt = np.empty((T, n))
    pred = np.empty((T, n))
    log_h = np.empty(T)
    zs = np.empty(T)
    lm = np.empty(n)
    w = np.empty(n)
    p = p0.copy()
    lh = log_h1
    half_log_2pi = 0.5 * math.log(2.0 * math.pi)
    log_sig = math.log(sig)
    ok = True
    for t in range(T):
        log_h[t] = lh
        h = math.exp(lh)
        sh = math.sqrt(h)
        z = (R[t] - r - lam * sh + 0.5 * h) / sh
        zs[t] = z
        zz = z * z - 1.0
        base = phi * lh + d1 * z + d2 * zz
        top = -np.inf
        for j in range(n):
            e = (y[t] - xi[j] - base) / sig
            lm[j] = -0.5 * e * e - half_log_2pi - log_sig
            if lm[j] > top:
                top = lm[j]
        total = 0.0
        for j in range(n):
            w[j] = p[j] * math.exp(lm[j] - top)
            total += w[j]
        if not total > 0.0:
            ok = False
            inc[t] = -np.inf
            filt[t:] = np.nan
            pred[t:] = np.nan
            log_h[t:] = np.nan
            zs[t:] = np.nan
            return inc, filt, pred, log_h, zs, np.nan, ok
        for j in range(n):
            filt[t, j] = w[j] / total
        for k in range(n):
            acc = 0.0
            for j in range(n):
                acc += filt[t, j] * trans[j, k]
            pred[t, k] = acc
        inc[t] = -half_log_2pi - 0.5 * lh - 0.5 * z * z + top + math.log(total)
        for k in range(n):
            p[k] = pred[t, k]
        lh = omega + beta * lh + gamma * y[t] + tau1 * z + tau2 * zz
    return inc, filt, pred, log_h, zs, lh, ok


def _initial(params, init, log_h1):
    if init is None:
        init = stationary_distribution(params.trans)
    p0 = np.asarray(getattr(init, "probs", init), dtype=float)
    if p0.shape != (params.n_states,):
        raise ValueError("initial distribution has the wrong number of states")
    if log_h1 is None:
        log_h1 = stationary_log_mean(params, p0)
    return p0, float(log_h1)


def run_filter(panel, params: PhysicalParams, init=None, log_h1=None,
               allow_underflow: bool = False) -> FilterOutput:
    """Filter a panel exposing ``returns`` and ``log_x`` arrays.

    ``init`` is P_0(s_1) (stationary law by default); ``log_h1`` is the first
    day's log variance (stationary log-mean under ``init`` by default).
    """
    R = np.ascontiguousarray(panel.returns, dtype=float)
    y = np.ascontiguousarray(panel.log_x, dtype=float)
    if R.size == 0:
        raise ValueError("empty panel")
    if R.shape != y.shape:
        raise ValueError("returns and log_x lengths differ")
    p0, lh1 = _initial(params, init, log_h1)
    inc, filt, pred, log_h, zs, lh_next, ok = _filter_core(
        R, y, lh1, p0, np.ascontiguousarray(params.xi), np.ascontiguousarray(params.trans),
        params.r, params.lam, params.omega, params.beta, params.gamma, params.tau1,
        params.tau2, params.phi, params.delta1, params.delta2, params.sigma_u)
    if not ok and not allow_underflow:
        t = int(np.flatnonzero(~np.isfinite(inc))[0])
        raise FilterUnderflow(f"zero likelihood at observation {t}")
    return FilterOutput(loglik=float(inc.sum()), increments=inc, pred_probs=pred,
                        filt_probs=filt, log_h_path=log_h, z_path=zs,
                        log_h_next=float(lh_next))


def bruteforce_loglik(returns, log_x, params: PhysicalParams, init=None,
                      log_h1=None) -> float:
    """Log-likelihood by summing over every regime path (exponential cost)."""
    R = np.asarray(returns, dtype=float)
    y = np.asarray(log_x, dtype=float)
    p0, lh = _initial(params, init, log_h1)
    T, n = R.size, params.n_states
    # the variance path does not depend on the regimes
    log_h = np.empty(T)
    z = np.empty(T)
    for t in range(T):
        log_h[t] = lh
        z[t] = _residual(R[t], lh, params)
        lh = (params.omega + params.beta * lh + params.gamma * y[t]
              + params.tau1 * z[t] + params.tau2 * (z[t] ** 2 - 1.0))
    log_r = -0.5 * (_LOG_2PI + log_h) - 0.5 * z**2
    mean = params.phi * log_h + params.delta1 * z + params.delta2 * (z**2 - 1.0)
    log_m = (-0.5 * ((y[:, None] - mean[:, None] - params.xi[None, :]) / params.sigma_u) ** 2
             - 0.5 * _LOG_2PI - math.log(params.sigma_u))
    with np.errstate(divide="ignore"):
        log_p0 = np.log(p0)
        log_trans = np.log(params.trans)
    terms = []
    for path in itertools.product(range(n), repeat=T):
        lp = log_p0[path[0]] + sum(log_trans[a, b] for a, b in zip(path, path[1:]))
        terms.append(lp + sum(log_m[t, s] for t, s in enumerate(path)))
    terms = np.array(terms)
    top = terms.max()
    return float(log_r.sum() + top + math.log(np.exp(terms - top).sum()))
