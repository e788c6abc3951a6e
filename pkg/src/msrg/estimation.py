"""Quasi-maximum-likelihood estimation, sandwich standard errors and fit diagnostics.

Two objectives are supported: the returns/realized-measure likelihood from
the filter (``p-only``) and that likelihood plus a profiled Gaussian
likelihood of vega-weighted option pricing errors (``joint``).
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .filtering import FilterOutput, run_filter
from .model import PhysicalParams, omega_from_log_mean, stationary_log_mean, validate
from .moments import cumulants_from_raw, raw_moments_all
from .panel import MarketPanel, OptionPanel
from .pricing import OptionQuote, bs_vega, call_price_vec, implied_vol
from .risk_neutral import KernelParams, to_q, vix

__all__ = [
    "EstimationConfig",
    "FitReport",
    "ParamSpace",
    "SandwichResult",
    "estimate",
    "robust_se",
    "vega_weighted_errors",
    "option_loglik",
    "model_prices",
    "mixture_prices",
    "model_vix",
    "rmse_iv",
    "joint_loglik",
    "synthetic_options",
    "DELTA_EDGES",
    "DTM_EDGES",
    "VIX_EDGES",
]

# bucket edges for the partitioned RMSE (interior cut points)
DELTA_EDGES = (0.3, 0.4, 0.5, 0.6, 0.7)
DTM_EDGES = (30, 60, 90, 120, 150)
VIX_EDGES = (15, 20, 25, 30, 35)

_BAD = 1e12
_EVAL_ERRORS = (ValueError, FloatingPointError, OverflowError, ZeroDivisionError,
                np.linalg.LinAlgError)


@dataclass(frozen=True)
class EstimationConfig:
    """Optimizer settings.

    ``joint_iters`` bounds the final all-parameter simplex run in joint mode;
    the earlier stages fit the P-parameters alone and then the kernel with
    the P-parameters held fixed.
    """

    mode: str = "p-only"
    n_states: int = 2
    max_iters: int = 6000
    restarts: int = 8
    tolerance: float = 1e-7
    seed: int = 0
    polish: bool = True
    polish_iters: int = 3000
    joint_iters: int = 1500
    start_spread: float = 1.0
    fd_step: float = 1e-5
    compute_se: bool = True
    r: float = 0.0

    def __post_init__(self):
        if self.mode not in ("p-only", "joint"):
            raise ValueError("mode must be 'p-only' or 'joint'")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SandwichResult:
    se: np.ndarray
    cov: np.ndarray
    hessian: np.ndarray
    opg: np.ndarray
    singular: bool
    flags: list = field(default_factory=list)


@dataclass
class FitReport:
    params: PhysicalParams
    kernel: KernelParams | None
    loglik_p: float
    loglik_q: float
    loglik_total: float
    sigma_e: float | None
    se: dict
    converged: bool
    diagnostics: dict
    rmse: dict | None
    config: EstimationConfig

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "kernel": None if self.kernel is None else
            {"chi": self.kernel.chi.tolist(), "psi": self.kernel.psi},
            "loglik_p": self.loglik_p,
            "loglik_q": self.loglik_q,
            "loglik_total": self.loglik_total,
            "sigma_e": self.sigma_e,
            "se": self.se,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
            "rmse": self.rmse,
            "config": self.config.to_dict(),
        }


# ---------------------------------------------------------------------------
# parameter transforms

class ParamSpace:
    """Maps between model parameters, an unconstrained search vector and
    the natural coordinates used for standard errors.

    Search vector: ``lam, log_mean, atanh(rho), gamma, phi, tau1, tau2,
    delta1, delta2, log sigma_u``, then per-regime log-x levels
    ``xi_j + phi*log_mean``, then off-diagonal transition logits (row-wise,
    diagonal logit pinned at 0), then ``chi`` in joint mode.  The intercept
    omega is implied by ``log_mean``, the stationary mean of log h.
    """

    _SCALAR = ("lam", "log_mean", "beta", "gamma", "phi", "tau1", "tau2",
               "delta1", "delta2", "sigma_u")

    def __init__(self, n_states: int, joint: bool, r: float = 0.0):
        self.n = n_states
        self.joint = joint
        self.r = r
        self.off = [(i, j) for i in range(n_states) for j in range(n_states) if i != j]

    @property
    def names(self) -> list[str]:
        out = list(self._SCALAR) + [f"xi_{j}" for j in range(self.n)]
        out += [f"trans_{i}_{j}" for i, j in self.off]
        if self.joint:
            out += [f"chi_{j}" for j in range(self.n)]
        return out

    @property
    def size(self) -> int:
        return 10 + self.n + len(self.off) + (self.n if self.joint else 0)

    def _trans_from_logits(self, logits):
        L = np.zeros((self.n, self.n))
        for (i, j), v in zip(self.off, logits):
            L[i, j] = v
        L -= L.max(axis=1, keepdims=True)
        E = np.exp(L)
        return E / E.sum(axis=1, keepdims=True)

    def _build(self, lam, log_mean, beta, gamma, phi, tau1, tau2, d1, d2, sig, xi, trans, chi):
        omega = omega_from_log_mean(log_mean, beta, gamma, phi, xi, trans)
        params = PhysicalParams(lam=lam, omega=omega, beta=beta, gamma=gamma, tau1=tau1,
                                tau2=tau2, phi=phi, delta1=d1, delta2=d2, sigma_u=sig,
                                xi=xi, trans=trans, r=self.r)
        kernel = KernelParams.for_params(params, chi) if chi is not None else None
        return params, kernel

    def to_params(self, x):
        x = np.asarray(x, dtype=float)
        lam, log_mean, a_rho, gamma, phi, tau1, tau2, d1, d2, log_sig = x[:10]
        n = self.n
        levels = x[10:10 + n]
        logits = x[10 + n:10 + n + len(self.off)]
        chi = x[10 + n + len(self.off):] if self.joint else None
        rho = math.tanh(a_rho)
        xi = levels - phi * log_mean
        return self._build(lam, log_mean, rho - gamma * phi, gamma, phi, tau1, tau2, d1, d2,
                           math.exp(log_sig), xi, self._trans_from_logits(logits), chi)

    def from_params(self, params: PhysicalParams, kernel: KernelParams | None = None):
        m = stationary_log_mean(params)
        x = [params.lam, m, math.atanh(params.rho), params.gamma, params.phi, params.tau1,
             params.tau2, params.delta1, params.delta2, math.log(params.sigma_u)]
        x += list(params.xi + params.phi * m)
        with np.errstate(divide="ignore"):
            logP = np.log(params.trans)
        for i, j in self.off:
            x.append(max(logP[i, j] - logP[i, i], -30.0))
        if self.joint:
            x += list(kernel.chi if kernel is not None else np.zeros(self.n))
        return np.array(x)

    def natural(self, params: PhysicalParams, kernel: KernelParams | None = None):
        """Coordinates for standard errors; transitions enter as log-odds
        ``log(trans[i, j] / trans[i, i])``."""
        v = [params.lam, stationary_log_mean(params), params.beta, params.gamma, params.phi,
             params.tau1, params.tau2, params.delta1, params.delta2, params.sigma_u]
        v += list(params.xi)
        with np.errstate(divide="ignore"):
            logP = np.log(params.trans)
        v += [logP[i, j] - logP[i, i] for i, j in self.off]
        if self.joint:
            v += list(kernel.chi)
        return np.array(v)

    def natural_names(self) -> list[str]:
        return [f"logodds_{n}" if n.startswith("trans_") else n for n in self.names]

    def from_natural(self, v):
        v = np.asarray(v, dtype=float)
        n = self.n
        lam, log_mean, beta, gamma, phi, tau1, tau2, d1, d2, sig = v[:10]
        xi = v[10:10 + n]
        trans = self._trans_from_logits(v[10 + n:10 + n + len(self.off)])
        chi = v[10 + n + len(self.off):] if self.joint else None
        return self._build(lam, log_mean, beta, gamma, phi, tau1, tau2, d1, d2, sig, xi,
                           trans, chi)

    def trans_jacobian(self, params: PhysicalParams) -> np.ndarray:
        """d trans[i, j] / d logodds[i, k] over the off-diagonal entries."""
        J = np.zeros((len(self.off), len(self.off)))
        P = params.trans
        for a, (i, j) in enumerate(self.off):
            for b, (i2, k) in enumerate(self.off):
                if i == i2:
                    J[a, b] = P[i, j] * ((j == k) - P[i, k])
        return J

    def steps(self, natural_vec, rel: float):
        return rel * np.maximum(np.abs(natural_vec), 1e-2)

    def scales(self) -> np.ndarray:
        s = [0.02, 0.2, 0.2, 0.03, 0.05, 0.03, 0.02, 0.03, 0.03, 0.05]
        s += [0.1] * self.n + [0.5] * len(self.off)
        if self.joint:
            s += [0.2] * self.n
        return np.array(s)

    def relabel(self, params: PhysicalParams, kernel: KernelParams | None):
        """Order regimes by increasing xi."""
        order = np.argsort(params.xi, kind="stable")
        if np.all(order == np.arange(self.n)):
            return params, kernel
        p = params.replace(xi=params.xi[order], trans=params.trans[np.ix_(order, order)])
        k = None if kernel is None else KernelParams(chi=kernel.chi[order], psi=kernel.psi)
        return p, k


def _center(panel: MarketPanel, space: ParamSpace) -> np.ndarray:
    """Data-driven starting point in the search coordinates."""
    R, y = panel.returns, panel.log_x
    m = math.log(max(float(np.var(R)), 1e-12)) - 0.3
    n = space.n
    level = float(np.mean(y))
    spread = 0.5 * float(np.std(y)) if n > 1 else 0.0
    levels = level + np.linspace(-spread, spread, n) * 0.3
    x = [0.03, m, math.atanh(0.97), 0.15, 1.0, -0.1, 0.0, -0.1, 0.1,
         math.log(max(0.5 * float(np.std(np.diff(y))), 0.05))]
    x += list(levels)
    x += [math.log(0.01 / 0.99)] * len(space.off)
    if space.joint:
        x += [0.0] * n
    return np.array(x)


def _kmeans_1d(values, k, iters=50):
    centers = np.quantile(values, (np.arange(k) + 0.5) / k)
    for _ in range(iters):
        labels = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        new = np.array([values[labels == j].mean() if np.any(labels == j) else centers[j]
                        for j in range(k)])
        if np.allclose(new, centers):
            break
        centers = new
    return np.sort(centers), np.argsort(np.argsort(centers))[labels]


def _regime_split_start(panel: MarketPanel, space: ParamSpace, cfg) -> np.ndarray:
    """Fit one regime, then split on slow-moving measurement residuals."""
    one = ParamSpace(1, joint=False, r=space.r)
    obj = _Objective(panel, one, joint=False)
    res = _nelder_mead(obj, _center(panel, one), one.scales(), cfg.max_iters, cfg.tolerance, [])
    p1, _ = one.to_params(res.x)
    filt = run_filter(panel, p1)
    z = filt.z_path
    resid = panel.log_x - (p1.xi[0] + p1.phi * filt.log_h_path + p1.delta1 * z
                           + p1.delta2 * (z * z - 1.0))
    width = min(60, max(5, len(panel) // 50))
    smooth = np.convolve(resid, np.ones(width) / width, mode="same")
    centers, labels = _kmeans_1d(smooth, space.n)
    counts = np.ones((space.n, space.n))
    np.add.at(counts, (labels[:-1], labels[1:]), 1.0)
    trans = counts / counts.sum(axis=1, keepdims=True)
    xi = p1.xi[0] + centers - centers.mean()
    guess = p1.replace(xi=xi, trans=trans)
    return space.from_params(guess.replace(
        omega=omega_from_log_mean(stationary_log_mean(p1), p1.beta, p1.gamma, p1.phi, xi, trans)))


# ---------------------------------------------------------------------------
# option errors and likelihood

def vega_weighted_errors(options: OptionPanel, prices, vega=None, warn: bool = True):
    """``(model - market) / vega`` and the mask of quotes kept.

    Quotes with a zero or undefined Black-Scholes vega are dropped.
    """
    prices = np.asarray(prices, dtype=float)
    vega = options.market_vega if vega is None else np.asarray(vega, dtype=float)
    keep = np.isfinite(vega) & (vega > 0)
    dropped = int((~keep).sum())
    if dropped and warn:
        warnings.warn(f"dropped {dropped} quotes with zero vega", RuntimeWarning, stacklevel=2)
    errors = (prices[keep] - options.price[keep]) / vega[keep]
    return errors, keep


def option_loglik(errors, T_days: int, N_opts: int | None = None):
    """Profiled Gaussian log-likelihood of pricing errors scaled by T/N.

    Returns ``(loglik, sigma_e, floored)``.  A zero error variance is
    floored at ``1e-12`` and ``floored`` is set.
    """
    e = np.asarray(errors, dtype=float)
    N = e.size if N_opts is None else int(N_opts)
    if N < 1:
        raise ValueError("need at least one option")
    sig2 = float(np.mean(e * e))
    floored = sig2 < 1e-24
    sig2 = max(sig2, 1e-24)
    ll = (-0.5 * N * math.log(2 * math.pi) - 0.5 * N * math.log(sig2) - 0.5 * N) * T_days / N
    return ll, math.sqrt(sig2), floored


def _option_day_contrib(errors, days, T_days: int, n_days: int):
    """Per-day split of :func:`option_loglik` (sums to it exactly at the profiled variance)."""
    N = errors.size
    sig2 = max(float(np.mean(errors**2)), 1e-24)
    per = (-0.5 * math.log(2 * math.pi) - 0.5 * math.log(sig2)
           - 0.5 * errors**2 / sig2) * T_days / N
    return np.bincount(days, weights=per, minlength=n_days)


def _next_log_h(filt: FilterOutput) -> np.ndarray:
    return np.append(filt.log_h_path[1:], filt.log_h_next)


def mixture_prices(options: OptionPanel, q0, log_h1, weights) -> np.ndarray:
    """Regime-mixture Edgeworth prices given per-quote ``log h_1`` and regime weights.

    Quotes are grouped by (maturity, rate) so each group needs one batched
    moment computation.  Negative mixture prices are floored at zero.
    """
    opts = options
    lh = np.asarray(log_h1, dtype=float)
    W = np.asarray(weights, dtype=float)
    calls = np.empty(len(opts))
    keys = np.stack([opts.dtm_days.astype(float), opts.rate])
    uniq, inv = np.unique(keys, axis=1, return_inverse=True)
    inv = np.ravel(inv)
    for g in range(uniq.shape[1]):
        T, rate = int(uniq[0, g]), float(uniq[1, g])
        idx = np.flatnonzero(inv == g)
        q = q0.replace(r=rate) if rate != q0.r else q0
        u, back = np.unique(lh[idx], return_inverse=True)
        raw = raw_moments_all(q, T, u)
        mu, sd, k3, k4 = cumulants_from_raw(*np.moveaxis(raw, -1, 0))
        st = call_price_vec(opts.spot[idx, None], opts.strike[idx, None], T, rate,
                            mu[back], sd[back], k3[back], k4[back])
        calls[idx] = np.sum(W[idx] * st, axis=1)
    disc_k = opts.strike * np.exp(-opts.rate * opts.dtm_days)
    out = np.where(opts.is_call, calls, calls - opts.spot + disc_k)
    return np.maximum(out, 0.0)


def model_prices(panel: MarketPanel, params: PhysicalParams, kernel: KernelParams,
                 filt: FilterOutput | None = None) -> np.ndarray:
    """Edgeworth regime-mixture prices for every quote in ``panel.options``.

    A quote on day ``d`` uses the filtered regime law ``P_d(s_d)`` and the
    variance ``h_{d+1}`` that is known at the close of day ``d``.
    """
    opts = panel.options
    filt = filt or run_filter(panel, params)
    lh_next = _next_log_h(filt)
    return mixture_prices(opts, to_q(params, kernel), lh_next[opts.day], filt.filt_probs[opts.day])


def model_vix(panel: MarketPanel, params: PhysicalParams, kernel: KernelParams,
              filt: FilterOutput | None = None) -> np.ndarray:
    """Model VIX for every day of the panel."""
    filt = filt or run_filter(panel, params)
    q = to_q(params, kernel)
    lh = _next_log_h(filt)
    return np.array([vix(lh[d], filt.filt_probs[d], q) for d in range(len(panel))])


def joint_loglik(panel: MarketPanel, params: PhysicalParams, kernel: KernelParams | None,
                 keep=None, per_day: bool = False):
    """``(loglik_p, loglik_o, sigma_e)`` or per-day contributions of their sum."""
    filt = run_filter(panel, params)
    if kernel is None or panel.options is None or not len(panel.options):
        return filt.increments.copy() if per_day else (filt.loglik, 0.0, None)
    opts = panel.options
    if keep is None:
        keep = np.isfinite(opts.market_vega) & (opts.market_vega > 0)
    prices = model_prices(panel, params, kernel, filt)
    e = (prices[keep] - opts.price[keep]) / opts.market_vega[keep]
    if not np.all(np.isfinite(e)):
        raise FloatingPointError("non-finite model price")
    if per_day:
        return filt.increments + _option_day_contrib(e, opts.day[keep], len(panel), len(panel))
    ll_o, sig, _ = option_loglik(e, len(panel))
    return filt.loglik, ll_o, sig


# ---------------------------------------------------------------------------
# sandwich standard errors

def robust_se(per_obs_fn, theta, step: float = 1e-5, steps=None,
              hess_factor: float = 10.0) -> SandwichResult:
    """Sandwich covariance ``H^-1 S H^-1`` from central differences.

    ``per_obs_fn(theta)`` returns the vector of per-observation
    log-likelihood contributions.  Scores use the step
    ``step * max(|theta_k|, 1e-2)`` (or ``steps``); the Hessian uses
    ``hess_factor`` times that step, since second differences lose twice
    as many digits to rounding.  A singular Hessian is inverted with the
    pseudo-inverse and flagged.
    """
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = step * np.maximum(np.abs(theta), 1e-2) if steps is None else np.asarray(steps, float)
    scores = np.stack([(np.asarray(per_obs_fn(theta + e), dtype=float)
                        - np.asarray(per_obs_fn(theta - e), dtype=float)) / (2 * h[i])
                       for i, e in enumerate(np.diag(h))], axis=1)
    hh = hess_factor * h
    total = lambda v: float(np.sum(per_obs_fn(v)))
    f0 = total(theta)
    H = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = hh[i]
        H[i, i] = (total(theta + ei) - 2 * f0 + total(theta - ei)) / hh[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = hh[j]
            H[i, j] = H[j, i] = (total(theta + ei + ej) - total(theta + ei - ej)
                                 - total(theta - ei + ej) + total(theta - ei - ej)) \
                / (4 * hh[i] * hh[j])
    S = scores.T @ scores
    flags = []
    singular = False
    if not np.all(np.isfinite(H)):
        singular = True
        flags.append("non-finite Hessian")
        Hinv = np.full((k, k), np.nan)
    else:
        cond = np.linalg.cond(H)
        if not np.isfinite(cond) or cond > 1e12:
            singular = True
            flags.append(f"singular Hessian (condition {cond:.3g}); pseudo-inverse used")
            Hinv = np.linalg.pinv(H, rcond=1e-12)
        else:
            Hinv = np.linalg.inv(H)
    if np.all(np.isfinite(H)) and np.max(np.linalg.eigvalsh(0.5 * (H + H.T))) >= 0:
        flags.append("Hessian not negative definite: not a strict local maximum")
    cov = Hinv @ S @ Hinv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if singular:
        se = np.where(np.diag(cov) > 0, se, np.nan)
    return SandwichResult(se=se, cov=cov, hessian=H, opg=S, singular=singular, flags=flags)


# ---------------------------------------------------------------------------
# implied-volatility RMSE

def _bucket_labels(edges):
    lab = [f"<{edges[0]}"]
    lab += [f"{a}-{b}" for a, b in zip(edges, edges[1:])]
    lab.append(f">={edges[-1]}")
    return lab


def _partition(values, edges, gaps):
    labels = _bucket_labels(edges)
    b = np.digitize(values, edges)
    out = {}
    for k, lab in enumerate(labels):
        sel = (b == k) & np.isfinite(values)
        if sel.any():
            out[lab] = {"rmse": float(100 * math.sqrt(np.mean(gaps[sel] ** 2))), "n": int(sel.sum())}
    return out


def rmse_iv(options: OptionPanel, prices, vix_values=None) -> dict:
    """Implied-volatility RMSE (in percent) overall and by delta, maturity and VIX bucket.

    Quotes whose model or market implied volatility cannot be inverted are
    dropped and counted.  ``vix_values`` fills in missing market VIX levels.
    """
    prices = np.asarray(prices, dtype=float)
    market = options.market_iv
    model = np.full(len(options), np.nan)
    for i in range(len(options)):
        if not np.isfinite(market[i]):
            continue
        try:
            model[i] = implied_vol(options.quote(i), prices[i])
        except ValueError:
            pass
    ok = np.isfinite(model) & np.isfinite(market)
    gaps = (model - market)[ok]
    dropped = int((~ok).sum())
    if dropped:
        warnings.warn(f"dropped {dropped} quotes with failed IV inversion", RuntimeWarning,
                      stacklevel=2)
    if not ok.any():
        return {"overall": float("nan"), "n": 0, "dropped": dropped}
    vx = options.vix.copy()
    if vix_values is not None:
        vv = np.asarray(vix_values, dtype=float)
        vx = np.where(np.isfinite(vx), vx, vv)
    return {
        "overall": float(100 * math.sqrt(np.mean(gaps**2))),
        "n": int(ok.sum()),
        "dropped": dropped,
        "by_delta": _partition(options.call_delta[ok], DELTA_EDGES, gaps),
        "by_dtm": _partition(options.dtm_calendar[ok], DTM_EDGES, gaps),
        "by_vix": _partition(vx[ok], VIX_EDGES, gaps),
    }


# ---------------------------------------------------------------------------
# optimizer driver

class _Objective:
    """Negative log-likelihood in search coordinates with a best-so-far record."""

    def __init__(self, panel, space: ParamSpace, joint: bool, keep=None, fixed_p=None):
        self.panel = panel
        self.space = space
        self.joint = joint
        self.keep = keep
        self.fixed_p = fixed_p        # search vector of P-part when only chi moves
        self.n_evals = 0
        self.best_f = math.inf
        self.best_x = None
        self._seen: dict = {}

    def full(self, x):
        if self.fixed_p is None:
            return np.asarray(x, dtype=float)
        return np.concatenate([self.fixed_p, x])

    def __call__(self, x):
        self.n_evals += 1
        xf = self.full(x)
        try:
            params, kernel = self.space.to_params(xf)
            if validate(params):
                raise ValueError("invalid parameters")
            if self.joint:
                lp, lo, _ = joint_loglik(self.panel, params, kernel, self.keep)
                val = -(lp + lo)
            else:
                val = -run_filter(self.panel, params).loglik
        except _EVAL_ERRORS:
            val = _BAD
        if not math.isfinite(val):
            val = _BAD
        self._seen[np.asarray(x, dtype=float).tobytes()] = val
        if val < self.best_f:
            self.best_f, self.best_x = val, xf.copy()
        return val

    def value_at(self, x) -> float:
        key = np.asarray(x, dtype=float).tobytes()
        return self._seen[key] if key in self._seen else self(x)


def _nelder_mead(obj, x0, scales, max_iters, tol, history):
    simplex = np.vstack([x0] + [x0 + np.eye(x0.size)[i] * scales[i] for i in range(x0.size)])
    trace = []

    def cb(xk, *args):
        trace.append(-obj.value_at(xk))

    res = minimize(obj, x0, method="Nelder-Mead", callback=cb,
                   options={"maxiter": max_iters, "maxfev": 2 * max_iters, "xatol": tol,
                            "fatol": tol, "adaptive": x0.size > 8,
                            "initial_simplex": simplex})
    history.extend(trace)
    return res


def _minimize_from(obj, x0, scales, cfg: EstimationConfig, history):
    """Simplex runs restarted at the last optimum until the gain stalls, then Powell."""
    res = _nelder_mead(obj, x0, scales, cfg.max_iters, cfg.tolerance, history)
    x, f, ok = res.x, res.fun, bool(res.success)
    for _ in range(3):
        r2 = _nelder_mead(obj, x, scales * 0.2, cfg.max_iters, cfg.tolerance, history)
        gain = f - r2.fun
        if r2.fun < f:
            x, f = r2.x, r2.fun
        ok = ok or bool(r2.success)
        if gain < 1e-4:
            break
    if cfg.polish:
        r3 = minimize(obj, x, method="Powell",
                      options={"maxiter": cfg.polish_iters, "xtol": 1e-6, "ftol": 1e-10})
        if r3.fun < f:
            x, f = r3.x, r3.fun
            history.append(-f)
    return x, f, ok


def _natural_dict(space, params, kernel) -> dict:
    out = dict(zip(space.natural_names(), space.natural(params, kernel).tolist()))
    out.update({f"trans_{i}_{j}": float(params.trans[i, j]) for i, j in space.off})
    return out


def _se_report(panel, space, params, kernel, keep, cfg):
    nat = space.natural(params, kernel)

    def per_obs(v):
        try:
            p, k = space.from_natural(v)
            if validate(p):
                raise ValueError("invalid")
            return np.asarray(joint_loglik(panel, p, k, keep, per_day=True))
        except _EVAL_ERRORS:
            return np.full(len(panel), np.nan)

    sw = robust_se(per_obs, nat, steps=space.steps(nat, cfg.fd_step))
    se = {name: float(v) for name, v in zip(space.natural_names(), sw.se)}
    # probability-scale transition SEs by the delta method
    lo = 10 + space.n
    sl = slice(lo, lo + len(space.off))
    J = space.trans_jacobian(params)
    cov_p = J @ sw.cov[sl, sl] @ J.T
    for (i, j), v in zip(space.off, np.diag(cov_p)):
        se[f"trans_{i}_{j}"] = float(math.sqrt(v)) if v >= 0 else float("nan")
    return se, sw


def estimate(panel: MarketPanel, config: EstimationConfig | None = None,
             start: tuple | PhysicalParams | None = None) -> FitReport:
    """Maximize the quasi log-likelihood over random multi-start simplex runs.

    ``start`` (parameters, or a ``(params, kernel)`` pair) is used as the
    first starting point instead of the data-driven default.  Results are
    deterministic given ``config.seed``.
    """
    cfg = config or EstimationConfig()
    joint = cfg.mode == "joint"
    if joint and (panel.options is None or not len(panel.options)):
        raise ValueError("joint mode needs option quotes")
    space_p = ParamSpace(cfg.n_states, joint=False, r=cfg.r)
    rng = np.random.default_rng(cfg.seed)
    history: list = []
    diagnostics: dict = {"restarts": [], "stages": []}

    if isinstance(start, PhysicalParams):
        start = (start, None)
    generic = _center(panel, space_p)
    if start:
        center = space_p.from_params(start[0])
    elif cfg.n_states > 1:
        center = _regime_split_start(panel, space_p, cfg)
    else:
        center = generic
    scales = space_p.scales()
    # first the informed start, then the generic one, then random perturbations
    starts = [center, generic] if cfg.n_states > 1 or start else [center]

    # stage 1: P-measure parameters
    obj = _Objective(panel, space_p, joint=False)
    best_x, best_f, any_ok = None, math.inf, False
    for k in range(cfg.restarts):
        x0 = starts[k] if k < len(starts) else \
            center + cfg.start_spread * scales * rng.standard_normal(center.size)
        x, f, ok = _minimize_from(obj, x0, scales, cfg, history)
        diagnostics["restarts"].append({"start": k, "loglik": -f, "success": ok})
        if f < best_f:
            best_x, best_f = x, f
        any_ok = any_ok or ok
    # never report worse than the best point visited
    if obj.best_f < best_f:
        best_x, best_f = obj.best_x, obj.best_f
    n_evals = obj.n_evals
    diagnostics["stages"].append({"stage": "p-only", "loglik": -best_f, "evals": obj.n_evals})

    params, _ = space_p.to_params(best_x)
    kernel = None
    keep = None
    if joint:
        opts = panel.options
        keep = np.isfinite(opts.market_vega) & (opts.market_vega > 0)
        if (~keep).any():
            warnings.warn(f"dropped {int((~keep).sum())} quotes with zero vega", RuntimeWarning,
                          stacklevel=2)
        space = ParamSpace(cfg.n_states, joint=True, r=cfg.r)
        chi0 = (np.zeros(cfg.n_states) if not (start and start[1] is not None)
                else np.asarray(start[1].chi, dtype=float))
        xp = best_x
        # stage 2: kernel with the P-parameters held fixed
        obj_k = _Objective(panel, space, joint=True, keep=keep, fixed_p=xp)
        kscale = np.full(cfg.n_states, 0.2)
        best_k, best_fk = None, math.inf
        for k in range(max(2, min(cfg.restarts, 4))):
            c0 = chi0 if k == 0 else chi0 + 0.5 * rng.standard_normal(cfg.n_states)
            r = _nelder_mead(obj_k, c0, kscale, 400 * cfg.n_states, cfg.tolerance, history)
            if r.fun < best_fk:
                best_k, best_fk = r.x, r.fun
        n_evals += obj_k.n_evals
        diagnostics["stages"].append({"stage": "kernel", "loglik": -best_fk,
                                      "evals": obj_k.n_evals})
        # stage 3: all parameters together
        obj_j = _Objective(panel, space, joint=True, keep=keep)
        xj = np.concatenate([xp, best_k])
        fj = obj_j(xj)
        if cfg.joint_iters > 0:
            r = _nelder_mead(obj_j, xj, space.scales() * 0.2, cfg.joint_iters, cfg.tolerance,
                             history)
            if r.fun < fj:
                xj, fj = r.x, r.fun
            any_ok = any_ok and bool(r.success)
        if obj_j.best_f < fj:
            xj, fj = obj_j.best_x, obj_j.best_f
        n_evals += obj_j.n_evals
        diagnostics["stages"].append({"stage": "joint", "loglik": -fj, "evals": obj_j.n_evals})
        params, kernel = space.to_params(xj)
    else:
        space = space_p

    params, kernel = space.relabel(params, kernel)
    filt = run_filter(panel, params)
    ll_p = filt.loglik
    ll_q, sigma_e, rmse = 0.0, None, None
    if joint:
        prices = model_prices(panel, params, kernel, filt)
        e, _ = vega_weighted_errors(panel.options, prices, warn=False)
        ll_q, sigma_e, _ = option_loglik(e, len(panel))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rmse = rmse_iv(panel.options, prices,
                           model_vix(panel, params, kernel, filt)[panel.options.day])

    se, flags = {}, []
    if cfg.compute_se:
        se, sw = _se_report(panel, space, params, kernel, keep, cfg)
        flags = sw.flags
    # monotone best-so-far trace of accepted iterates
    trace = np.maximum.accumulate(np.array(history)) if history else np.array([])
    diagnostics.update(n_evals=n_evals, history=trace.tolist(), se_flags=flags,
                       natural=_natural_dict(space, params, kernel))
    return FitReport(params=params, kernel=kernel, loglik_p=ll_p, loglik_q=ll_q,
                     loglik_total=ll_p + ll_q, sigma_e=sigma_e, se=se, converged=any_ok,
                     diagnostics=diagnostics, rmse=rmse, config=cfg)


# ---------------------------------------------------------------------------
# model-generated option panels

def synthetic_options(panel: MarketPanel, params: PhysicalParams, kernel: KernelParams,
                      days, maturities=(10, 21), moneyness=(0.95, 0.975, 1.0, 1.025, 1.05),
                      noise: float = 0.0, seed: int = 0, spot0: float = 100.0) -> OptionPanel:
    """Call quotes priced by the model itself at the true filter.

    ``noise`` adds ``noise * vega`` Gaussian perturbations (implied-vol units).
    """
    days = np.asarray(days, dtype=int)
    spot_path = spot0 * np.exp(np.cumsum(panel.returns))
    rows = [(d, spot_path[d], spot_path[d] * m, T) for d in days for T in maturities
            for m in moneyness]
    d, S, K, T = (np.array(c) for c in zip(*rows))
    opts = OptionPanel(day=d, spot=S, strike=K, dtm_days=T, rate=np.full(d.size, params.r),
                       is_call=np.ones(d.size, bool), price=np.zeros(d.size))
    tmp = MarketPanel(panel.dates, panel.returns, panel.realized_variance, opts)
    filt = run_filter(tmp, params)
    prices = model_prices(tmp, params, kernel, filt)
    if noise > 0:
        rng = np.random.default_rng(seed)
        vega = np.empty(d.size)
        for i in range(d.size):
            q = OptionQuote(S[i], K[i], int(T[i]), params.r)
            vega[i] = bs_vega(q, implied_vol(q, prices[i]))
        prices = prices + noise * vega * rng.standard_normal(d.size)
        intrinsic = np.maximum(S - K * np.exp(-params.r * T), 0.0)
        prices = np.clip(prices, intrinsic + 1e-8, S - 1e-8)
    lh = _next_log_h(filt)
    q = to_q(params, kernel)
    vx = np.array([vix(lh[i], filt.filt_probs[i], q) for i in d])
    return OptionPanel(day=d, spot=S, strike=K, dtm_days=T, rate=np.full(d.size, params.r),
                       is_call=np.ones(d.size, bool), price=prices, vix=vx)
