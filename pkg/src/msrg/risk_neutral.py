"""Risk-neutralization with a regime-dependent variance-risk price.

The pricing kernel is exponentially affine in the two shocks::

    M = exp(psi*z + chi[s]*u) / E[exp(psi*z + chi[s]*u) | s]

No-arbitrage pins ``psi = -lam``; only the variance-risk price ``chi`` may
depend on the regime.  Under Q the shocks are shifted (``z* = z + lam``,
``u* = u - chi[s]``) and the regime chain keeps its transition matrix.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .model import PhysicalParams, StateDistribution, _frozen_array

__all__ = [
    "KernelParams",
    "QParams",
    "QSimResult",
    "VIX_SCALE",
    "to_q",
    "kernel_value",
    "log_mgf_G",
    "delta_map",
    "theta_sequence",
    "theta_folded",
    "expected_h",
    "term_structure",
    "vix",
    "vix_from_forecasts",
    "log_vrp",
    "simulate_q",
    "pair_mean_se",
    "reference_kernel",
]

VIX_SCALE = 100.0 * math.sqrt(252.0 / 22.0)


@dataclass(frozen=True)
class KernelParams:
    """Pricing-kernel coefficients.  Build with :meth:`for_params` to pin psi."""

    chi: np.ndarray
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "chi", _frozen_array(self.chi, 1))
        object.__setattr__(self, "psi", float(self.psi))
        if not np.all(np.isfinite(self.chi)):
            raise ValueError("chi must be finite")

    @classmethod
    def for_params(cls, params: PhysicalParams, chi) -> "KernelParams":
        return cls(chi=chi, psi=-params.lam)

    def check(self, params: PhysicalParams) -> None:
        if self.psi != -params.lam:
            raise ValueError(f"psi must equal -lambda ({-params.lam}), got {self.psi}")
        if self.chi.shape != params.xi.shape:
            raise ValueError("chi needs one entry per regime")


@dataclass(frozen=True)
class QParams:
    omega_star: float
    tau1_star: float
    delta1_star: float
    xi_star: np.ndarray
    beta: float
    gamma: float
    tau2: float
    delta2: float
    phi: float
    sigma_u: float
    trans: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xi_star", _frozen_array(self.xi_star, 1))
        object.__setattr__(self, "trans", _frozen_array(self.trans, 2))

    @property
    def n_states(self) -> int:
        return self.xi_star.shape[0]

    @property
    def rho(self) -> float:
        return self.beta + self.gamma * self.phi

    @property
    def c1(self) -> float:
        """Loading of z* in the log-variance innovation."""
        return self.tau1_star + self.gamma * self.delta1_star

    @property
    def c2(self) -> float:
        """Loading of (z*^2 - 1) in the log-variance innovation."""
        return self.tau2 + self.gamma * self.delta2

    @property
    def gs(self) -> float:
        return self.gamma * self.sigma_u

    @property
    def zeta(self) -> np.ndarray:
        return self.omega_star + self.gamma * self.xi_star

    def replace(self, **changes) -> "QParams":
        return dataclasses.replace(self, **changes)

    def key(self) -> tuple:
        return (self.omega_star, self.tau1_star, self.delta1_star, tuple(self.xi_star),
                self.beta, self.gamma, self.tau2, self.delta2, self.phi, self.sigma_u,
                tuple(self.trans.ravel()), self.r)


def to_q(params: PhysicalParams, kernel: KernelParams) -> QParams:
    kernel.check(params)
    lam = params.lam
    return QParams(
        omega_star=params.omega - params.tau1 * lam + params.tau2 * lam**2,
        tau1_star=params.tau1 - 2 * params.tau2 * lam,
        delta1_star=params.delta1 - 2 * params.delta2 * lam,
        xi_star=(params.xi - params.delta1 * lam + params.delta2 * lam**2
                 + params.sigma_u * kernel.chi),
        beta=params.beta, gamma=params.gamma, tau2=params.tau2, delta2=params.delta2,
        phi=params.phi, sigma_u=params.sigma_u, trans=params.trans, r=params.r,
    )


def kernel_value(z, u, state, kernel: KernelParams):
    """Pricing kernel M for shocks (z, u) arriving in ``state``."""
    chi = kernel.chi[state]
    psi = kernel.psi
    return np.exp(psi * z + chi * u - 0.5 * psi**2 - 0.5 * chi**2)


def log_mgf_G(theta, q: QParams):
    """log E^Q[exp(theta * v)] for v = c1 z + c2 (z^2 - 1) + gamma sigma u."""
    theta = np.asarray(theta, dtype=float)
    c1, c2, gs = q.c1, q.c2, q.gs
    arg = 1.0 - 2.0 * theta * c2
    if np.any(arg <= 0):
        raise ValueError(f"log-MGF undefined: theta*c2 must be < 1/2 (c2={c2})")
    out = (-0.5 * np.log(arg) - theta * c2 + theta**2 * c1**2 / (2.0 * arg)
           + 0.5 * gs**2 * theta**2)
    return out if out.ndim else float(out)


def delta_map(phi_vec, trans) -> np.ndarray:
    """Δ_i(φ) = log Σ_j π_ij exp(φ_j); rows of a 2-D ``phi_vec`` map independently."""
    phi_vec = np.asarray(phi_vec, dtype=float)
    trans = np.asarray(trans, dtype=float)
    top = phi_vec.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        return top + np.log(np.exp(phi_vec - top) @ trans.T)


def theta_sequence(n_max: int, q: QParams):
    """θ_1..θ_n (rows) and κ_1..κ_n in the split bookkeeping of the forecast."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rho, zeta = q.rho, q.zeta
    theta = np.zeros((n_max, q.n_states))
    kappa = np.zeros(n_max)
    for n in range(1, n_max):
        theta[n] = delta_map(rho ** (n - 1) * zeta + theta[n - 1], q.trans)
        kappa[n] = kappa[n - 1] + log_mgf_G(rho ** (n - 1), q)
    return theta, kappa


def theta_folded(n_max: int, q: QParams) -> np.ndarray:
    """Same recursion with G folded into θ: θ_{n+1} = Δ(G(ρ^{n-1}) + ρ^{n-1}ζ + θ_n)."""
    rho, zeta = q.rho, q.zeta
    theta = np.zeros((n_max, q.n_states))
    for n in range(1, n_max):
        m = rho ** (n - 1)
        theta[n] = delta_map(log_mgf_G(m, q) + m * zeta + theta[n - 1], q.trans)
    return theta


def term_structure(n_max: int, log_h1: float, q: QParams) -> np.ndarray:
    """E^Q[h_{t+n} | s_t = j] for n = 1..n_max (rows) and every regime j (columns)."""
    theta, kappa = theta_sequence(n_max, q)
    powers = q.rho ** np.arange(n_max)
    out = np.exp(kappa[:, None] + powers[:, None] * log_h1 + theta)
    # the first row is the known next-day variance, not a forecast
    out[0] = math.exp(log_h1)
    return out


def expected_h(n: int, log_h1: float, state: int, q: QParams) -> float:
    if n < 1:
        raise ValueError("horizon must be >= 1")
    return float(term_structure(n, log_h1, q)[n - 1, state])


def vix(log_h1: float, filt: StateDistribution | np.ndarray, q: QParams,
        horizon: int = 22) -> float:
    probs = np.asarray(getattr(filt, "probs", filt), dtype=float)
    return vix_from_forecasts(term_structure(horizon, log_h1, q) @ probs)


def vix_from_forecasts(forecasts) -> float:
    """Index level from daily variance forecasts E[h_{t+1}], ..., E[h_{t+22}].

    The sum is exactly rounded, so a flat forecast ``h`` gives
    ``VIX_SCALE * sqrt(22 * h)`` bit for bit.
    """
    forecasts = np.asarray(forecasts, dtype=float)
    if forecasts.ndim != 1 or forecasts.size == 0:
        raise ValueError("forecasts must be a non-empty 1-D array")
    total = math.fsum(forecasts.tolist())
    if not total > 0:
        raise ValueError("variance forecasts must sum to a positive number")
    return VIX_SCALE * math.sqrt(total)


def log_vrp(params: PhysicalParams, kernel: KernelParams, pred) -> float:
    """E^Q_t log h_{t+2} - E^P_t log h_{t+2} given P_t(s_{t+1}) = ``pred``."""
    kernel.check(params)
    probs = np.asarray(getattr(pred, "probs", pred), dtype=float)
    lam, g = params.lam, params.gamma
    return (-(params.tau1 + g * params.delta1) * lam
            + (params.tau2 + g * params.delta2) * lam**2
            + g * params.sigma_u * float(probs @ kernel.chi))


@dataclass
class QSimResult:
    """Output of :func:`simulate_q`.

    Paths ``i`` and ``i + n_paths // 2`` are antithetic partners when
    ``antithetic`` was requested.
    """

    cum_returns: np.ndarray        # (n_record, n_paths) cumulative log-returns
    record_days: np.ndarray
    h_mean: np.ndarray             # (T,) sample mean of h_t, t = 1..T
    h_pair_var: np.ndarray         # (T,) variance of antithetic-pair means of h_t
    n_pairs: int
    antithetic: bool


def pair_mean_se(values: np.ndarray, antithetic: bool = True) -> tuple[float, float]:
    """Mean and standard error, averaging antithetic partners first."""
    values = np.asarray(values, dtype=float)
    if antithetic:
        half = values.shape[-1] // 2
        values = 0.5 * (values[..., :half] + values[..., half:2 * half])
    n = values.shape[-1]
    return float(values.mean(axis=-1)), float(values.std(axis=-1, ddof=1) / math.sqrt(n))


def simulate_q(q: QParams, log_h1: float, init, T: int, n_paths: int, seed: int,
               antithetic: bool = True, record_days=None,
               chunk: int = 250_000) -> QSimResult:
    """Monte Carlo under Q from a known h_1 and a law for the current regime s_0.

    ``init`` is either a regime index or a probability vector.  The regime of
    day 1 is drawn from Π given s_0, so the first variance update already
    depends on a transition.  ``record_days`` lists horizons at which the
    cumulative return is stored (default: only ``T``).
    """
    n = q.n_states
    if isinstance(init, (int, np.integer)):
        p0 = np.zeros(n)
        p0[int(init)] = 1.0
    else:
        p0 = np.asarray(getattr(init, "probs", init), dtype=float)
    record_days = np.atleast_1d(np.asarray(record_days if record_days is not None else [T]))
    if antithetic and n_paths % 2:
        n_paths += 1
    cum = np.empty((record_days.size, n_paths))
    h_sum = np.zeros(T)
    pair_sum = np.zeros(T)
    pair_sq = np.zeros(T)
    cum_trans = np.cumsum(q.trans, axis=1)
    cum_trans[:, -1] = 1.0
    cum_p0 = np.cumsum(p0)
    cum_p0[-1] = 1.0

    half_total = n_paths // 2 if antithetic else n_paths
    seeds = np.random.SeedSequence(seed)
    starts = list(range(0, half_total, chunk))
    for child, lo in zip(seeds.spawn(len(starts)), starts):
        rng = np.random.default_rng(child)
        m = min(chunk, half_total - lo)
        s = np.searchsorted(cum_p0, rng.random(m), side="right")
        if antithetic:
            s = np.concatenate([s, s])
        lh = np.full(s.shape, float(log_h1))
        acc = np.zeros(s.shape)
        rec = 0
        for t in range(T):
            zb = rng.standard_normal(m)
            ub = rng.standard_normal(m)
            v = rng.random(m)
            if antithetic:
                zb = np.concatenate([zb, -zb])
                ub = np.concatenate([ub, -ub])
                v = np.concatenate([v, v])
            # regime of day t+1 given day t
            s = (v[:, None] >= cum_trans[s]).sum(axis=1)
            h = np.exp(lh)
            sh = np.sqrt(h)
            acc += q.r - 0.5 * h + sh * zb
            zz = zb * zb - 1.0
            log_x = q.xi_star[s] + q.phi * lh + q.delta1_star * zb + q.delta2 * zz + q.sigma_u * ub
            lh = q.omega_star + q.beta * lh + q.gamma * log_x + q.tau1_star * zb + q.tau2 * zz
            h_sum[t] += h.sum()
            pm = 0.5 * (h[:m] + h[m:]) if antithetic else h
            pair_sum[t] += pm.sum()
            pair_sq[t] += (pm * pm).sum()
            while rec < record_days.size and record_days[rec] == t + 1:
                idx = np.r_[lo:lo + m, half_total + lo:half_total + lo + m] if antithetic \
                    else np.arange(lo, lo + m)
                cum[rec, idx] = acc
                rec += 1
    n_units = half_total
    h_mean = h_sum / n_paths
    pair_mean = pair_sum / n_units
    pair_var = (pair_sq / n_units - pair_mean**2) * n_units / (n_units - 1)
    return QSimResult(cum_returns=cum, record_days=record_days, h_mean=h_mean,
                      h_pair_var=pair_var, n_pairs=n_units, antithetic=antithetic)


def reference_kernel(params: PhysicalParams) -> KernelParams:
    """Reference regime variance-risk prices (Low, High)."""
    return KernelParams.for_params(params, [-0.0052, 0.4586])
