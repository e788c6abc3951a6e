"""Physical-measure dynamics of the Markov-switching Realized GARCH model.

Day ``t`` carries the latent regime ``s_t``, the predetermined conditional
variance ``h_t`` and two independent N(0, 1) shocks ``z_t`` (return) and
``u_t`` (volatility).  One step of the model reads::

    R_t        = r + lam*sqrt(h_t) - h_t/2 + sqrt(h_t)*z_t
    log x_t    = xi[s_t] + phi*log h_t + delta1*z_t + delta2*(z_t**2 - 1) + sigma_u*u_t
    log h_{t+1} = omega + beta*log h_t + gamma*log x_t + tau1*z_t + tau2*(z_t**2 - 1)

With a single regime this is the plain Realized GARCH model.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhysicalParams",
    "StateDistribution",
    "SimPath",
    "StepOut",
    "validate",
    "persistence",
    "long_run_log_variance",
    "stationary_log_mean",
    "omega_from_log_mean",
    "step",
    "log_return",
    "simulate",
    "stationary_distribution",
    "reference_params",
    "REFERENCE_LOG_MEAN",
]

# reference level of log variance, used as the stationary mean of log h
REFERENCE_LOG_MEAN = -9.3672


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhysicalParams:
    """P-measure parameters.

    ``xi`` holds one measurement intercept per regime and ``trans[i, j]`` is
    the probability of moving from regime ``i`` to regime ``j``.  ``r`` is the
    daily continuously compounded risk-free rate.
    """

    lam: float
    omega: float
    beta: float
    gamma: float
    tau1: float
    tau2: float
    phi: float
    delta1: float
    delta2: float
    sigma_u: float
    xi: np.ndarray
    trans: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xi", _frozen_array(self.xi, 1))
        object.__setattr__(self, "trans", _frozen_array(self.trans, 2))
        for name in ("lam", "omega", "beta", "gamma", "tau1", "tau2", "phi",
                     "delta1", "delta2", "sigma_u", "r"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n_states(self) -> int:
        return self.xi.shape[0]

    @property
    def rho(self) -> float:
        return self.beta + self.gamma * self.phi

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["xi"] = self.xi.tolist()
        out["trans"] = self.trans.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


@dataclass(frozen=True)
class StateDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.probs, 1)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {p}")
        object.__setattr__(self, "probs", p)

    @classmethod
    def point(cls, state: int, n_states: int) -> "StateDistribution":
        p = np.zeros(n_states)
        p[state] = 1.0
        return cls(p)

    def __len__(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class SimPath:
    log_h: np.ndarray
    returns: np.ndarray
    log_x: np.ndarray
    states: np.ndarray
    z: np.ndarray
    u: np.ndarray
    log_h_next: float = field(default=float("nan"))

    def __len__(self) -> int:
        return self.returns.shape[0]


class StepOut(tuple):
    """(log_x, log_h_next, ret) for one day."""

    __slots__ = ()

    def __new__(cls, log_x, log_h_next, ret):
        return super().__new__(cls, (log_x, log_h_next, ret))

    log_x = property(lambda self: self[0])
    log_h_next = property(lambda self: self[1])
    ret = property(lambda self: self[2])


def validate(params: PhysicalParams) -> list[str]:
    """Return a list of violated invariants (empty when the set is usable)."""
    problems = []
    n = params.xi.shape[0]
    if n < 1:
        problems.append("xi must have at least one entry")
    if abs(params.rho) >= 1:
        problems.append(f"|β+γφ|≥1 (got {params.rho:.6g})")
    if not params.sigma_u > 0:
        problems.append("sigma_u must be positive")
    trans = params.trans
    if trans.shape != (n, n):
        problems.append(f"trans must be {n}x{n}, got {trans.shape}")
    else:
        if np.any(trans < 0) or np.any(trans > 1):
            problems.append("trans entries must lie in [0, 1]")
        bad = np.abs(trans.sum(axis=1) - 1.0) > 1e-12
        for i in np.flatnonzero(bad):
            problems.append(f"row sum ≠ 1 (row {i} sums to {trans[i].sum():.12g})")
    scalars = [params.lam, params.omega, params.beta, params.gamma, params.tau1,
               params.tau2, params.phi, params.delta1, params.delta2, params.sigma_u,
               params.r]
    if not all(math.isfinite(v) for v in scalars) or not np.all(np.isfinite(params.xi)):
        problems.append("non-finite parameter")
    return problems


def persistence(params: PhysicalParams) -> float:
    return params.beta + params.gamma * params.phi


def long_run_log_variance(params: PhysicalParams, state: int) -> float:
    """Level log h reverts to while the chain sits in ``state`` (0-based)."""
    rho = persistence(params)
    if rho == 1.0:
        raise ValueError("unit-root log variance: β+γφ = 1")
    return (params.omega + params.gamma * params.xi[state]) / (1.0 - rho)


def stationary_log_mean(params: PhysicalParams, probs=None) -> float:
    """E[log h] when the regime law is ``probs`` (stationary law by default)."""
    if probs is None:
        probs = stationary_distribution(params.trans).probs
    probs = np.asarray(getattr(probs, "probs", probs), dtype=float)
    return (params.omega + params.gamma * float(probs @ params.xi)) / (1.0 - params.rho)


def omega_from_log_mean(log_mean: float, beta, gamma, phi, xi, trans) -> float:
    """Intercept ω implied by a target stationary mean of log h."""
    pi = stationary_distribution(np.asarray(trans, dtype=float)).probs
    rho = beta + gamma * phi
    return (1.0 - rho) * log_mean - gamma * float(pi @ np.asarray(xi, dtype=float))


def log_return(params: PhysicalParams, log_h: float, z: float) -> float:
    h = math.exp(log_h)
    sh = math.sqrt(h)
    return params.r + params.lam * sh - 0.5 * h + sh * z


def step(params: PhysicalParams, state: int, log_h: float, z: float, u: float) -> StepOut:
    """Advance one day: realized measure, next log variance and the day's return."""
    if not (math.isfinite(log_h) and math.isfinite(z) and math.isfinite(u)):
        raise ValueError("non-finite input to step")
    zz = z * z - 1.0
    log_x = (params.xi[state] + params.phi * log_h + params.delta1 * z
             + params.delta2 * zz + params.sigma_u * u)
    log_h_next = (params.omega + params.beta * log_h + params.gamma * log_x
                  + params.tau1 * z + params.tau2 * zz)
    return StepOut(float(log_x), log_h_next, log_return(params, log_h, z))


def _sample_chain(trans: np.ndarray, first: int, uniforms: np.ndarray) -> np.ndarray:
    cum = np.cumsum(trans, axis=1)
    cum[:, -1] = 1.0
    states = np.empty(uniforms.shape[0] + 1, dtype=np.int64)
    states[0] = first
    s = first
    for t, v in enumerate(uniforms, start=1):
        s = int(np.searchsorted(cum[s], v, side="right"))
        states[t] = s
    return states


def simulate(params: PhysicalParams, T: int, seed: int, log_h0: float | None = None,
             init: StateDistribution | None = None) -> SimPath:
    """Forward-simulate ``T`` days under P.

    ``init`` is the law of the first day's regime (stationary by default) and
    ``log_h0`` the first day's log variance (stationary log-mean under
    ``init`` by default).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    n = params.n_states
    if init is None:
        init = stationary_distribution(params.trans)
    if len(init) != n:
        raise ValueError("initial distribution has the wrong number of states")
    if log_h0 is None:
        log_h0 = stationary_log_mean(params, init.probs)
    if not math.isfinite(log_h0):
        raise ValueError("initial log variance must be finite")

    rng = np.random.default_rng(seed)
    z = rng.standard_normal(T)
    u = rng.standard_normal(T)
    first = int(rng.choice(n, p=init.probs))
    states = _sample_chain(params.trans, first, rng.random(T - 1))

    log_h = np.empty(T)
    log_x = np.empty(T)
    rets = np.empty(T)
    lh = float(log_h0)
    for t in range(T):
        log_h[t] = lh
        log_x[t], lh, rets[t] = step(params, int(states[t]), lh, float(z[t]), float(u[t]))
    return SimPath(log_h=log_h, returns=rets, log_x=log_x, states=states, z=z, u=u,
                   log_h_next=lh)


def stationary_distribution(trans) -> StateDistribution:
    """Stationary law π with π'Π = π'.  Raises if it is not unique."""
    P = np.asarray(trans, dtype=float)
    n = P.shape[0]
    if n == 1:
        return StateDistribution(np.ones(1))
    # π'(I - Π) = 0 with Σπ = 1; rank deficiency means several closed classes
    A = np.vstack([(np.eye(n) - P).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    if np.linalg.matrix_rank(A, tol=1e-13) < n:
        raise ValueError("transition matrix has no unique stationary distribution")
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    # one power-iteration sweep tightens ‖π'Π - π'‖ to rounding level
    for _ in range(3):
        pi = np.clip(pi @ P, 0.0, None)
        pi /= pi.sum()
    return StateDistribution(pi / pi.sum())


def reference_params(r: float = 0.0, log_mean: float = REFERENCE_LOG_MEAN) -> PhysicalParams:
    """Reference two-state (Low, High) values on a daily S&P 500 scale.

    The intercept ω is backed out from ``log_mean``, taken as the
    stationary mean of log h.
    """
    beta, gamma, phi = 0.8435, 0.1278, 0.9930
    xi = [-0.8767, -0.7788]
    trans = [[0.9996, 0.0004], [0.0052, 0.9948]]
    omega = omega_from_log_mean(log_mean, beta, gamma, phi, xi, trans)
    return PhysicalParams(lam=0.0354, omega=omega, beta=beta, gamma=gamma,
                          tau1=-0.1520, tau2=-0.0080, phi=phi, delta1=-0.1733,
                          delta2=0.1548, sigma_u=0.6306, xi=xi, trans=trans, r=r)
