"""Conditional moments of the cumulative log-return under Q.

With ``t = 0`` and ``T`` days to maturity the cumulative return is::

    R_T = T*r + B - H/2,   B = sum_t sqrt(h_t) z_t,   H = sum_t h_t

The raw moments E[R_T^k], k <= 4, are assembled from the cross moments
S[a, b] = E[B^a H^b] (the S_D, S_T and S_Q terms).  Every expectation of a
product of powers of ``h_t`` and ``z_t`` is resolved by one backward pass:
a value of the form ``h_{t+1}^A * F(s_t)`` meeting the factor ``h_t^p z_t^q``
becomes ``h_t^(p + rho*A) * F'(s_{t-1})`` with::

    F' = E[z^q exp(A v)] * Π (exp(A ζ) ⊙ F)

The closed-form building blocks (Ψ, Γ and their compositions) are kept for
cross-checking and for callers that want individual terms.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .risk_neutral import QParams, delta_map, log_mgf_G

__all__ = [
    "MomentContext",
    "zr_mgf",
    "theta_general",
    "psi_fn",
    "gamma_fn",
    "a_coef",
    "b_coef",
    "c_coef",
    "building_block",
    "BLOCK_ARITY",
    "block_factors",
    "expect_product",
    "cross_moments",
    "s_terms",
    "raw_moments",
    "raw_moments_all",
    "bruteforce_moments",
    "cumulants",
    "cumulants_from_raw",
]


@dataclass(frozen=True)
class MomentContext:
    qparams: QParams
    log_h1: float
    s0: int
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not 0 <= self.s0 < self.qparams.n_states:
            raise ValueError("s0 out of range")


# ---------------------------------------------------------------------------
# shock moments

def _gauss_raw_moment(r: int, mean, var):
    if r == 0:
        return np.ones_like(mean)
    if r == 1:
        return mean
    if r == 2:
        return mean * mean + var
    if r == 3:
        return mean**3 + 3.0 * mean * var
    if r == 4:
        return mean**4 + 6.0 * mean * mean * var + 3.0 * var * var
    raise ValueError("only orders 0..4 are supported")


def zr_mgf(r: int, k, q: QParams):
    """E[z^r exp(k v)] with v = c1 z + c2 (z^2 - 1) + gamma sigma u, z, u ~ N(0, 1).

    Completing the square turns the z-part into a Gaussian with variance
    s^2 = 1/(1 - 2 k c2) and mean k c1 s^2.
    """
    k = np.asarray(k, dtype=float)
    b = k * q.c2
    arg = 1.0 - 2.0 * b
    if np.any(arg <= 0):
        raise ValueError(f"E[z^r exp(kv)] undefined: k*c2 must be < 1/2 (c2={q.c2})")
    s2 = 1.0 / arg
    a = k * q.c1
    mean = a * s2
    scale = np.sqrt(s2) * np.exp(0.5 * a * a * s2 + 0.5 * k * k * q.gs**2 - k * q.c2)
    out = scale * _gauss_raw_moment(r, mean, s2)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# closed-form building blocks

def theta_general(n: int, m: float, phi, q: QParams) -> np.ndarray:
    """θ_n(m, φ) with E[h_{t+n}^m exp(φ's_{t+n-1}) | s_t] = h_{t+1}^{mρ^{n-1}} exp(θ_n's_t).

    The recursion starts from θ_1 = φ, which keeps n = 1 consistent with a
    nonzero φ.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = np.broadcast_to(np.asarray(phi, dtype=float), (q.n_states,)).copy()
    rho, zeta = q.rho, q.zeta
    for i in range(n - 1):
        w = m * rho**i
        theta = delta_map(log_mgf_G(w, q) + w * zeta + theta, q.trans)
    return theta


def _psi_vec(i, m, phi, q, log_h1):
    return np.exp(m * q.rho ** (i - 1) * log_h1 + theta_general(i, m, phi, q))


def psi_fn(i: int, m: float, phi, ctx: MomentContext) -> float:
    """Ψ_i(m, φ) = E[h_i^m exp(φ's_{i-1}) | s_0]."""
    return float(_psi_vec(i, m, phi, ctx.qparams, ctx.log_h1)[ctx.s0])


def a_coef(i, j, r, m, q: QParams) -> float:
    return (0.5 * r + m * q.rho**j) * q.rho ** (i - 1)


def b_coef(i, j, r, m, phi, q: QParams) -> np.ndarray:
    inner = delta_map(m * q.rho ** (j - 1) * q.zeta + theta_general(j, m, phi, q), q.trans)
    return theta_general(i, 0.5 * r + m * q.rho**j, inner, q)


def c_coef(j, r, m, q: QParams) -> float:
    return zr_mgf(r, m * q.rho ** (j - 1), q)


def _gamma_vec(i, j, r, m, phi, q, log_h1):
    return (np.exp(a_coef(i, j, r, m, q) * log_h1 + b_coef(i, j, r, m, phi, q))
            * c_coef(j, r, m, q))


def gamma_fn(i: int, j: int, r: int, m: float, phi, ctx: MomentContext) -> float:
    """Γ_i(j, r, m, φ) = E[h_i^{r/2} z_i^r h_{i+j}^m exp(φ's_{i+j-1}) | s_0]."""
    return float(_gamma_vec(i, j, r, m, phi, ctx.qparams, ctx.log_h1)[ctx.s0])


def _blocks(q: QParams, lh: float):
    """Closed forms of the 19 term types, returning vectors over s_0."""
    rho = q.rho
    zero = np.zeros(q.n_states)
    th = lambda n, m: theta_general(n, m, zero, q)
    a = lambda i, j, r, m: a_coef(i, j, r, m, q)
    b = lambda i, j, r, m, phi=zero: b_coef(i, j, r, m, phi, q)
    c = lambda j, r, m: c_coef(j, r, m, q)
    Psi = lambda i, m, phi: _psi_vec(i, m, phi, q, lh)
    Gam = lambda i, j, r, m, phi: _gamma_vec(i, j, r, m, phi, q, lh)
    return {
        # E(h_i^m)
        "B1": lambda i, m=1.0: Psi(i, m, zero),
        # E(h_i h_{i+j})
        "B2": lambda i, j: Psi(i, 1 + rho**j, th(j + 1, 1)),
        # E(h_i^2 h_{i+j})
        "B3": lambda i, j: Psi(i, 2 + rho**j, th(j + 1, 1)),
        # E(h_i h_{i+j}^2)
        "B4": lambda i, j: Psi(i, 1 + 2 * rho**j, th(j + 1, 2)),
        # E(h_i h_{i+j} h_{i+j+k})
        "B5": lambda i, j, k: Psi(i, 1 + rho**j + rho ** (k + j),
                                  theta_general(j + 1, 1 + rho**k, th(k + 1, 1), q)),
        # E(sqrt(h_i) z_i h_{i+j})
        "B6": lambda i, j: Gam(i, j, 1, 1, zero),
        # E(sqrt(h_i) z_i h_{i+j}^2)
        "B7": lambda i, j: Gam(i, j, 1, 2, zero),
        # E(h_i z_i^2 h_{i+j})
        "B8": lambda i, j: Gam(i, j, 2, 1, zero),
        # E(h_i^{3/2} z_i^3 h_{i+j})
        "B9": lambda i, j: Gam(i, j, 3, 1, zero),
        # E(h_i sqrt(h_{i+j}) z_{i+j} h_{i+j+k})
        "B10": lambda i, j, k: Psi(i, 1 + a(j + 1, k, 1, 1), b(j + 1, k, 1, 1)) * c(k, 1, 1),
        # E(sqrt(h_i) z_i h_{i+j} h_{i+j+k})
        "B11": lambda i, j, k: Gam(i, j, 1, 1 + rho**k, th(k + 1, 1)),
        # E(h_i^{3/2} z_i h_{i+j})
        "B12": lambda i, j: Psi(i, 1 + a(1, j, 1, 1), b(1, j, 1, 1)) * c(j, 1, 1),
        # E(sqrt(h_i) z_i sqrt(h_{i+j}) z_{i+j} h_{i+j+k})
        "B13": lambda i, j, k: Gam(i, 1, 1, a(j, k, 1, 1), b(j, k, 1, 1)) * c(k, 1, 1),
        # E(sqrt(h_i) z_i sqrt(h_{i+j}) z_{i+j} h_{i+j+k} h_{i+j+k+m})
        "B14": lambda i, j, k, m: (
            Gam(i, 1, 1, a(j, k, 1, 1 + rho**m), b(j, k, 1, 1 + rho**m, th(m + 1, 1)))
            * c(k, 1, 1 + rho**m)),
        # E(h_i z_i^2 h_{i+j} h_{i+j+k})
        "B15": lambda i, j, k: Gam(i, j, 2, 1 + rho**k, th(k + 1, 1)),
        # E(h_i h_{i+j} z_{i+j}^2 h_{i+j+k})
        "B16": lambda i, j, k: Psi(i, 1 + a(j + 1, k, 2, 1), b(j + 1, k, 2, 1)) * c(k, 2, 1),
        # E(sqrt(h_i) z_i h_{i+j} z_{i+j}^2 h_{i+j+k})
        "B17": lambda i, j, k: Gam(i, 1, 1, a(j, k, 2, 1), b(j, k, 2, 1)) * c(k, 2, 1),
        # E(sqrt(h_i) z_i sqrt(h_{i+j}) z_{i+j} sqrt(h_{i+j+k}) z_{i+j+k} h_{i+j+k+m})
        "B18": lambda i, j, k, m: (
            Gam(i, 1, 1, a(j, 1, 1, a(k, m, 1, 1)), b(j, 1, 1, a(k, m, 1, 1), b(k, m, 1, 1)))
            * c(1, 1, a(k, m, 1, 1)) * c(m, 1, 1)),
        # E(h_i z_i^2 sqrt(h_{i+j}) z_{i+j} h_{i+j+k})
        "B19": lambda i, j, k: Gam(i, 1, 2, a(j, k, 1, 1), b(j, k, 1, 1)) * c(k, 1, 1),
    }


BLOCK_ARITY = {"B1": (1, 2), "B2": 2, "B3": 2, "B4": 2, "B5": 3, "B6": 2, "B7": 2,
               "B8": 2, "B9": 2, "B10": 3, "B11": 3, "B12": 2, "B13": 3, "B14": 4,
               "B15": 3, "B16": 3, "B17": 3, "B18": 4, "B19": 3}

# (time offset, power of h, power of z) for each block, offsets built from gaps
_BLOCK_FACTORS = {
    "B2": lambda i, j: [(i, 1, 0), (i + j, 1, 0)],
    "B3": lambda i, j: [(i, 2, 0), (i + j, 1, 0)],
    "B4": lambda i, j: [(i, 1, 0), (i + j, 2, 0)],
    "B5": lambda i, j, k: [(i, 1, 0), (i + j, 1, 0), (i + j + k, 1, 0)],
    "B6": lambda i, j: [(i, 0.5, 1), (i + j, 1, 0)],
    "B7": lambda i, j: [(i, 0.5, 1), (i + j, 2, 0)],
    "B8": lambda i, j: [(i, 1, 2), (i + j, 1, 0)],
    "B9": lambda i, j: [(i, 1.5, 3), (i + j, 1, 0)],
    "B10": lambda i, j, k: [(i, 1, 0), (i + j, 0.5, 1), (i + j + k, 1, 0)],
    "B11": lambda i, j, k: [(i, 0.5, 1), (i + j, 1, 0), (i + j + k, 1, 0)],
    "B12": lambda i, j: [(i, 1.5, 1), (i + j, 1, 0)],
    "B13": lambda i, j, k: [(i, 0.5, 1), (i + j, 0.5, 1), (i + j + k, 1, 0)],
    "B14": lambda i, j, k, m: [(i, 0.5, 1), (i + j, 0.5, 1), (i + j + k, 1, 0),
                               (i + j + k + m, 1, 0)],
    "B15": lambda i, j, k: [(i, 1, 2), (i + j, 1, 0), (i + j + k, 1, 0)],
    "B16": lambda i, j, k: [(i, 1, 0), (i + j, 1, 2), (i + j + k, 1, 0)],
    "B17": lambda i, j, k: [(i, 0.5, 1), (i + j, 1, 2), (i + j + k, 1, 0)],
    "B18": lambda i, j, k, m: [(i, 0.5, 1), (i + j, 0.5, 1), (i + j + k, 0.5, 1),
                               (i + j + k + m, 1, 0)],
    "B19": lambda i, j, k: [(i, 1, 2), (i + j, 0.5, 1), (i + j + k, 1, 0)],
}


def block_factors(block_id: str, *idx):
    """Factor list (time, power of h, power of z) that a block takes the expectation of."""
    if block_id == "B1":
        i, m = (idx[0], 1.0) if len(idx) == 1 else idx
        return [(i, m, 0)]
    return _BLOCK_FACTORS[block_id](*idx)


def building_block(block_id: str, idx, ctx: MomentContext) -> float:
    """Evaluate one of the 19 closed-form term types B1..B19 at indices ``idx``.

    Indices are the anchor time ``i`` followed by the gaps (``j``, ``k``,
    ``m``) between successive factors; B1 takes ``(i, m)`` with ``m`` the
    power of ``h_i``.
    """
    blocks = _blocks(ctx.qparams, ctx.log_h1)
    if block_id not in blocks:
        raise KeyError(f"unknown block {block_id}")
    idx = tuple(np.atleast_1d(idx).tolist()) if not isinstance(idx, tuple) else idx
    if block_id != "B1" and any(int(v) < 1 for v in idx):
        raise ValueError("indices must be >= 1")
    return float(blocks[block_id](*idx)[ctx.s0])


# ---------------------------------------------------------------------------
# generic backward pass

def expect_product(factors, q: QParams, log_h1: float) -> np.ndarray:
    """E[prod h_t^p z_t^q | h_1, s_0] for every s_0.

    ``factors`` is an iterable of ``(t, p, q)`` with ``t >= 1``; repeated
    times multiply.
    """
    by_time: dict[int, list] = {}
    for t, p, qz in factors:
        if t < 1:
            raise ValueError("times start at 1")
        cur = by_time.setdefault(int(t), [0.0, 0])
        cur[0] += p
        cur[1] += qz
    if not by_time:
        return np.ones(q.n_states)
    A = 0.0
    F = np.ones(q.n_states)
    E = q.zeta
    for t in range(max(by_time), 0, -1):
        p, qz = by_time.get(t, (0.0, 0))
        F = zr_mgf(qz, A, q) * (q.trans @ (np.exp(A * E) * F))
        A = p + q.rho * A
    return np.exp(A * log_h1) * F


# ---------------------------------------------------------------------------
# fast engine: S[a, b] = E[B^a H^b] for a + b <= 4

def _anchor_monomials():
    """Monomials of (x sqrt(h) z + y h)^n / n!: (n, a, coef, p, q)."""
    out = []
    for n in range(1, 5):
        for c in range(n + 1):
            out.append((n, c, comb(n, c) / factorial(n), (n - c) + 0.5 * c, c))
    return out


_MONOMIALS = _anchor_monomials()


class _States:
    __slots__ = ("A", "F", "span", "deg", "xdeg")

    def __init__(self, A, F, span, deg, xdeg):
        self.A, self.F, self.span, self.deg, self.xdeg = A, F, span, deg, xdeg

    def take(self, idx):
        return _States(self.A[idx], self.F[idx], self.span[idx], self.deg[idx], self.xdeg[idx])

    def __len__(self):
        return self.A.shape[0]

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            return None
        return _States(*(np.concatenate([getattr(p, f) for p in parts]) for f in _States.__slots__))


def _propagate(st: _States, q: QParams):
    """Π(exp(Aζ) ⊙ F) for every state."""
    return (st.F * np.exp(st.A[:, None] * q.zeta[None, :])) @ q.trans.T


def _empty_step(st: _States, q: QParams, base=None) -> _States:
    if base is None:
        base = _propagate(st, q)
    F = zr_mgf(0, st.A, q)[:, None] * base
    return _States(q.rho * st.A, F, st.span, st.deg, st.xdeg)


def _attach(st: _States, base, q: QParams, gap: int):
    """Place one more anchor ``gap`` days before the current first anchor."""
    out = []
    for n, c, coef, p, qz in _MONOMIALS:
        mask = st.deg + n <= 4
        if not mask.any():
            continue
        A = st.A[mask]
        F = (coef * zr_mgf(qz, A, q))[:, None] * base[mask]
        out.append(_States(p + q.rho * A, F, st.span[mask] + gap, st.deg[mask] + n,
                           st.xdeg[mask] + c))
    return _States.concat(out)


def _last_anchor_states(q: QParams) -> _States:
    A, F, deg, xdeg = [], [], [], []
    for n, c, coef, p, qz in _MONOMIALS:
        ez = zr_mgf(qz, 0.0, q)
        if ez == 0.0:
            continue
        A.append(p)
        F.append(np.full(q.n_states, coef * ez))
        deg.append(n)
        xdeg.append(c)
    k = len(A)
    return _States(np.array(A), np.array(F), np.zeros(k, dtype=np.int64),
                   np.array(deg, dtype=np.int64), np.array(xdeg, dtype=np.int64))


def _all_anchor_chains(q: QParams, T: int) -> _States:
    """Every chain of up to four anchors within a window of ``T`` days.

    Each state is positioned at its first anchor; ``span`` is the distance
    from the first to the last anchor.
    """
    level = _last_anchor_states(q)
    levels = [level]
    for _ in range(3):
        parents = level.take(level.deg < 4)
        children = []
        for gap in range(1, T):
            parents = parents.take(parents.span + gap <= T - 1)
            if not len(parents):
                break
            base = _propagate(parents, q)
            kids = _attach(parents, base, q, gap)
            if kids is not None:
                children.append(kids)
            parents = _empty_step(parents, q, base)
        level = _States.concat(children)
        if level is None:
            break
        levels.append(level)
    return _States.concat(levels)


def cross_moments(q: QParams, T: int, log_h1) -> np.ndarray:
    """S[a, b] = E[B^a H^b | h_1, s_0] for a + b <= 4.

    Returns an array of shape ``(len(log_h1), 5, 5, N)`` (the leading axis is
    dropped for a scalar ``log_h1``); S[0, 0] = 1.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    scalar = np.ndim(log_h1) == 0
    lh = np.atleast_1d(np.asarray(log_h1, dtype=float))
    n = q.n_states
    st = _all_anchor_chains(q, T)
    # one block per (degree, B-degree), each sorted by span so that the
    # chains still fitting in the window always form a prefix
    blocks = {}
    for g in np.unique(st.deg * 5 + st.xdeg):
        sub = st.take(np.flatnonzero(st.deg * 5 + st.xdeg == g))
        blocks[int(g)] = sub.take(np.argsort(sub.span, kind="stable"))
    partial = {g: [] for g in blocks}
    for shift in range(T):
        for g in list(blocks):
            sub = blocks[g]
            keep = np.searchsorted(sub.span, T - 1 - shift, side="right")
            if keep == 0:
                del blocks[g]
                continue
            if keep < len(sub):
                sub = sub.take(slice(0, keep))
            partial[g].append(np.exp(np.outer(lh, sub.A)) @ sub.F)
            blocks[g] = _empty_step(sub, q) if shift < T - 1 else sub
        if not blocks:
            break
    out = np.zeros((lh.size, 5, 5, n))
    for g, parts in partial.items():
        k, a = divmod(g, 5)
        stacked = np.stack(parts)
        acc = np.array([[math.fsum(stacked[:, h, j]) for j in range(n)] for h in range(lh.size)])
        # coefficient of x^a y^(k-a) in E[(xB + yH)^k] / k!
        out[:, a, k - a, :] = acc * factorial(a) * factorial(k - a)
    out[:, 0, 0, :] = 1.0
    return out[0] if scalar else out


def s_terms(ctx: MomentContext) -> dict:
    S = cross_moments(ctx.qparams, ctx.T, ctx.log_h1)[..., ctx.s0]
    return {
        "sum_h": S[0, 1],
        "SD1": S[0, 2], "SD2": S[2, 0], "SD3": S[1, 1],
        "ST1": S[0, 3], "ST2": S[3, 0], "ST3": S[1, 2], "ST4": S[2, 1],
        "SQ1": S[0, 4], "SQ2": S[4, 0], "SQ3": S[1, 3], "SQ4": S[2, 2], "SQ5": S[3, 1],
    }


def _assemble(S, T: int, r: float) -> np.ndarray:
    """Raw moments from the S-terms; ``S`` is indexed [a, b, ...]."""
    Tr = T * r
    sum_h = S[0, 1]
    second = 0.25 * S[0, 2] + S[2, 0] - S[1, 1]
    third = -S[0, 3] / 8 + S[3, 0] + 0.75 * S[1, 2] - 1.5 * S[2, 1]
    fourth = (S[0, 4] / 16 + S[4, 0] - 0.5 * S[1, 3] + 1.5 * S[2, 2] - 2 * S[3, 1])
    m1 = Tr - 0.5 * sum_h
    m2 = Tr**2 - Tr * sum_h + second
    m3 = Tr**3 - 1.5 * Tr**2 * sum_h + 3 * Tr * second + third
    m4 = (Tr**4 - 2 * Tr**3 * sum_h + 6 * Tr**2 * second
          + Tr * (-0.5 * S[0, 3] + 4 * S[3, 0] + 3 * S[1, 2] - 6 * S[2, 1]) + fourth)
    return np.stack([m1, m2, m3, m4], axis=-1)


def raw_moments_all(q: QParams, T: int, log_h1) -> np.ndarray:
    """E[R_T^k | h_1, s_0], k = 1..4, for every s_0: shape ``(..., N, 4)``."""
    S = cross_moments(q, T, log_h1)
    S = np.moveaxis(S, (-3, -2), (0, 1))
    return _assemble(S, T, q.r)


def raw_moments(ctx: MomentContext) -> tuple:
    m = raw_moments_all(ctx.qparams, ctx.T, ctx.log_h1)[ctx.s0]
    return tuple(float(v) for v in m)


# ---------------------------------------------------------------------------
# brute-force oracle

def _day_monomials(n: int, r: float):
    """(r - h/2 + sqrt(h) z)^n as a list of (coef, p, q)."""
    terms = Counter()
    for i in range(n + 1):
        for j in range(n - i + 1):
            l = n - i - j
            coef = factorial(n) / (factorial(i) * factorial(j) * factorial(l))
            terms[(j + 0.5 * l, l)] += coef * r**i * (-0.5) ** j
    return [(c, p, qz) for (p, qz), c in terms.items() if c != 0.0]


def bruteforce_moments(ctx: MomentContext, max_T: int = 10) -> tuple:
    """Multinomial expansion of E[(sum_t R_t)^k] over every multiset of days."""
    q, T = ctx.qparams, ctx.T
    if T > max_T:
        raise ValueError(f"brute force limited to T <= {max_T}")
    out = []
    for k in range(1, 5):
        total = []
        for combo in itertools.combinations_with_replacement(range(1, T + 1), k):
            mult = Counter(combo)
            weight = factorial(k)
            for c in mult.values():
                weight //= factorial(c)
            per_day = [[(t, c, p, qz) for c, p, qz in _day_monomials(n, q.r)]
                       for t, n in sorted(mult.items())]
            for choice in itertools.product(*per_day):
                coef = weight
                for _, c, _, _ in choice:
                    coef *= c
                if coef == 0.0 or any(qz % 2 for t, _, _, qz in choice if t == max(mult)):
                    continue
                val = expect_product([(t, p, qz) for t, _, p, qz in choice], q, ctx.log_h1)
                total.append(coef * val[ctx.s0])
        out.append(math.fsum(total))
    return tuple(out)


# ---------------------------------------------------------------------------
# cumulants

def cumulants_from_raw(m1, m2, m3, m4):
    """(mean, std, skewness, kurtosis) of R_T from its raw moments."""
    var = m2 - m1 * m1
    if np.any(np.asarray(var) <= 0):
        raise ValueError("non-positive variance")
    sd = np.sqrt(var)
    c3 = m3 - 3 * m1 * m2 + 2 * m1**3
    c4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    return m1, sd, c3 / sd**3, c4 / var**2


def cumulants(ctx: MomentContext) -> tuple:
    mu, sd, k3, k4 = cumulants_from_raw(*raw_moments(ctx))
    return float(mu), float(sd), float(k3), float(k4)
