"""Simulation studies on synthetic data: parameter recovery and nesting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .estimation import EstimationConfig, ParamSpace, estimate, synthetic_options
from .model import REFERENCE_LOG_MEAN, omega_from_log_mean, simulate, reference_params
from .panel import MarketPanel
from .risk_neutral import KernelParams

__all__ = ["RecoveryRun", "recovery_study", "NestingResult", "nesting_truth", "nesting_study"]


@dataclass
class RecoveryRun:
    """One simulate-and-refit replication.

    ``z`` holds (estimate - truth) / SE with transitions as probabilities,
    ``z_logodds`` the same with transitions as log(π_ij / π_ii).
    """

    rep: int
    loglik: float
    z: dict
    z_logodds: dict
    labels_ordered: bool
    switches: int
    se_flags: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def within_3se(self) -> bool:
        return all(abs(v) <= 3 for v in self.z.values())

    @property
    def within_3se_logodds(self) -> bool:
        return all(abs(v) <= 3 for v in self.z_logodds.values())

    def to_dict(self) -> dict:
        return {"rep": self.rep, "loglik": self.loglik, "all_within_3se": self.within_3se,
                "all_within_3se_logodds": self.within_3se_logodds,
                "labels_ordered": self.labels_ordered, "switches": self.switches,
                "z": self.z, "z_logodds": self.z_logodds, "se_flags": self.se_flags,
                "seconds": self.seconds}


def _zscores(fit, truth, names):
    est = fit.diagnostics["natural"]
    return {n: (est[n] - truth[n]) / fit.se[n] if fit.se[n] > 0 else float("inf")
            for n in names}


def recovery_study(reps: int = 20, T: int = 7559, restarts: int = 2, seed0: int = 100,
                   truth=None, log=None) -> list[RecoveryRun]:
    """Simulate ``reps`` paths at ``truth`` and refit each by P-only QMLE.

    Replication ``k`` uses seed ``seed0 + k`` for both simulation and
    optimizer starts.  ``log`` receives one progress line per replication.
    """
    truth = reference_params() if truth is None else truth
    space = ParamSpace(truth.n_states, joint=False)
    truth_nat = dict(zip(space.natural_names(), space.natural(truth)))
    truth_nat.update({f"trans_{i}_{j}": truth.trans[i, j] for i, j in space.off})
    runs = []
    for k in range(reps):
        t0 = time.time()
        path = simulate(truth, T, seed=seed0 + k)
        fit = estimate(MarketPanel.from_path(path),
                       EstimationConfig(n_states=truth.n_states, restarts=restarts,
                                        seed=seed0 + k, r=truth.r))
        run = RecoveryRun(rep=k, loglik=fit.loglik_p,
                          z=_zscores(fit, truth_nat, space.names),
                          z_logodds=_zscores(fit, truth_nat, space.natural_names()),
                          labels_ordered=bool(np.all(np.diff(fit.params.xi) > 0)),
                          switches=int(np.sum(np.diff(path.states) != 0)),
                          se_flags=list(fit.diagnostics["se_flags"]),
                          seconds=time.time() - t0)
        runs.append(run)
        if log is not None:
            worst = max(run.z, key=lambda n: abs(run.z[n]))
            log(f"rep {k:2d} ll={run.loglik:.2f} ok={run.within_3se} "
                f"ok_logodds={run.within_3se_logodds} worst={worst}:{run.z[worst]:.2f} "
                f"switches={run.switches} ({run.seconds:.1f}s)")
    return runs


@dataclass
class NestingResult:
    """Joint fits of the two-regime model and its one-regime restriction."""

    panel: MarketPanel
    truth: object
    kernel: object
    two: object     # FitReport
    one: object     # FitReport

    def improves(self) -> dict:
        """Direction checks: higher total loglik, lower sigma_e and IV RMSE with two regimes."""
        return {"loglik_total": self.two.loglik_total > self.one.loglik_total,
                "sigma_e": self.two.sigma_e < self.one.sigma_e,
                "rmse_iv": self.two.rmse["overall"] < self.one.rmse["overall"]}

    def relative_reductions(self) -> dict:
        return {"sigma_e": 1 - self.two.sigma_e / self.one.sigma_e,
                "rmse_iv": 1 - self.two.rmse["overall"] / self.one.rmse["overall"]}


def nesting_truth():
    """Two regimes with frequent switching and distinct variance-risk prices."""
    base = reference_params()
    trans = np.array([[0.995, 0.005], [0.01, 0.99]])
    xi = np.array([-0.95, -0.70])
    omega = omega_from_log_mean(REFERENCE_LOG_MEAN, base.beta, base.gamma, base.phi, xi, trans)
    params = base.replace(trans=trans, xi=xi, omega=omega)
    return params, KernelParams.for_params(params, [-0.3, 0.5])


def nesting_study(T: int = 2000, option_every: int = 50, noise: float = 0.002, seed: int = 7,
                  joint_iters: int = 300, restarts: int = 1, truth=None) -> NestingResult:
    """Fit N=2 and N=1 jointly to simulated returns plus a model-generated option panel.

    Quotes are calls at 10 and 21 trading days over five strikes, priced by
    the true model every ``option_every`` days with ``noise`` vega-scaled error.
    """
    params, kernel = nesting_truth() if truth is None else truth
    path = simulate(params, T, seed=seed)
    base = MarketPanel.from_path(path)
    opts = synthetic_options(base, params, kernel, days=np.arange(20, T, option_every),
                             noise=noise, seed=seed + 1)
    panel = MarketPanel(base.dates, base.returns, base.realized_variance, opts)
    fits = {}
    for n in (2, 1):
        cfg = EstimationConfig(mode="joint", n_states=n, restarts=restarts,
                               joint_iters=joint_iters, compute_se=False, seed=seed, r=params.r)
        fits[n] = estimate(panel, cfg)
    return NestingResult(panel=panel, truth=params, kernel=kernel, two=fits[2], one=fits[1])
