"""Markov-switching Realized GARCH: filtering, estimation and option pricing
with a regime-dependent variance risk premium."""

from .estimation import EstimationConfig, FitReport, estimate, robust_se
from .filtering import FilterOutput, run_filter
from .hng import HngParams, hng_mc_price, hng_to_q
from .model import PhysicalParams, StateDistribution, simulate, reference_params
from .moments import MomentContext, cumulants, raw_moments
from .panel import MarketPanel, OptionPanel
from .pricing import OptionQuote, implied_vol, mc_price, price
from .risk_neutral import KernelParams, QParams, reference_kernel, to_q, vix

__all__ = [
    "EstimationConfig", "FitReport", "estimate", "robust_se",
    "FilterOutput", "run_filter",
    "HngParams", "hng_mc_price", "hng_to_q",
    "PhysicalParams", "StateDistribution", "simulate", "reference_params",
    "MomentContext", "cumulants", "raw_moments",
    "MarketPanel", "OptionPanel",
    "OptionQuote", "implied_vol", "mc_price", "price",
    "KernelParams", "QParams", "reference_kernel", "to_q", "vix",
]
