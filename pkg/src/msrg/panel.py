"""In-memory market data: a daily returns/realized-measure series plus option quotes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pricing import OptionQuote, bs_delta, bs_vega, implied_vol

__all__ = ["OptionPanel", "MarketPanel", "calendar_to_trading"]


def calendar_to_trading(dtm_calendar) -> np.ndarray:
    """Calendar days to maturity -> trading days (x252/365, rounded, at least 1)."""
    days = np.rint(np.asarray(dtm_calendar, dtype=float) * 252.0 / 365.0).astype(int)
    return np.maximum(days, 1)


@dataclass
class OptionPanel:
    """Option quotes stored column-wise.

    ``day`` indexes the returns series: a quote on day ``t`` is priced with
    information up to and including day ``t``.  ``rate`` is a daily log rate.
    """

    day: np.ndarray
    spot: np.ndarray
    strike: np.ndarray
    dtm_days: np.ndarray
    rate: np.ndarray
    is_call: np.ndarray
    price: np.ndarray
    dtm_calendar: np.ndarray | None = None
    vix: np.ndarray | None = None
    rate_annual: np.ndarray | None = None   # as quoted, kept for exact round trips
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.day = np.asarray(self.day, dtype=int)
        n = self.day.size
        for name in ("spot", "strike", "rate", "price"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.dtm_days = np.asarray(self.dtm_days, dtype=int)
        self.is_call = np.asarray(self.is_call, dtype=bool)
        if self.dtm_calendar is None:
            self.dtm_calendar = np.rint(self.dtm_days * 365.0 / 252.0)
        self.dtm_calendar = np.asarray(self.dtm_calendar, dtype=float)
        if self.vix is None:
            self.vix = np.full(n, np.nan)
        self.vix = np.asarray(self.vix, dtype=float)
        if self.rate_annual is None:
            self.rate_annual = self.rate * 252.0
        self.rate_annual = np.asarray(self.rate_annual, dtype=float)
        for name in ("spot", "strike", "dtm_days", "rate", "is_call", "price",
                     "dtm_calendar", "vix", "rate_annual"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name} has the wrong length")

    def __len__(self) -> int:
        return self.day.size

    def quote(self, i: int) -> OptionQuote:
        return OptionQuote(spot=float(self.spot[i]), strike=float(self.strike[i]),
                           dtm_days=int(self.dtm_days[i]), rate=float(self.rate[i]),
                           kind="call" if self.is_call[i] else "put",
                           market_price=float(self.price[i]))

    def subset(self, rows) -> "OptionPanel":
        """Quotes selected by a boolean mask or an integer index array."""
        rows = np.asarray(rows)
        idx = np.flatnonzero(rows) if rows.dtype == bool else rows.astype(int)
        return OptionPanel(day=self.day[idx], spot=self.spot[idx], strike=self.strike[idx],
                           dtm_days=self.dtm_days[idx], rate=self.rate[idx],
                           is_call=self.is_call[idx], price=self.price[idx],
                           dtm_calendar=self.dtm_calendar[idx], vix=self.vix[idx],
                           rate_annual=self.rate_annual[idx])

    def _market_greeks(self):
        if "iv" not in self._cache:
            iv = np.full(len(self), np.nan)
            vega = np.full(len(self), np.nan)
            delta = np.full(len(self), np.nan)
            for i in range(len(self)):
                q = self.quote(i)
                try:
                    iv[i] = implied_vol(q, q.market_price)
                except ValueError:
                    continue
                vega[i] = bs_vega(q, iv[i])
                call_q = OptionQuote(q.spot, q.strike, q.dtm_days, q.rate, "call")
                delta[i] = bs_delta(call_q, iv[i])
            self._cache.update(iv=iv, vega=vega, delta=delta)
        return self._cache["iv"], self._cache["vega"], self._cache["delta"]

    @property
    def market_iv(self) -> np.ndarray:
        return self._market_greeks()[0]

    @property
    def market_vega(self) -> np.ndarray:
        return self._market_greeks()[1]

    @property
    def call_delta(self) -> np.ndarray:
        """Black-Scholes call delta at the market implied volatility."""
        return self._market_greeks()[2]


@dataclass
class MarketPanel:
    dates: np.ndarray
    returns: np.ndarray
    realized_variance: np.ndarray
    options: OptionPanel | None = None

    def __post_init__(self):
        self.dates = np.asarray(self.dates).astype(str)
        self.returns = np.asarray(self.returns, dtype=float)
        self.realized_variance = np.asarray(self.realized_variance, dtype=float)
        if not (self.dates.shape == self.returns.shape == self.realized_variance.shape):
            raise ValueError("dates, returns and realized_variance must have equal length")
        if np.any(self.realized_variance <= 0):
            raise ValueError("realized variance must be positive")
        if self.options is not None and len(self.options):
            if self.options.day.min() < 0 or self.options.day.max() >= self.returns.size:
                raise ValueError("option quote dates fall outside the returns series")

    @property
    def log_x(self) -> np.ndarray:
        return np.log(self.realized_variance)

    def __len__(self) -> int:
        return self.returns.size

    @classmethod
    def from_path(cls, path, options: OptionPanel | None = None, start: str = "2000-01-03"):
        """Wrap a simulated path with business-day dates."""
        dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + 3 * len(path) + 10)
        dates = dates[np.is_busday(dates)][:len(path)]
        return cls(dates=dates, returns=path.returns, realized_variance=np.exp(path.log_x),
                   options=options)

