"""CSV ingestion and emission for series and option quotes, JSON fit artifacts.

Returns file header: ``date,log_return,realized_variance``.
Options file header:
``date,dtm_calendar_days,strike,kind,mid_price,underlying,rate_annualized``.
Annualized rates are converted to daily log rates by dividing by 252.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .model import PhysicalParams
from .panel import MarketPanel, OptionPanel, calendar_to_trading
from .risk_neutral import KernelParams

__all__ = [
    "RETURNS_HEADER",
    "OPTIONS_HEADER",
    "SCHEMA_VERSION",
    "DataError",
    "load_panel",
    "read_returns",
    "read_options",
    "write_returns",
    "write_options",
    "save_json",
    "load_params",
    "params_payload",
]

RETURNS_HEADER = ["date", "log_return", "realized_variance"]
OPTIONS_HEADER = ["date", "dtm_calendar_days", "strike", "kind", "mid_price", "underlying",
                  "rate_annualized"]
SCHEMA_VERSION = 1
ANNUAL_DAYS = 252.0
MIN_DTM, MAX_DTM = 14, 183


class DataError(ValueError):
    """Malformed input file; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = f"{self.path}:{line}: " if line is not None else (f"{self.path}: " if path else "")
        super().__init__(where + message)


def _rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise DataError("empty file (header missing)", path, 1)
        if [h.strip() for h in got] != header:
            raise DataError(f"expected header {','.join(header)}, got {','.join(got)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            yield lineno, [c.strip() for c in row]


def _number(text, name, path, lineno):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"cannot parse {name}={text!r}", path, lineno) from None
    if not math.isfinite(v):
        raise DataError(f"{name} is not finite", path, lineno)
    return v


def _date(text, path, lineno):
    try:
        return np.datetime64(text, "D")
    except ValueError:
        raise DataError(f"cannot parse date {text!r}", path, lineno) from None


def read_returns(path):
    """``(dates, log_returns, realized_variance)`` with validated rows."""
    dates, rets, rv = [], [], []
    for lineno, (d, r, x) in _rows(path, RETURNS_HEADER):
        day = _date(d, path, lineno)
        if dates and day <= dates[-1]:
            raise DataError("dates must be strictly increasing", path, lineno)
        xv = _number(x, "realized_variance", path, lineno)
        if xv <= 0:
            raise DataError("realized_variance must be positive", path, lineno)
        dates.append(day)
        rets.append(_number(r, "log_return", path, lineno))
        rv.append(xv)
    if not dates:
        raise DataError("no observations", path)
    return np.array(dates), np.array(rets), np.array(rv)


def read_options(path, dates, maturity_filter: bool = True, convert_puts: bool = False,
                 allow_unmatched: bool = False) -> OptionPanel:
    """Parse quotes and align them with the returns ``dates``.

    With ``maturity_filter`` quotes outside 14-183 calendar days are
    dropped.  With ``convert_puts`` puts become calls through put-call
    parity.  Quote dates missing from the series raise unless
    ``allow_unmatched``.
    """
    index = {str(d): i for i, d in enumerate(np.asarray(dates).astype("datetime64[D]"))}
    cols = {k: [] for k in ("day", "dtm_calendar", "strike", "is_call", "price", "spot",
                            "rate_annual")}
    for lineno, (d, dtm, k, kind, mid, spot, rate) in _rows(path, OPTIONS_HEADER):
        day = str(_date(d, path, lineno))
        if day not in index:
            if allow_unmatched:
                continue
            raise DataError(f"quote date {day} is not in the returns series", path, lineno)
        dtm_v = _number(dtm, "dtm_calendar_days", path, lineno)
        k_v = _number(k, "strike", path, lineno)
        mid_v = _number(mid, "mid_price", path, lineno)
        s_v = _number(spot, "underlying", path, lineno)
        r_v = _number(rate, "rate_annualized", path, lineno)
        kind = kind.lower()
        if kind not in ("call", "put", "c", "p"):
            raise DataError(f"kind must be call or put, got {kind!r}", path, lineno)
        if dtm_v < 1 or k_v <= 0 or s_v <= 0 or mid_v <= 0:
            raise DataError("maturity, strike, underlying and price must be positive",
                            path, lineno)
        if maturity_filter and not MIN_DTM <= dtm_v <= MAX_DTM:
            continue
        cols["day"].append(index[day])
        cols["dtm_calendar"].append(dtm_v)
        cols["strike"].append(k_v)
        cols["is_call"].append(kind in ("call", "c"))
        cols["price"].append(mid_v)
        cols["spot"].append(s_v)
        cols["rate_annual"].append(r_v)
    arr = {k: np.array(v, dtype=bool if k == "is_call" else (int if k == "day" else float))
           for k, v in cols.items()}
    dtm_days = calendar_to_trading(arr["dtm_calendar"]) if arr["day"].size else np.zeros(0, int)
    rate = arr["rate_annual"] / ANNUAL_DAYS
    price = arr["price"]
    is_call = arr["is_call"]
    if convert_puts and price.size:
        parity = arr["spot"] - arr["strike"] * np.exp(-rate * dtm_days)
        price = np.where(is_call, price, price + parity)
        is_call = np.ones_like(is_call)
    return OptionPanel(day=arr["day"], spot=arr["spot"], strike=arr["strike"],
                       dtm_days=dtm_days, rate=rate, is_call=is_call, price=price,
                       dtm_calendar=arr["dtm_calendar"], rate_annual=arr["rate_annual"])


def load_panel(returns_path, options_path=None, maturity_filter: bool = True,
               convert_puts: bool = False, allow_unmatched: bool = False) -> MarketPanel:
    dates, rets, rv = read_returns(returns_path)
    opts = None
    if options_path is not None:
        opts = read_options(options_path, dates, maturity_filter, convert_puts, allow_unmatched)
    return MarketPanel(dates=dates.astype(str), returns=rets, realized_variance=rv, options=opts)


def write_returns(panel: MarketPanel, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RETURNS_HEADER)
        for d, r, x in zip(panel.dates, panel.returns, panel.realized_variance):
            w.writerow([d, repr(float(r)), repr(float(x))])


def write_options(options: OptionPanel, dates, path):
    dates = np.asarray(dates).astype(str)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OPTIONS_HEADER)
        for i in range(len(options)):
            w.writerow([dates[options.day[i]], repr(float(options.dtm_calendar[i])),
                        repr(float(options.strike[i])),
                        "call" if options.is_call[i] else "put",
                        repr(float(options.price[i])), repr(float(options.spot[i])),
                        repr(float(options.rate_annual[i]))])


# ---------------------------------------------------------------------------
# JSON artifacts

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def save_json(payload: dict, path):
    out = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(_jsonable(out), indent=2, sort_keys=False) + "\n")


def params_payload(params: PhysicalParams, kernel: KernelParams | None) -> dict:
    return {"params": params.to_dict(),
            "kernel": None if kernel is None else {"chi": kernel.chi.tolist(), "psi": kernel.psi}}


def load_params(path):
    """``(params, kernel)`` from a fit report or a bare parameter file."""
    data = json.loads(Path(path).read_text())
    version = data.get("schema_version")
    if version is not None and version > SCHEMA_VERSION:
        raise DataError(f"unsupported schema_version {version}", path)
    if "params" not in data:
        raise DataError("missing 'params' object", path)
    params = PhysicalParams.from_dict(data["params"])
    k = data.get("kernel")
    kernel = None if k is None else KernelParams.for_params(params, k["chi"])
    return params, kernel
