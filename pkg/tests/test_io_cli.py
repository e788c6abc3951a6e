import json
import math
from pathlib import Path

import numpy as np
import pytest

from msrg import io
from msrg.cli import main
from msrg.estimation import EstimationConfig
from msrg.model import reference_params
from msrg.risk_neutral import reference_kernel

DATA = Path(__file__).parent / "data"
RETURNS = DATA / "returns_10d.csv"
OPTIONS = DATA / "options_10d.csv"


@pytest.fixture
def params_file(tmp_path):
    p = reference_params()
    path = tmp_path / "fit.json"
    io.save_json(io.params_payload(p, reference_kernel(p)), path)
    return path


def test_golden_round_trip(tmp_path):
    panel = io.load_panel(RETURNS, OPTIONS, maturity_filter=False)
    io.write_returns(panel, tmp_path / "r.csv")
    io.write_options(panel.options, panel.dates, tmp_path / "o.csv")
    assert (tmp_path / "r.csv").read_text() == RETURNS.read_text()
    assert (tmp_path / "o.csv").read_text() == OPTIONS.read_text()


def test_maturity_filter_and_rates():
    panel = io.load_panel(RETURNS, OPTIONS)
    assert len(panel.options) == 7
    assert np.all((panel.options.dtm_calendar >= 14) & (panel.options.dtm_calendar <= 183))
    assert panel.options.rate[0] == pytest.approx(0.0005 / 252)
    assert panel.options.dtm_days[0] == 14


def test_put_conversion_uses_parity():
    raw = io.load_panel(RETURNS, OPTIONS, maturity_filter=False)
    conv = io.load_panel(RETURNS, OPTIONS, maturity_filter=False, convert_puts=True)
    o = raw.options
    i = int(np.flatnonzero(~o.is_call)[0])
    want = o.price[i] + o.spot[i] - o.strike[i] * math.exp(-o.rate[i] * o.dtm_days[i])
    assert conv.options.is_call.all()
    assert conv.options.price[i] == pytest.approx(want, rel=1e-14)


def test_empty_option_file(tmp_path):
    f = tmp_path / "o.csv"
    f.write_text(",".join(io.OPTIONS_HEADER) + "\n")
    panel = io.load_panel(RETURNS, f)
    assert len(panel.options) == 0 and len(panel) == 10


def test_negative_rv_reports_line(tmp_path):
    f = tmp_path / "r.csv"
    lines = RETURNS.read_text().splitlines()
    lines[4] = "2021-03-04,-0.0134,-0.000221"
    f.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError) as err:
        io.load_panel(f)
    assert err.value.line == 5


@pytest.mark.parametrize("mutate,needle", [
    (lambda t: t.replace("log_return", "ret"), "header"),
    (lambda t: t.replace("2021-03-05", "2021-03-01"), "increasing"),
    (lambda t: t.replace("0.0195", "abc"), "parse"),
])
def test_schema_errors(tmp_path, mutate, needle):
    f = tmp_path / "r.csv"
    f.write_text(mutate(RETURNS.read_text()))
    with pytest.raises(io.DataError, match=needle):
        io.load_panel(f)


def test_misaligned_quote_date(tmp_path):
    f = tmp_path / "o.csv"
    f.write_text(OPTIONS.read_text().replace("2021-03-08,28.0,3750.0", "2021-03-07,28.0,3750.0"))
    with pytest.raises(io.DataError, match="not in the returns"):
        io.load_panel(RETURNS, f)


def test_params_json_round_trip(params_file):
    p, k = io.load_params(params_file)
    assert p.to_dict() == reference_params().to_dict()
    assert k.chi.tolist() == [-0.0052, 0.4586]
    assert json.loads(params_file.read_text())["schema_version"] == io.SCHEMA_VERSION


def test_cli_simulate_one_day(tmp_path, params_file):
    out = tmp_path / "path.csv"
    assert main(["simulate", "--params", str(params_file), "--days", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2


def test_cli_simulate_deterministic(tmp_path, params_file):
    for name in ("a.csv", "b.csv"):
        main(["simulate", "--params", str(params_file), "--days", "30", "--seed", "4",
              "--measure", "q", "--out", str(tmp_path / name)])
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_cli_filter_and_vix(tmp_path, params_file):
    assert main(["filter", "--data", str(RETURNS), "--params", str(params_file),
                 "--out", str(tmp_path / "p.csv")]) == 0
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0].startswith("date,p_state0,p_state1,p_high") and len(rows) == 11
    assert main(["vix", "--data", str(RETURNS), "--params", str(params_file),
                 "--out", str(tmp_path / "v.csv")]) == 0


def test_cli_price_methods_agree(tmp_path, params_file):
    args = ["price", "--params", str(params_file), "--quotes", str(OPTIONS), "--data", str(RETURNS)]
    assert main(args + ["--out", str(tmp_path / "e.csv")]) == 0
    assert main(args + ["--method", "mc", "--paths", "40000", "--out", str(tmp_path / "m.csv")]) == 0
    read = lambda f: np.genfromtxt(tmp_path / f, delimiter=",", names=True, dtype=None,
                                   encoding=None)
    e, m = read("e.csv"), read("m.csv")
    gap = np.abs(e["model_price"] - m["model_price"])
    # four-moment expansion drifts to ~10% by 120 trading days at this skew
    short = e["dtm_calendar_days"] <= 60
    assert np.all(gap[short] <= 4 * m["mc_se"][short] + 0.03 * e["model_price"][short])
    assert np.all(gap <= 4 * m["mc_se"] + 0.12 * e["model_price"])


@pytest.mark.parametrize("suite", ["edgeworth", "martingale", "filter", "moments"])
def test_cli_validate_suites(params_file, suite, capsys):
    assert main(["validate", "--suite", suite, "--params", str(params_file)]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True


def test_cli_error_is_json(tmp_path, capsys):
    code = main(["filter", "--data", str(tmp_path / "missing.csv"), "--params",
                 str(tmp_path / "nope.json")])
    err = json.loads(capsys.readouterr().err)
    assert code != 0 and err["error"]


def test_cli_estimate_embeds_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iters": 50, "polish": False, "compute_se": False}))
    out = tmp_path / "fit.json"
    assert main(["estimate", "--data", str(RETURNS), "--states", "1", "--restarts", "1",
                 "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["config"] == EstimationConfig(n_states=1, restarts=1, max_iters=50, polish=False,
                                             compute_se=False).to_dict()
    # re-running from the embedded config reproduces the fit exactly
    cfg.write_text(json.dumps(rep["config"]))
    out2 = tmp_path / "fit2.json"
    main(["estimate", "--data", str(RETURNS), "--config", str(cfg), "--out", str(out2)])
    assert json.loads(out2.read_text())["params"] == rep["params"]
