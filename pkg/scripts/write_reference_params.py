"""Write the reference two-regime parameters (log-variance mean -9.3672)
and their variance-risk prices as a fit JSON usable by every CLI command."""

import argparse

from msrg import io
from msrg.model import reference_params
from msrg.risk_neutral import reference_kernel

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rate", type=float, default=0.0, help="daily risk-free rate")
    ap.add_argument("--out", default="reference_params.json")
    a = ap.parse_args()
    params = reference_params(r=a.rate)
    io.save_json(io.params_payload(params, reference_kernel(params)), a.out)
    print(f"wrote {a.out}")
