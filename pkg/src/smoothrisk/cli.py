"""Command-line interface.

Subcommands:

- psi        tabulate the psi-transform of a loss as CSV
- calibrate  emit a calibration certificate for a named loss as JSON
- train      fit one kernel model on a dataset file; write model + trace
- sweep      run a (gamma, k, n) grid from a JSON config; write CSV
- rates      tabulate the rate calculus from a JSON config; write CSV
- verify     check the sweep inequalities from a sweep CSV; write JSON

Flags override config values; ``--out-dir`` defaults to the working
directory.  Dataset files are JSON objects with "instances" (list of rows),
"labels" (+-1), and optional "eta_values".
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import rates as rates_mod
from . import rkhs, sweep
from .losses import ReferenceLoss, SmoothedHingeLoss
from .synthetic import Dataset

LOSS_NAMES = (
    "smoothed_hinge",
    "hinge",
    "exponential",
    "logit",
    "truncated_quadratic",
    "constant",
)


def _make_loss(name, gamma):
    if name == "smoothed_hinge":
        if gamma is None:
            raise SystemExit("--gamma is required for smoothed_hinge")
        return SmoothedHingeLoss(gamma)
    if name == "constant":
        return cal.ConstantLoss()
    return ReferenceLoss(name)


def _out_path(args, default_name):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / default_name


def _cmd_psi(args):
    loss = _make_loss(args.loss, args.gamma)
    if args.closed_form:
        if args.loss != "smoothed_hinge":
            raise SystemExit("--closed-form applies only to smoothed_hinge")
        table = cal.psi_closed_form_table(args.gamma, args.grid_size)
    else:
        table = cal.psi_numeric(loss, args.grid_size)
    path = _out_path(args, f"psi_{args.loss}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("z,psi_tilde,psi,lower_bound\n")
        for z, raw, val in zip(table.z, table.raw_values, table.values):
            if args.loss == "smoothed_hinge" and 0.0 < z < 1.0:
                lb = cal.psi_lower_bound(z, args.gamma)
            else:
                lb = math.nan
            fh.write(f"{float(z)!r},{float(raw)!r},{float(val)!r},{float(lb)!r}\n")
    print(path)
    return 0


def _cmd_calibrate(args):
    loss = _make_loss(args.loss, args.gamma)
    cert = cal.is_calibrated(loss, margin=args.margin)
    payload = {
        "loss": args.loss,
        "gamma": args.gamma,
        "calibrated": cert.calibrated,
        "deriv_at_zero": cert.deriv_at_zero,
        "min_gap": cert.min_gap,
        "margin": cert.margin,
        "etas": cert.etas.tolist(),
        "gaps": cert.gaps.tolist(),
    }
    path = _out_path(args, f"calibration_{args.loss}.json")
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    print(path)
    return 0 if cert.calibrated else 1


def _load_dataset(path):
    with open(path, encoding="utf-8") as fh:
        return Dataset.from_dict(json.load(fh))


def _kernel_from_args(args):
    return rkhs.KernelSpec(
        kind=args.kernel,
        bandwidth=args.bandwidth,
        degree=args.degree,
        offset=args.offset,
    )


def _cmd_train(args):
    data = _load_dataset(args.data)
    kernel = _kernel_from_args(args)
    model, state = rkhs.train_agd(
        data, kernel, args.norm_bound, args.gamma, args.iterations
    )
    model_path = _out_path(args, "model.json")
    rkhs.save_model(model, model_path, gamma=args.gamma, trace=state.trace)
    trace_path = _out_path(args, "trace.csv")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("s,empirical_risk,suboptimality_bound\n")
        for s, risk in state.trace:
            bound = rkhs.suboptimality_bound(args.gamma, args.norm_bound, s)
            fh.write(f"{s},{risk!r},{bound!r}\n")
    print(model_path)
    print(trace_path)
    return 0


def _cmd_sweep(args):
    with open(args.config, encoding="utf-8") as fh:
        payload = json.load(fh)
    if args.seed is not None:
        payload["master_seed"] = args.seed
    if args.threads is not None:
        payload["threads"] = args.threads
    config = sweep.SweepConfig.from_dict(payload)
    csv_path = _out_path(args, "sweep.csv")
    log = sys.stderr if args.progress else None
    sweep.run_sweep(config, csv_path=csv_path, log=log)
    print(csv_path)
    return 0


def _cmd_rates(args):
    with open(args.config, encoding="utf-8") as fh:
        payload = json.load(fh)
    alpha = float(payload["alpha"])
    xi = float(payload["xi"])
    r_hinge_star = float(payload["r_hinge_star"])
    params = rates_mod.RateParams(
        B=float(payload.get("B", 1.0)),
        delta=float(payload.get("delta", 0.05)),
        alpha=alpha,
        xi=xi,
        constants=payload.get("constants", {}),
    )
    if "n_values" in payload:
        n_values = [int(v) for v in payload["n_values"]]
    else:
        grid = payload["n_grid"]
        n_values = [
            int(round(v))
            for v in np.logspace(
                math.log10(grid["start"]), math.log10(grid["stop"]), grid["num"]
            )
        ]
    path = _out_path(args, "rates.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n,beta,tau1,tau2,n0,regime,bound_value\n")
        for n in n_values:
            rb = rates_mod.regime_bound(n, r_hinge_star, params)
            fh.write(
                f"{n},{rb.beta!r},{rb.tau1!r},{rb.tau2!r},{rb.n0!r},"
                f"{rb.regime},{rb.value!r}\n"
            )
    print(path)
    return 0


def _cmd_verify(args):
    reports = sweep.read_reports_csv(args.csv)
    summary = sweep.verify_report(reports, slack=args.slack)
    path = _out_path(args, "verification.json")
    sweep.save_verification(summary, path)
    print(path)
    return 0 if summary.all_passed else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smoothrisk",
        description="Smoothed hinge losses, psi-transforms, RKHS training, and risk verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default=".", help="directory for outputs")

    p_psi = sub.add_parser("psi", help="tabulate a psi-transform as CSV")
    p_psi.add_argument("--loss", choices=LOSS_NAMES, default="smoothed_hinge")
    p_psi.add_argument("--gamma", type=float, default=None)
    p_psi.add_argument("--grid-size", type=int, default=1001)
    p_psi.add_argument(
        "--closed-form",
        action="store_true",
        help="use the smoothed-hinge closed form instead of the numeric engine",
    )
    common(p_psi)
    p_psi.set_defaults(func=_cmd_psi)

    p_cal = sub.add_parser("calibrate", help="calibration certificate for a loss")
    p_cal.add_argument("--loss", choices=LOSS_NAMES, required=True)
    p_cal.add_argument("--gamma", type=float, default=None)
    p_cal.add_argument("--margin", type=float, default=1e-9)
    common(p_cal)
    p_cal.set_defaults(func=_cmd_calibrate)

    p_train = sub.add_parser("train", help="train one kernel model on a dataset file")
    p_train.add_argument("--data", required=True, help="dataset JSON file")
    p_train.add_argument("--kernel", choices=rkhs.KERNEL_KINDS, default="rbf")
    p_train.add_argument("--bandwidth", type=float, default=None)
    p_train.add_argument("--degree", type=int, default=None)
    p_train.add_argument("--offset", type=float, default=0.0)
    p_train.add_argument("--norm-bound", type=float, required=True)
    p_train.add_argument("--gamma", type=float, required=True)
    p_train.add_argument("--iterations", type=int, required=True)
    common(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a grid sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int, default=None, help="override master seed")
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.add_argument("--progress", action="store_true")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_rates = sub.add_parser("rates", help="tabulate the rate calculus")
    p_rates.add_argument("--config", required=True)
    common(p_rates)
    p_rates.set_defaults(func=_cmd_rates)

    p_verify = sub.add_parser("verify", help="check sweep inequalities from CSV")
    p_verify.add_argument("--csv", required=True)
    p_verify.add_argument("--slack", type=float, default=3.0)
    common(p_verify)
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
