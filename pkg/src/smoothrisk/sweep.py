"""Grid sweeps over (gamma, k, n) with end-to-end inequality verification.

For every cell of the grid and every repetition the sweep generates a fresh
training set, trains the accelerated solver for the cell's iteration budget,
and measures empirical and Monte Carlo risks.  Each row also carries the two
theoretical quantities the verifier checks it against: the binary-excess
translation bound evaluated at the measured surrogate excess, and the solver
suboptimality guarantee gamma*B^2/(k+2)^2.

Expensive shared quantities are computed once before the per-cell phase and
cached: the Bayes risk per spec, the plug-in estimate of the optimal in-ball
surrogate risk per (spec, gamma), and a well-converged reference empirical
risk per (dataset, gamma) used for the suboptimality check.

All randomness derives from a single master seed through SeedSequence spawn
keys indexed by purpose and cell coordinates, so a rerun with the same master
seed reproduces every row exactly, regardless of thread scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone

import numpy as np

from .calibration import binary_excess_bound, psi_smoothed_hinge_closed
from .montecarlo import estimate_r_phi_star, mc_risk_pair
from .rkhs import (
    KernelSpec,
    NumericFailure,
    empirical_phi_risk,
    gram_matrix,
    resolve_kernel,
    suboptimality_bound,
    top_eigenvalue,
    train_agd,
)
from .synthetic import SyntheticSpec, bayes_risk, generate

CSV_SCHEMA = "smoothrisk-sweep-1"

_SEED_DATASET = 0
_SEED_MC = 1
_SEED_RPHI = 2
_SEED_BAYES = 3


@dataclass(frozen=True)
class SweepConfig:
    """Grids, model class, Monte Carlo sizes, and reference-solve budgets."""

    specs: tuple[SyntheticSpec, ...]
    gammas: tuple[float, ...]
    ks: tuple[int, ...]
    ns: tuple[int, ...]
    repetitions: int
    kernel: KernelSpec
    norm_bound: float
    mc_samples: int = 100_000
    master_seed: int = 0
    r_phi_star_n_train: int = 5000
    r_phi_star_mc_samples: int = 100_000
    r_phi_star_max_iterations: int = 100_000
    r_phi_star_risk_tol: float = 1e-12
    reference_max_iterations: int = 5000
    reference_risk_tol: float = 1e-12
    threads: int = 1

    def to_dict(self):
        return {
            "specs": [s.to_dict() for s in self.specs],
            "gammas": list(self.gammas),
            "ks": list(self.ks),
            "ns": list(self.ns),
            "repetitions": self.repetitions,
            "kernel": {
                "kind": self.kernel.kind,
                "bandwidth": self.kernel.bandwidth,
                "degree": self.kernel.degree,
                "offset": self.kernel.offset,
            },
            "norm_bound": self.norm_bound,
            "mc_samples": self.mc_samples,
            "master_seed": self.master_seed,
            "r_phi_star": {
                "n_train": self.r_phi_star_n_train,
                "mc_samples": self.r_phi_star_mc_samples,
                "max_iterations": self.r_phi_star_max_iterations,
                "risk_tol": self.r_phi_star_risk_tol,
            },
            "reference": {
                "max_iterations": self.reference_max_iterations,
                "risk_tol": self.reference_risk_tol,
            },
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, payload):
        kern = payload.get("kernel", {"kind": "rbf"})
        rphi = payload.get("r_phi_star", {})
        ref = payload.get("reference", {})
        return cls(
            specs=tuple(SyntheticSpec.from_dict(s) for s in payload["specs"]),
            gammas=tuple(float(g) for g in payload["gammas"]),
            ks=tuple(int(k) for k in payload["ks"]),
            ns=tuple(int(n) for n in payload["ns"]),
            repetitions=int(payload.get("repetitions", 1)),
            kernel=KernelSpec(
                kind=kern["kind"],
                bandwidth=kern.get("bandwidth"),
                degree=kern.get("degree"),
                offset=kern.get("offset", 0.0),
            ),
            norm_bound=float(payload["norm_bound"]),
            mc_samples=int(payload.get("mc_samples", 100_000)),
            master_seed=int(payload.get("master_seed", 0)),
            r_phi_star_n_train=int(rphi.get("n_train", 5000)),
            r_phi_star_mc_samples=int(rphi.get("mc_samples", 100_000)),
            r_phi_star_max_iterations=int(rphi.get("max_iterations", 100_000)),
            r_phi_star_risk_tol=float(rphi.get("risk_tol", 1e-12)),
            reference_max_iterations=int(ref.get("max_iterations", 5000)),
            reference_risk_tol=float(ref.get("risk_tol", 1e-12)),
            threads=int(payload.get("threads", 1)),
        )


@dataclass
class RiskReport:
    """One sweep row: measured risks, excesses, and theoretical bounds."""

    family: str
    gamma: float
    k: int
    n: int
    repetition: int
    seed: int
    emp_phi_risk: float = math.nan
    ref_emp_phi_risk: float = math.nan
    mc_phi_risk: float = math.nan
    mc_binary_risk: float = math.nan
    bayes_risk: float = math.nan
    r_phi_star: float = math.nan
    excess_phi: float = math.nan
    excess_binary: float = math.nan
    binary_excess_bound: float = math.nan
    suboptimality_bound: float = math.nan
    mc_phi_stderr: float = math.nan
    mc_binary_stderr: float = math.nan
    bayes_stderr: float = math.nan
    r_phi_star_stderr: float = math.nan
    error: str = ""


REPORT_COLUMNS = [f.name for f in fields(RiskReport)]
_INT_COLUMNS = {"k", "n", "repetition", "seed"}


def _derive_seed(master_seed, *key):
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(v) for v in key))
    return int(ss.generate_state(1)[0])


def run_sweep(config, csv_path=None, log=None):
    """Execute the grid and return one RiskReport per (cell, repetition).

    Per-cell failures are recorded in the row's ``error`` column and leave the
    numeric fields NaN; the sweep continues.  With ``csv_path`` set, rows are
    also written as CSV.  ``log`` may be a writable stream for progress lines.
    """
    cells = [
        (si, gi, ki, ni, rep)
        for si in range(len(config.specs))
        for gi in range(len(config.gammas))
        for ki in range(len(config.ks))
        for ni in range(len(config.ns))
        for rep in range(config.repetitions)
    ]

    def say(msg):
        if log is not None:
            print(msg, file=log, flush=True)

    bayes_cache = {}
    for si, spec in enumerate(config.specs):
        seed = _derive_seed(config.master_seed, _SEED_BAYES, si)
        bayes_cache[si] = bayes_risk(spec, seed=seed)
        say(f"bayes[{spec.family}] = {bayes_cache[si][0]:.6g}")

    rphi_cache = {}
    for si, spec in enumerate(config.specs):
        seed = _derive_seed(config.master_seed, _SEED_RPHI, si)
        train_data = generate(
            replace(spec, seed=seed), config.r_phi_star_n_train
        )
        kernel = resolve_kernel(config.kernel, train_data.instances)
        gram = gram_matrix(train_data.instances, kernel)
        lam = top_eigenvalue(gram)
        for gi, gamma in enumerate(config.gammas):
            est = estimate_r_phi_star(
                spec,
                kernel,
                config.norm_bound,
                gamma,
                n_train=config.r_phi_star_n_train,
                mc_samples=config.r_phi_star_mc_samples,
                max_iterations=config.r_phi_star_max_iterations,
                risk_tol=config.r_phi_star_risk_tol,
                seed=seed,
                gram=gram,
                lambda_max=lam,
                train_data=train_data,
            )
            rphi_cache[(si, gi)] = est
            say(f"r_phi_star[{spec.family}, gamma={gamma}] = {est.value:.6g}")

    datasets = {}
    for si, spec in enumerate(config.specs):
        for ni, n in enumerate(config.ns):
            for rep in range(config.repetitions):
                seed = _derive_seed(config.master_seed, _SEED_DATASET, si, ni, rep)
                data = generate(replace(spec, seed=seed), n)
                kernel = resolve_kernel(config.kernel, data.instances)
                gram = gram_matrix(data.instances, kernel)
                lam = top_eigenvalue(gram)
                datasets[(si, ni, rep)] = (data, kernel, gram, lam, seed)

    ref_risks = {}
    for (si, ni, rep), (data, kernel, gram, lam, _) in datasets.items():
        for gi, gamma in enumerate(config.gammas):
            _, state = train_agd(
                data,
                kernel,
                config.norm_bound,
                gamma,
                iterations=config.reference_max_iterations,
                risk_tol=config.reference_risk_tol,
                gram=gram,
                lambda_max=lam,
            )
            ref_risks[(si, gi, ni, rep)] = float(state.risks[-1])
        say(f"reference risks done for dataset ({si}, {ni}, {rep})")

    def run_cell(cell):
        si, gi, ki, ni, rep = cell
        spec = config.specs[si]
        gamma = config.gammas[gi]
        k = config.ks[ki]
        n = config.ns[ni]
        data, kernel, gram, lam, data_seed = datasets[(si, ni, rep)]
        report = RiskReport(
            family=spec.family, gamma=gamma, k=k, n=n, repetition=rep, seed=data_seed
        )
        report.suboptimality_bound = suboptimality_bound(gamma, config.norm_bound, k)
        try:
            model, state = train_agd(
                data,
                kernel,
                config.norm_bound,
                gamma,
                iterations=k,
                gram=gram,
                lambda_max=lam,
            )
            report.emp_phi_risk = float(state.risks[-1])
            report.ref_emp_phi_risk = ref_risks[(si, gi, ni, rep)]
            mc_seed = _derive_seed(config.master_seed, _SEED_MC, si, gi, ki, ni, rep)
            mc = mc_risk_pair(model, spec, gamma, config.mc_samples, mc_seed)
            report.mc_phi_risk = mc.phi
            report.mc_phi_stderr = mc.phi_stderr
            report.mc_binary_risk = mc.binary
            report.mc_binary_stderr = mc.binary_stderr
            report.bayes_risk, report.bayes_stderr = bayes_cache[si]
            est = rphi_cache[(si, gi)]
            report.r_phi_star = est.value
            report.r_phi_star_stderr = est.stderr
            report.excess_phi = mc.phi - est.value
            report.excess_binary = mc.binary - report.bayes_risk
            if report.excess_phi > 0.0:
                report.binary_excess_bound = binary_excess_bound(
                    report.excess_phi, gamma
                )
        except (ValueError, NumericFailure, FloatingPointError) as exc:
            report.error = f"{type(exc).__name__}: {exc}"
        return report

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            reports = list(pool.map(run_cell, cells))
    else:
        reports = [run_cell(cell) for cell in cells]

    if csv_path is not None:
        write_reports_csv(reports, csv_path)
    return reports


def _format_value(name, value):
    if name == "error":
        return str(value)
    if name == "family":
        return str(value)
    if name in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_reports_csv(reports, path_or_file):
    """Write rows under a schema-version comment and a timestamp comment."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        fh.write(f"# schema: {CSV_SCHEMA}\n")
        fh.write(f"# timestamp: {datetime.now(timezone.utc).isoformat()}\n")
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for rep in reports:
            fh.write(
                ",".join(_format_value(c, getattr(rep, c)) for c in REPORT_COLUMNS)
                + "\n"
            )
    finally:
        if own:
            fh.close()


def read_reports_csv(path):
    """Parse a sweep CSV back into RiskReport rows."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    if header != REPORT_COLUMNS:
        raise ValueError(f"unexpected CSV header: {header}")
    out = []
    for line in rows[1:]:
        parts = line.split(",")
        kwargs = {}
        for name, raw in zip(header, parts):
            if name in ("family", "error"):
                kwargs[name] = raw
            elif name in _INT_COLUMNS:
                kwargs[name] = int(raw)
            else:
                kwargs[name] = float(raw)
        out.append(RiskReport(**kwargs))
    return out


@dataclass
class RowVerification:
    """Outcome of the three inequality checks for one row."""

    family: str
    gamma: float
    k: int
    n: int
    repetition: int
    checks: dict
    skipped: bool = False
    reason: str = ""

    @property
    def passed(self):
        return self.skipped or all(ok for ok, _ in self.checks.values())


@dataclass
class VerificationSummary:
    """Aggregate pass/fail counts and worst margins per inequality."""

    rows: list
    n_rows: int = 0
    n_skipped: int = 0
    failures: dict = field(default_factory=dict)
    worst_margins: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "n_rows": self.n_rows,
            "n_skipped": self.n_skipped,
            "failures": dict(self.failures),
            "worst_margins": dict(self.worst_margins),
            "rows": [
                {
                    "family": r.family,
                    "gamma": r.gamma,
                    "k": r.k,
                    "n": r.n,
                    "repetition": r.repetition,
                    "skipped": r.skipped,
                    "reason": r.reason,
                    "checks": {
                        name: {"passed": ok, "margin": margin}
                        for name, (ok, margin) in r.checks.items()
                    },
                }
                for r in self.rows
            ],
        }

    @property
    def all_passed(self):
        return all(v == 0 for v in self.failures.values())


def verify_report(reports, slack=3.0):
    """Check the per-row inequalities with Monte Carlo tolerance.

    Three checks per row (margins are reported as "amount of room left";
    negative means violation):

    - psi_vs_surrogate_excess: psi applied to a lower-confidence binary
      excess (measured minus slack * stderr, floored at 0) must not exceed
      the measured surrogate excess plus slack times its combined stderr.
    - binary_excess_translation: the measured binary excess must not exceed
      the translation bound evaluated at an upper-confidence surrogate excess
      (measured plus slack times combined stderr), plus slack times the
      binary stderr.  The combined surrogate stderr adds the Monte Carlo
      errors of the model risk and of the plug-in optimal risk; the plug-in's
      optimization bias is upward, which only tightens both checks.
    - solver_suboptimality: empirical risk minus the reference empirical risk
      must not exceed gamma*B^2/(k+2)^2 (plus 1e-9 for float dust).  The
      reference is itself optimized far below the bounds being checked, so
      its residual does not mask violations at the tested scales.
    """
    out_rows = []
    failures = {
        "psi_vs_surrogate_excess": 0,
        "binary_excess_translation": 0,
        "solver_suboptimality": 0,
    }
    worst = {name: math.inf for name in failures}
    n_skipped = 0
    for rep in reports:
        if rep.error:
            n_skipped += 1
            out_rows.append(
                RowVerification(
                    family=rep.family,
                    gamma=rep.gamma,
                    k=rep.k,
                    n=rep.n,
                    repetition=rep.repetition,
                    checks={},
                    skipped=True,
                    reason=rep.error,
                )
            )
            continue
        sigma_phi = rep.mc_phi_stderr + rep.r_phi_star_stderr
        sigma_bin = rep.mc_binary_stderr + rep.bayes_stderr

        e_bin_low = max(rep.excess_binary - slack * sigma_bin, 0.0)
        psi_val = psi_smoothed_hinge_closed(min(e_bin_low, 1.0), rep.gamma)
        margin_psi = rep.excess_phi + slack * sigma_phi - psi_val

        e_phi_high = max(rep.excess_phi, 0.0) + slack * sigma_phi
        if e_phi_high > 0.0:
            translated = binary_excess_bound(e_phi_high, rep.gamma)
        else:
            translated = 0.0
        margin_tr = translated + slack * sigma_bin - rep.excess_binary

        margin_sub = (
            rep.suboptimality_bound + 1e-9 - (rep.emp_phi_risk - rep.ref_emp_phi_risk)
        )

        checks = {
            "psi_vs_surrogate_excess": (margin_psi >= 0.0, margin_psi),
            "binary_excess_translation": (margin_tr >= 0.0, margin_tr),
            "solver_suboptimality": (margin_sub >= 0.0, margin_sub),
        }
        for name, (ok, margin) in checks.items():
            if not ok:
                failures[name] += 1
            worst[name] = min(worst[name], margin)
        out_rows.append(
            RowVerification(
                family=rep.family,
                gamma=rep.gamma,
                k=rep.k,
                n=rep.n,
                repetition=rep.repetition,
                checks=checks,
            )
        )
    summary = VerificationSummary(
        rows=out_rows,
        n_rows=len(reports),
        n_skipped=n_skipped,
        failures=failures,
        worst_margins={
            k: (None if math.isinf(v) else v) for k, v in worst.items()
        },
    )
    return summary


def save_verification(summary, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2)
