"""Command-line front end.

    pcar calibrate --schedule 0.5,0.5,3
    pcar calibrate --base 1 --tail 0.5,0.75
    pcar prior --family base0 --theta 2 --grid 1001 --out prior.csv
    pcar simulate --pacf 0.5,-0.3 --n 200 --seed 1 --out x.csv
    pcar fit --input x.csv --order 2 --seed 1 --out fit/
    pcar study --preset ar3-benchmark --cases 1,6 --m 200 --jobs 4 --out study/
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .arcore import PSI_BOUND, ArProcess, NonStationaryError, simulate
from .config import ConfigError, load_config, mcmc_from_doc, prior_from_doc, study_from_doc
from .inference import fit_ar, posterior_summary
from .priors import (
    CalibrationError,
    CalibrationInfeasible,
    ShrinkageSchedule,
    TailStatement,
    base0_logpdf,
    base0_sample,
    base1_logpdf,
    base1_sample,
    base1_tail_probability,
    expected_shrinkage,
    gumbel2_logpdf,
    gumbel2_rate,
    reference_ar1_logpdf,
    theta_from_tail_base0,
    theta_from_tail_base1,
    theta_schedule,
)
from .study import StudyError, run_study

log = logging.getLogger("pcar")

FORMAT_VERSION = 1


class CliError(Exception):
    """User-facing failure; printed without a traceback."""


def _floats(text: str, count: int | None = None, what: str = "value") -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"could not parse {what} {text!r} as comma-separated numbers") from None
    if count is not None and len(vals) != count:
        raise CliError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def read_series(path) -> np.ndarray:
    """Read a single-column CSV series; a non-numeric first row is taken as a header."""
    values = []
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 1:
                raise CliError(f"{path}: row {row_no}: expected one column, got {len(row)}")
            try:
                v = float(row[0])
            except ValueError:
                if row_no == 1 and not values:
                    continue
                raise CliError(f"{path}: row {row_no}: {row[0]!r} is not a number") from None
            if not math.isfinite(v):
                raise CliError(f"{path}: row {row_no}: non-finite value")
            values.append(v)
    if not values:
        raise CliError(f"{path}: no data rows")
    return np.array(values)


class _Outputs:
    """Collects files written by a command so they can be removed on failure."""

    def __init__(self):
        self.paths: list[Path] = []

    def write(self, path, text: str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.paths.append(path)
        return path

    def discard(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


@contextmanager
def _outputs():
    out = _Outputs()
    try:
        yield out
    except BaseException:
        out.discard()
        raise


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _load(args) -> dict:
    return load_config(args.config) if args.config else {}


# -- commands ----------------------------------------------------------------------


def cmd_calibrate(args) -> int:
    lines = []
    if args.schedule:
        a, b, p = _floats(args.schedule, 3, "--schedule")
        if p != int(p) or p < 1:
            raise CliError("--schedule order must be a positive integer")
        sched = ShrinkageSchedule(a, b)
        thetas = theta_schedule(sched, int(p))
        lines.append(f"# schedule a={a:g} b={b:g} p={int(p)}")
        lines.append("lag\ttarget\ttheta\tresidual")
        for k, (tgt, th) in enumerate(zip(sched.targets(int(p)), thetas), start=1):
            lines.append(f"{k}\t{tgt:.6g}\t{th:.6f}\t{expected_shrinkage(th) - tgt:.3e}")
        lines.append("thetas: " + " ".join(f"{t:.2f}" for t in thetas))
    elif args.tail:
        U, alpha = _floats(args.tail, 2, "--tail")
        ts = TailStatement(U, alpha)
        if args.base == 0:
            th = theta_from_tail_base0(ts)
            resid = math.exp(-th * math.sqrt(-math.log1p(-U * U))) - alpha
            lines.append(f"# base 0: P(|phi| > {U:g}) = {alpha:g}")
        else:
            th = theta_from_tail_base1(ts)
            resid = base1_tail_probability(th, U) - alpha
            lines.append(f"# base 1: P(phi > {U:g}) = {alpha:g}")
        lines.append(f"theta: {th:.6f}")
        lines.append(f"residual: {resid:.3e}")
    elif args.precision_tail:
        U, alpha = _floats(args.precision_tail, 2, "--precision-tail")
        lam = gumbel2_rate(TailStatement(U, alpha))
        lines.append(f"# type-2 Gumbel: P(1/sqrt(tau) > {U:g}) = {alpha:g}")
        lines.append(f"lambda: {lam:.6f}")
        lines.append(f"residual: {math.exp(-lam * U) - alpha:.3e}")
    else:
        raise CliError("calibrate needs one of --schedule, --tail or --precision-tail")
    text = "\n".join(lines) + "\n"
    if args.out:
        with _outputs() as out:
            out.write(args.out, text)
    sys.stdout.write(text)
    return 0


_GRID_FAMILIES = {
    "base0": lambda v, r: base0_logpdf(v, r),
    "base1": lambda v, r: base1_logpdf(v, r),
    "base-1": lambda v, r: base1_logpdf(v, r, sign=-1),
    "reference": lambda v, r: reference_ar1_logpdf(v),
    "gumbel2": lambda v, r: gumbel2_logpdf(v, r),
}


def cmd_prior(args) -> int:
    fam = args.family
    rate = args.theta
    if fam != "reference" and rate is None:
        raise CliError(f"family {fam} needs --theta (rate)")
    if rate is not None and not rate > 0:
        raise CliError("--theta must be positive")
    if (args.grid is None) == (args.samples is None):
        raise CliError("give exactly one of --grid or --samples")
    if args.grid is not None:
        g = args.grid
        if g < 2:
            raise CliError("--grid needs at least 2 points")
        if fam == "gumbel2":
            hi = args.tau_max
            xs = np.linspace(hi / g, hi, g)
            name = "tau"
        elif args.spacing == "uniform":
            # cell midpoints of [-1, 1]; misses the mass piled up next to +-1
            xs = -1.0 + (np.arange(g) + 0.5) * (2.0 / g)
            name = "phi"
        else:
            # uniform in atanh(phi) out to the admissibility bound, so the
            # integrable endpoint singularities are resolved
            zmax = math.atanh(PSI_BOUND)
            xs = np.clip(np.tanh(np.linspace(-zmax, zmax, g)), -PSI_BOUND, PSI_BOUND)
            name = "phi"
        f = _GRID_FAMILIES[fam]
        rows = [(v, math.exp(f(v, rate))) for v in xs]
        text = f"# family={fam} rate={rate} spacing={args.spacing}\n" + _csv([name, "pdf"], rows)
    else:
        rng = np.random.default_rng(args.seed)
        if fam == "base0":
            draws = base0_sample(rate, args.samples, rng)
        elif fam in ("base1", "base-1"):
            draws = base1_sample(rate, args.samples, rng, sign=1 if fam == "base1" else -1)
        elif fam == "reference":
            draws = np.sin(np.pi * (rng.random(args.samples) - 0.5))
        else:
            draws = rng.exponential(1.0 / rate, args.samples) ** -2.0
        text = f"# family={fam} rate={rate} seed={args.seed}\n" + _csv(["value"], ((v,) for v in draws))
    with _outputs() as out:
        if args.out:
            out.write(args.out, text)
        else:
            sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    psi = _floats(args.pacf, what="--pacf") if args.pacf else []
    proc = ArProcess(tuple(psi), args.tau)
    x = simulate(proc, args.n, seed=args.seed)
    text = _csv(["x"], ((v,) for v in x))
    with _outputs() as out:
        if args.out:
            out.write(args.out, text)
        else:
            sys.stdout.write(text)
    return 0


def cmd_fit(args) -> int:
    doc = _load(args)
    x = read_series(args.input)
    p = args.order
    if x.size <= p:
        raise CliError(f"series has {x.size} observations; need more than p={p}")
    prior_doc = doc.get("prior")
    if args.prior:
        prior_doc = {"pacf": {"family": args.prior}}
        if args.prior == "pc":
            a, b = _floats(args.schedule or "0.5,0.5", 2, "--schedule")
            prior_doc["pacf"]["schedule"] = {"a": a, "b": b}
    prior = prior_from_doc(prior_doc, p)
    mc = doc.get("mcmc", {})
    if args.iterations:
        mc = {**mc, "iterations": args.iterations}
    mcmc = mcmc_from_doc(mc, seed=args.seed)
    s = fit_ar(x, p, prior, mcmc)
    summary = {
        "format": "pcar-fit-summary",
        "version": FORMAT_VERSION,
        "n": int(x.size),
        "order": p,
        "prior": {
            "pacf": prior.label,
            "pacf_params": {k: v for k, v in vars(prior.pacf).items()},
            "precision": prior.precision.label,
            "precision_params": {k: v for k, v in vars(prior.precision).items()},
        },
        "mcmc": vars(mcmc),
        "acceptance_rates": s.acceptance_rates.tolist(),
        "parameters": posterior_summary(s),
    }
    out_dir = Path(args.out) if args.out else None
    with _outputs() as out:
        if out_dir is None:
            sys.stdout.write(_json(summary))
        else:
            out.write(out_dir / "summary.json", _json(summary))
            if args.draws:
                rows = np.column_stack((s.psi_draws, s.tau_draws))
                out.write(out_dir / "draws.csv", _csv(s.names, rows))
        for name, st in summary["parameters"].items():
            log.info("%s: mean=%.4f sd=%.4f hpd=[%.4f, %.4f] ess=%.0f", name, st["mean"], st["sd"], *st["hpd"], st["ess"])
    return 0


def cmd_study(args) -> int:
    doc = _load(args)
    sdoc = dict(doc.get("study", {}))
    if args.preset:
        sdoc.pop("cases", None)
        sdoc["preset"] = args.preset
    if "cases" not in sdoc and "preset" not in sdoc and not args.config:
        sdoc["preset"] = "ar3-benchmark"
    if args.cases:
        sdoc["preset_cases"] = [c.strip() for c in args.cases.split(",")]
    if args.m:
        sdoc["m"] = args.m
    if args.prior:
        pacf = {"family": args.prior}
        if args.prior == "pc":
            a, b = _floats(args.schedule or "0.5,0.5", 2, "--schedule")
            pacf["schedule"] = {"a": a, "b": b}
        sdoc["priors"] = [{"pacf": pacf}]
    mcmc = mcmc_from_doc(doc.get("mcmc"))
    cfg = study_from_doc(sdoc, mcmc, seed=args.seed)
    report = run_study(cfg, jobs=args.jobs)
    table = report.format_table() + "\n"
    with _outputs() as out:
        if args.out:
            out_dir = Path(args.out)
            out.write(out_dir / "report.txt", table)
            out.write(out_dir / "report.json", _json(report.to_dict()))
        sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcar", description="PC priors for stationary AR(p) processes")
    parser.add_argument("--version", action="version", version=f"pcar {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="solve for prior rates")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--schedule", metavar="A,B,P", help="shrinkage schedule a, b and order p")
    g.add_argument("--tail", metavar="U,ALPHA", help="tail statement for an AR(1) prior")
    g.add_argument("--precision-tail", metavar="U,ALPHA", help="P(1/sqrt(tau) > U) = alpha")
    p.add_argument("--base", type=int, choices=(0, 1), default=0, help="base model for --tail")
    p.add_argument("--out", help="also write the result to this file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("prior", help="evaluate or sample a prior")
    p.add_argument("--family", required=True, choices=sorted(_GRID_FAMILIES))
    p.add_argument("--theta", type=float, help="rate (lambda for gumbel2)")
    p.add_argument("--grid", type=int, help="number of grid points")
    p.add_argument("--spacing", choices=("atanh", "uniform"), default="atanh", help="grid spacing in phi")
    p.add_argument("--tau-max", type=float, default=10.0, help="grid upper end for gumbel2")
    p.add_argument("--samples", type=int, help="number of draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output file (default stdout)")
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("simulate", help="simulate a stationary AR(p) series")
    p.add_argument("--pacf", default="", help="comma-separated partial autocorrelations")
    p.add_argument("--tau", type=float, default=1.0, help="marginal precision")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output file (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="sample the posterior of an AR(p) model")
    p.add_argument("--input", required=True, help="single-column CSV series")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--config", help="JSON run configuration (prior, mcmc)")
    p.add_argument("--prior", choices=("pc", "reference", "flat-z"))
    p.add_argument("--schedule", metavar="A,B", help="shrinkage schedule for --prior pc")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", action="store_true", help="also write draws.csv")
    p.add_argument("--out", help="output directory (default: summary to stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("study", help="run the RMSE / coverage replication study")
    p.add_argument("--config", help="JSON run configuration (study, mcmc)")
    p.add_argument("--preset", choices=("ar3-benchmark",))
    p.add_argument("--cases", help="comma-separated preset case labels, e.g. 1,6")
    p.add_argument("--m", type=int, help="replications per case")
    p.add_argument("--prior", choices=("pc", "reference"))
    p.add_argument("--schedule", metavar="A,B")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output directory for report.txt / report.json")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CalibrationInfeasible as exc:
        print(f"pcar: calibration infeasible: {exc}", file=sys.stderr)
        return 3
    except (CliError, ConfigError, CalibrationError, NonStationaryError, StudyError, ValueError, OSError) as exc:
        print(f"pcar: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
