"""Frequentist replication harness: RMSE and HPD coverage of posterior PACF estimates."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .arcore import ArProcess, simulate, validate_pacf
from .inference import McmcConfig, PriorConfig, fit_ar, hpd_interval

__all__ = [
    "StudyCase",
    "StudyConfig",
    "StudyReport",
    "StudyError",
    "AR3_BENCHMARK_CASES",
    "replication_seeds",
    "run_replication",
    "run_study",
    "rmse",
    "coverage",
]

AR3_BENCHMARK_CASES = (
    ("1", (0.0, 0.0, 0.0)),
    ("2", (0.7, 0.0, 0.0)),
    ("3", (0.2, 0.3, 0.0)),
    ("4", (-0.2, -0.6, 0.0)),
    ("5", (0.5, -0.3, 0.0)),
    ("6", (0.5, -0.3, -0.1)),
)


class StudyError(RuntimeError):
    """A replication failed; the study is aborted rather than silently thinned."""


@dataclass(frozen=True)
class StudyCase:
    label: str
    true_pacf: tuple[float, ...]
    true_tau: float = 1.0
    n: int = 50

    def __post_init__(self):
        object.__setattr__(self, "true_pacf", tuple(float(v) for v in validate_pacf(self.true_pacf)))
        if self.n <= len(self.true_pacf):
            raise ValueError(f"case {self.label}: n must exceed the true order")


@dataclass(frozen=True)
class StudyConfig:
    cases: tuple[StudyCase, ...]
    priors: tuple[PriorConfig, ...]
    fit_order: int = 3
    m: int = 1000
    estimator: str = "mean"
    hpd_prob: float = 0.95
    master_seed: int = 2016
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not 0.0 < self.hpd_prob < 1.0:
            raise ValueError("hpd_prob must lie in (0, 1)")
        if self.estimator not in ("mean", "median"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        for pr in self.priors:
            if pr.order != self.fit_order:
                raise ValueError(f"prior {pr.label} has order {pr.order}, fit order is {self.fit_order}")
        for case in self.cases:
            if case.n <= self.fit_order:
                raise ValueError(f"case {case.label}: n must exceed the fit order")


def replication_seeds(master_seed: int, case_index: int, rep: int, n_priors: int) -> tuple[int, list[int]]:
    """Simulation seed and one MCMC seed per prior for replication ``rep`` of a case.

    Derived only from the indices, so results do not depend on scheduling.
    """
    words = np.random.SeedSequence([master_seed, case_index, rep]).generate_state(1 + n_priors, np.uint64)
    return int(words[0]), [int(v) for v in words[1:]]


def run_replication(cfg: StudyConfig, case_index: int, rep: int) -> tuple[np.ndarray, np.ndarray]:
    """Point estimates and HPD hits, each of shape ``(n_priors, fit_order)``."""
    case = cfg.cases[case_index]
    sim_seed, mcmc_seeds = replication_seeds(cfg.master_seed, case_index, rep, len(cfg.priors))
    x = simulate(ArProcess(case.true_pacf, case.true_tau), case.n, seed=sim_seed)
    p = cfg.fit_order
    truth = np.zeros(p)
    q = min(p, len(case.true_pacf))
    truth[:q] = case.true_pacf[:q]
    est = np.empty((len(cfg.priors), p))
    hit = np.empty((len(cfg.priors), p), dtype=bool)
    for i, (prior, seed) in enumerate(zip(cfg.priors, mcmc_seeds)):
        s = fit_ar(x, p, prior, replace(cfg.mcmc, seed=seed))
        draws = s.psi_draws
        est[i] = draws.mean(axis=0) if cfg.estimator == "mean" else np.median(draws, axis=0)
        for k in range(p):
            lo, hi = hpd_interval(draws[:, k], cfg.hpd_prob)
            hit[i, k] = lo <= truth[k] <= hi
    return est, hit


def _task(args):
    cfg, case_index, rep = args
    try:
        return run_replication(cfg, case_index, rep)
    except Exception as exc:  # re-raised with the replication index by the caller
        return exc


def rmse(estimates: Sequence[float], truth: float) -> float:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("rmse of an empty sample")
    return float(math.sqrt(np.mean((est - truth) ** 2)))


def coverage(intervals: Sequence[tuple[float, float]], truth: float) -> float:
    """Fraction of closed intervals ``[lo, hi]`` that contain ``truth``."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if iv.shape[0] == 0:
        raise ValueError("coverage of an empty list of intervals")
    if np.any(iv[:, 0] > iv[:, 1]):
        raise ValueError("interval with lo > hi")
    return float(np.mean((iv[:, 0] <= truth) & (truth <= iv[:, 1])))


@dataclass
class StudyReport:
    """Aggregated results; ``rows`` has one entry per (case, prior, lag)."""

    rows: list[dict]
    metadata: dict

    def value(self, case: str, prior: str, lag: int, key: str) -> float:
        for r in self.rows:
            if r["case"] == case and r["prior"] == prior and r["lag"] == lag:
                return r[key]
        raise KeyError((case, prior, lag))

    def to_dict(self) -> dict:
        return {"format": "pcar-study-report", "version": 1, "metadata": self.metadata, "rows": self.rows}

    def format_table(self) -> str:
        p = self.metadata["fit_order"]
        cases = self.metadata["cases"]
        labels = [c["label"] for c in cases]
        head = (
            f"{'Test case':<30}"
            + "".join(f"{'rmse_' + str(k):>9}" for k in range(1, p + 1))
            + " |"
            + "".join(f"{'cov_' + str(k):>9}" for k in range(1, p + 1))
        )
        lines = [head, "-" * len(head)]
        for prior in self.metadata["prior_labels"]:
            lines.append(prior)
            for label, case in zip(labels, cases):
                psi = ",".join(f"{v:g}" for v in case["true_pacf"])
                name = f"  {label}. psi=({psi})"
                r = [self.value(label, prior, k, "rmse") for k in range(1, p + 1)]
                c = [self.value(label, prior, k, "coverage") for k in range(1, p + 1)]
                lines.append(
                    f"{name:<30}" + "".join(f"{v:9.3f}" for v in r) + " |" + "".join(f"{v:9.3f}" for v in c)
                )
        lines.append(
            f"m={self.metadata['m']}  estimator={self.metadata['estimator']}  "
            f"hpd_prob={self.metadata['hpd_prob']}  master_seed={self.metadata['master_seed']}"
        )
        return "\n".join(lines)


def _prior_echo(pr: PriorConfig) -> dict:
    return {
        "label": pr.label,
        "pacf": {"family": pr.pacf.label, **{k: v for k, v in asdict(pr.pacf).items()}},
        "precision": {"family": pr.precision.label, **asdict(pr.precision)},
    }


def run_study(cfg: StudyConfig, jobs: int = 1) -> StudyReport:
    """Simulate, fit and aggregate every (case, replication) pair.

    ``jobs > 1`` fans replications out to worker processes; results are merged
    in (case, replication) order so the report does not depend on ``jobs``.
    """
    t0 = time.perf_counter()
    tasks = [(cfg, c, j) for c in range(len(cfg.cases)) for j in range(cfg.m)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_task(t) for t in tasks]
    for (_, c, j), res in zip(tasks, results):
        if isinstance(res, Exception):
            raise StudyError(f"case {cfg.cases[c].label}, replication {j} failed: {res}") from res

    p = cfg.fit_order
    labels = [pr.label for pr in cfg.priors]
    if len(set(labels)) != len(labels):
        labels = [f"{lab}#{i}" for i, lab in enumerate(labels)]
    rows = []
    for c, case in enumerate(cfg.cases):
        block = results[c * cfg.m : (c + 1) * cfg.m]
        est = np.stack([b[0] for b in block])  # (m, priors, p)
        hit = np.stack([b[1] for b in block])
        truth = np.zeros(p)
        q = min(p, len(case.true_pacf))
        truth[:q] = case.true_pacf[:q]
        for i, label in enumerate(labels):
            for k in range(p):
                sq = (est[:, i, k] - truth[k]) ** 2
                r = math.sqrt(float(np.mean(sq)))
                cov = float(np.mean(hit[:, i, k]))
                r_se = float(np.std(sq, ddof=1) / (2 * r * math.sqrt(cfg.m))) if cfg.m > 1 and r > 0 else math.nan
                rows.append(
                    {
                        "case": case.label,
                        "prior": label,
                        "lag": k + 1,
                        "truth": float(truth[k]),
                        "rmse": r,
                        "rmse_se": r_se,
                        "coverage": cov,
                        "coverage_se": math.sqrt(cov * (1 - cov) / cfg.m),
                    }
                )
    metadata = {
        "fit_order": p,
        "m": cfg.m,
        "estimator": cfg.estimator,
        "hpd_prob": cfg.hpd_prob,
        "master_seed": cfg.master_seed,
        "seed_derivation": "SeedSequence([master_seed, case_index, replication])",
        "mcmc": {k: v for k, v in asdict(cfg.mcmc).items() if k != "seed"},
        "cases": [asdict(c) for c in cfg.cases],
        "priors": [_prior_echo(pr) for pr in cfg.priors],
        "prior_labels": labels,
        "jobs": jobs,
        "wall_time_s": time.perf_counter() - t0,
    }
    return StudyReport(rows=rows, metadata=metadata)
