"""Posterior sampling for AR(p) partial autocorrelations and marginal precision.

The sampler is a component-wise random-walk Metropolis scheme on the
unconstrained coordinates ``z_k = atanh(psi_k)`` and ``w = log(tau)``.
The target is the posterior density on the ``(psi, tau)`` scale plus the
log-Jacobians ``log(1 - psi_k^2)`` and ``w``. Proposal scales adapt during
burn-in by a Robbins-Monro recursion on the log scale and are frozen after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .arcore import PSI_BOUND, ArLikelihood
from .priors import (
    Ar1Base1Prior,
    ApproxReferencePrior,
    FixedPrecision,
    FlatZPrior,
    Gumbel2PrecisionPrior,
    SequentialPcPrior,
    log_sech2,
)

__all__ = [
    "PriorConfig",
    "McmcConfig",
    "PosteriorSamples",
    "fit_ar",
    "sample_prior",
    "hpd_interval",
    "effective_sample_size",
    "posterior_summary",
    "sample_pacf",
]

PacfPrior = Union[SequentialPcPrior, ApproxReferencePrior, Ar1Base1Prior, FlatZPrior]
PrecisionPrior = Union[Gumbel2PrecisionPrior, FixedPrecision]

#: Proposals with ``|atanh(psi)|`` beyond this are rejected; ``1 - psi^2`` would underflow.
Z_MAX = 300.0

_LOG_2PI = math.log(2.0 * math.pi)
_BLOCK = 4096


@dataclass(frozen=True)
class PriorConfig:
    pacf: PacfPrior
    precision: PrecisionPrior = field(default_factory=lambda: Gumbel2PrecisionPrior.from_tail(1.0, 0.01))

    @property
    def order(self) -> int:
        return self.pacf.order

    @property
    def label(self) -> str:
        return self.pacf.label


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 6000
    burn_in: int = 1000
    thin: int = 1
    seed: int = 0
    adapt_target: float = 0.44

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0.0 < self.adapt_target < 1.0:
            raise ValueError("adapt_target must lie in (0, 1)")


@dataclass(frozen=True)
class PosteriorSamples:
    """Retained draws from one chain.

    ``z_draws`` holds the sampler's own ``atanh`` coordinates, which stay
    exact where ``psi_draws`` has been clipped to the admissibility bound.
    """

    psi_draws: np.ndarray
    tau_draws: np.ndarray
    z_draws: np.ndarray
    log_target: np.ndarray
    acceptance_rates: np.ndarray
    step_sizes: np.ndarray
    ess: np.ndarray
    tau_fixed: bool = False

    def __post_init__(self):
        for name in ("psi_draws", "tau_draws", "z_draws", "log_target", "acceptance_rates", "step_sizes", "ess"):
            getattr(self, name).setflags(write=False)

    @property
    def order(self) -> int:
        return self.psi_draws.shape[1]

    @property
    def names(self) -> list[str]:
        return [f"psi_{k + 1}" for k in range(self.order)] + ["tau"]

    def mode(self) -> np.ndarray:
        """Retained ``psi`` draw with the highest sampler target density."""
        return self.psi_draws[int(np.argmax(self.log_target))]


def sample_pacf(x: Sequence[float], p: int) -> np.ndarray:
    """Durbin-Levinson PACF estimate from the biased sample autocovariances."""
    x = np.asarray(x, dtype=float)
    n = x.size
    acov = np.array([np.dot(x[: n - k], x[k:]) / n for k in range(p + 1)])
    psi = np.zeros(p)
    phi = np.zeros(0)
    v = acov[0]
    for m in range(1, p + 1):
        k = (acov[m] - np.dot(phi, acov[m - 1 : 0 : -1])) / v
        psi[m - 1] = k
        phi = np.concatenate((phi - k * phi[::-1], [k]))
        v *= 1.0 - k * k
    return psi


def _chain(like: ArLikelihood | None, prior: PriorConfig, mcmc: McmcConfig, z0, w0) -> PosteriorSamples:
    p = prior.order
    pacf_prior = prior.pacf
    prec = prior.precision
    fixed = isinstance(prec, FixedPrecision)
    d = p + (0 if fixed else 1)
    n = like.n if like is not None else 0

    z = [float(v) for v in z0]
    lsech = [log_sech2(v) for v in z]
    w = math.log(prec.tau) if fixed else float(w0)
    tau = math.exp(w)

    def psi_terms(zz, ls):
        if like is None:
            return 0.0, 0.0
        return like.terms([math.tanh(v) for v in zz], [math.exp(v) for v in ls])

    def prec_part(ww):
        return 0.0 if fixed else prec.logpdf(math.exp(ww)) + ww

    logdet, quad = psi_terms(z, lsech)
    lp_psi = pacf_prior.logpdf_at_z(z) + sum(lsech)
    lp_w = prec_part(w)

    def loglik(ww, tt, ld, qd):
        if like is None:
            return 0.0
        return 0.5 * n * ww - 0.5 * ld - 0.5 * tt * qd

    ll = loglik(w, tau, logdet, quad)
    if not math.isfinite(ll + lp_psi + lp_w):
        raise ValueError("initial state has non-finite target density")

    log_step = [math.log(0.5)] * d
    target = mcmc.adapt_target
    accepted = [0] * d
    kept_total = mcmc.iterations - mcmc.burn_in
    n_keep = (kept_total + mcmc.thin - 1) // mcmc.thin
    z_out = np.empty((n_keep, p))
    w_out = np.empty(n_keep)
    lt_out = np.empty(n_keep)

    rng = np.random.default_rng(mcmc.seed)
    j = 0
    for start in range(0, mcmc.iterations, _BLOCK):
        size = min(_BLOCK, mcmc.iterations - start)
        noise = rng.standard_normal((size, d)).tolist()
        logu = np.log(rng.random((size, d))).tolist()
        for i in range(size):
            it = start + i
            adapting = it < mcmc.burn_in
            eps = noise[i]
            lu = logu[i]
            for k in range(p):
                step = math.exp(log_step[k])
                zk = z[k] + step * eps[k]
                if abs(zk) > Z_MAX:
                    delta = -math.inf
                else:
                    zp = z.copy()
                    zp[k] = zk
                    lsp = lsech.copy()
                    lsp[k] = log_sech2(zk)
                    ldp, qdp = psi_terms(zp, lsp)
                    lp_new = pacf_prior.logpdf_at_z(zp) + sum(lsp)
                    ll_new = loglik(w, tau, ldp, qdp)
                    delta = (ll_new + lp_new) - (ll + lp_psi)
                if lu[k] < delta:
                    z, lsech, logdet, quad = zp, lsp, ldp, qdp
                    lp_psi, ll = lp_new, ll_new
                    if not adapting:
                        accepted[k] += 1
                if adapting:
                    acc = 1.0 if delta >= 0 else math.exp(delta)
                    log_step[k] += (acc - target) / (it + 1) ** 0.6
            if not fixed:
                step = math.exp(log_step[p])
                wp = w + step * eps[p]
                tp = math.exp(wp)
                lw_new = prec_part(wp) if math.isfinite(tp) and tp > 0 else -math.inf
                ll_new = loglik(wp, tp, logdet, quad)
                delta = (ll_new + lw_new) - (ll + lp_w)
                if lu[p] < delta:
                    w, tau, ll, lp_w = wp, tp, ll_new, lw_new
                    if not adapting:
                        accepted[p] += 1
                if adapting:
                    acc = 1.0 if delta >= 0 else math.exp(delta)
                    log_step[p] += (acc - target) / (it + 1) ** 0.6
            if not adapting and (it - mcmc.burn_in) % mcmc.thin == 0:
                z_out[j] = z
                w_out[j] = w
                lt_out[j] = ll + lp_psi + lp_w
                j += 1

    psi_out = np.clip(np.tanh(z_out), -PSI_BOUND, PSI_BOUND)
    tau_out = np.exp(w_out)
    rates = np.array(accepted, dtype=float) / kept_total
    ess = np.array(
        [effective_sample_size(psi_out[:, k]) for k in range(p)] + [effective_sample_size(tau_out)]
    )
    return PosteriorSamples(
        psi_draws=psi_out,
        tau_draws=tau_out,
        z_draws=z_out,
        log_target=lt_out,
        acceptance_rates=rates,
        step_sizes=np.exp(np.array(log_step)),
        ess=ess,
        tau_fixed=fixed,
    )


def fit_ar(x: Sequence[float], p: int, prior: PriorConfig, mcmc: McmcConfig) -> PosteriorSamples:
    """Sample the posterior of an AR(p) model for the zero-mean series ``x``.

    Raises
    ------
    ValueError
        If ``n <= p``, the series is constant, or the prior's order is not ``p``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if p < 1:
        raise ValueError("p must be at least 1")
    if x.size <= p:
        raise ValueError(f"need more than p={p} observations, got {x.size}")
    if np.ptp(x) == 0:
        raise ValueError("series has zero variance")
    if prior.order != p:
        raise ValueError(f"prior is for order {prior.order}, model order is {p}")
    psi0 = np.clip(sample_pacf(x, p), -0.95, 0.95)
    w0 = -math.log(float(np.mean(x * x)))
    return _chain(ArLikelihood(x, p), prior, mcmc, np.arctanh(psi0), w0)


def sample_prior(prior: PriorConfig, mcmc: McmcConfig) -> PosteriorSamples:
    """Run the `fit_ar` sampler with the likelihood switched off."""
    return _chain(None, prior, mcmc, np.zeros(prior.order), 0.0)


def hpd_interval(draws: Sequence[float], prob: float = 0.95) -> tuple[float, float]:
    """Shortest interval containing ``ceil(prob * m)`` of the ``m`` sorted draws."""
    x = np.sort(np.asarray(draws, dtype=float))
    m = x.size
    if m < 100:
        raise ValueError(f"need at least 100 draws for an HPD interval, got {m}")
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie in (0, 1)")
    k = math.ceil(prob * m)
    widths = x[k - 1 :] - x[: m - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def effective_sample_size(draws: Sequence[float]) -> float:
    """ESS by Geyer's initial positive sequence, capped at the number of draws."""
    x = np.asarray(draws, dtype=float)
    m = x.size
    if m < 4:
        return float(m)
    x = x - x.mean()
    var = np.dot(x, x) / m
    if var <= 0 or not np.isfinite(var):
        return float(m)
    size = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(x, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:m] / (m * var)
    tau = -1.0
    for t in range(0, m - 1, 2):
        pair = acf[t] + acf[t + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(min(m, m / tau))


def posterior_summary(s: PosteriorSamples, hpd_prob: float = 0.95) -> dict[str, dict]:
    """Mean, median, sd, ESS and HPD interval of every parameter."""
    cols = [s.psi_draws[:, k] for k in range(s.order)] + [s.tau_draws]
    out = {}
    for name, col, ess in zip(s.names, cols, s.ess):
        lo, hi = hpd_interval(col, hpd_prob) if col.size >= 100 else (math.nan, math.nan)
        out[name] = {
            "mean": float(np.mean(col)),
            "median": float(np.median(col)),
            "sd": float(np.std(col, ddof=1)) if col.size > 1 else 0.0,
            "ess": float(ess),
            "hpd": [lo, hi],
        }
    return out
