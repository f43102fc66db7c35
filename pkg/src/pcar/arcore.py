"""Stationary AR(p) mathematics in the partial-autocorrelation parameterisation.

The process is ``x_t = phi_1 x_{t-1} + ... + phi_p x_{t-p} + eps_t`` with
``eps_t ~ N(0, 1/kappa)``. It is parameterised by its partial
autocorrelations ``psi`` (each strictly inside ``(-1, 1)``) and its marginal
precision ``tau``; the innovation precision is
``kappa = tau / prod(1 - psi_k**2)``.

The dense-matrix helpers (`correlation_matrix`, `kld_gaussian`) are meant
for checking; everything on a hot path uses O(n p) recursions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular, toeplitz
from scipy.signal import lfilter, lfiltic

__all__ = [
    "PSI_BOUND",
    "NonStationaryError",
    "ArProcess",
    "validate_pacf",
    "pacf_to_coef",
    "levinson_orders",
    "coef_to_pacf",
    "autocorrelations",
    "correlation_matrix",
    "innovation_variance",
    "simulate",
    "log_likelihood",
    "ArLikelihood",
    "kld_gaussian",
    "distance_ar1_base0",
    "distance_sequential",
    "distance_ar1_base1_standardised",
]

#: Largest admissible ``|psi_k|``; keeps ``log(1 - psi**2)`` and divisions finite.
PSI_BOUND = 1.0 - 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


class NonStationaryError(ValueError):
    """Raised when a parameter lies on or outside the stationarity boundary."""


def validate_pacf(psi: Sequence[float]) -> np.ndarray:
    """Return ``psi`` as a float array, rejecting values outside the open hypercube."""
    arr = np.atleast_1d(np.asarray(psi, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"partial autocorrelations must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("partial autocorrelations must be finite")
    bad = np.flatnonzero(np.abs(arr) > PSI_BOUND)
    if bad.size:
        k = int(bad[0])
        raise NonStationaryError(
            f"|psi_{k + 1}| = {abs(arr[k])!r} is not strictly inside (-1, 1)"
        )
    return arr


@dataclass(frozen=True)
class ArProcess:
    """A zero-mean stationary Gaussian AR(p) process.

    Parameters
    ----------
    pacf : sequence of float
        Partial autocorrelations ``psi_1..psi_p``. An empty sequence is white noise.
    tau : float
        Marginal precision (inverse of the stationary variance).
    """

    pacf: tuple[float, ...]
    tau: float = 1.0

    def __post_init__(self):
        psi = validate_pacf(self.pacf) if len(self.pacf) else np.zeros(0)
        object.__setattr__(self, "pacf", tuple(float(v) for v in psi))
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"marginal precision must be positive and finite, got {self.tau!r}")
        if not math.isfinite(self.innovation_precision):
            raise NonStationaryError("innovation precision is not finite")

    @property
    def order(self) -> int:
        return len(self.pacf)

    @property
    def innovation_precision(self) -> float:
        return self.tau / math.prod(1.0 - v * v for v in self.pacf)


def levinson_orders(psi: Sequence[float]) -> list[np.ndarray]:
    """AR coefficients of every intermediate order ``0..p``.

    Entry ``m`` holds the order-``m`` coefficient vector obtained after
    augmenting ``psi_1..psi_m``; entry 0 is empty.
    """
    psi = validate_pacf(psi) if len(psi) else np.zeros(0)
    out = [np.zeros(0)]
    phi = np.zeros(0)
    for m, k in enumerate(psi, start=1):
        nxt = np.empty(m)
        nxt[: m - 1] = phi - k * phi[::-1]
        nxt[m - 1] = k
        phi = nxt
        out.append(phi)
    return out


def pacf_to_coef(psi: Sequence[float]) -> np.ndarray:
    """Map partial autocorrelations to AR coefficients (forward Levinson-Durbin).

    >>> pacf_to_coef([0.5, -0.3])
    array([ 0.65, -0.3 ])
    """
    return levinson_orders(psi)[-1].copy()


def coef_to_pacf(phi: Sequence[float]) -> np.ndarray:
    """Map AR coefficients back to partial autocorrelations (step-down recursion).

    Raises
    ------
    NonStationaryError
        If the coefficients do not describe a stationary process.
    """
    a = np.atleast_1d(np.asarray(phi, dtype=float)).copy()
    if not np.all(np.isfinite(a)):
        raise ValueError("AR coefficients must be finite")
    p = a.size
    psi = np.empty(p)
    for m in range(p, 0, -1):
        k = a[m - 1]
        if abs(k) > PSI_BOUND:
            raise NonStationaryError(
                f"recovered |psi_{m}| = {abs(k)!r}; coefficients are not stationary"
            )
        psi[m - 1] = k
        a = (a[: m - 1] + k * a[m - 2 :: -1]) / (1.0 - k * k) if m > 1 else a[:0]
    return psi


def autocorrelations(psi: Sequence[float], max_lag: int) -> np.ndarray:
    """Autocorrelations ``rho_0..rho_max_lag`` of the AR process with PACF ``psi``."""
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    orders = levinson_orders(psi)
    p = len(orders) - 1
    rho = np.zeros(max_lag + 1)
    rho[0] = 1.0
    v = 1.0  # prediction-error variance ratio of order m-1
    for m in range(1, min(p, max_lag) + 1):
        prev = orders[m - 1]
        k = orders[m][-1]
        rho[m] = np.dot(prev, rho[m - 1 : 0 : -1]) + k * v if m > 1 else k
        v *= 1.0 - k * k
    if max_lag > p:
        phi = orders[-1]
        for lag in range(p + 1, max_lag + 1):
            rho[lag] = np.dot(phi, rho[lag - 1 : lag - p - 1 : -1]) if p else 0.0
    return rho


def correlation_matrix(psi: Sequence[float], n: int) -> np.ndarray:
    """Dense ``n x n`` Toeplitz correlation matrix of the first ``n`` observations."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return toeplitz(autocorrelations(psi, n - 1))


def innovation_variance(process: ArProcess) -> float:
    """One-step-ahead forecast-error variance ``tau^-1 prod(1 - psi_k^2)``."""
    return 1.0 / process.innovation_precision


def simulate(process: ArProcess, n: int, seed=None) -> np.ndarray:
    """Draw an exact stationary realisation of length ``n``.

    The first ``p`` values come from their joint stationary distribution, so
    there is no burn-in and no initialisation bias.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    p = process.order
    z = rng.standard_normal(n)
    if p == 0:
        return z / math.sqrt(process.tau)
    head = min(p, n)
    chol = np.linalg.cholesky(correlation_matrix(process.pacf, head))
    x0 = chol @ z[:head] / math.sqrt(process.tau)
    if n <= p:
        return x0
    phi = pacf_to_coef(process.pacf)
    a = np.concatenate(([1.0], -phi))
    # lfiltic expects the most recent output first
    zi = lfiltic([1.0], a, x0[::-1])
    tail, _ = lfilter([1.0], a, z[p:] * math.sqrt(innovation_variance(process)), zi=zi)
    return np.concatenate((x0, tail))


def log_likelihood(x: Sequence[float], process: ArProcess) -> float:
    """Exact Gaussian log-likelihood via the prediction-error decomposition.

    Observation ``t`` (0-based) is predicted from the previous ``min(t, p)``
    values with the order-``min(t, p)`` Levinson-Durbin coefficients; its
    prediction-error variance is ``tau^-1 prod_{k <= min(t, p)} (1 - psi_k^2)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("series must be a non-empty vector")
    n = x.size
    orders = levinson_orders(process.pacf)
    p = len(orders) - 1
    psi = np.asarray(process.pacf)
    log_r = np.concatenate(([0.0], np.cumsum(np.log1p(-psi * psi))))

    head = min(p, n)
    sq = 0.0
    logdet = 0.0
    for t in range(head):
        e = x[t] - np.dot(orders[t], x[t - 1 :: -1][:t]) if t else x[0]
        sq += e * e / math.exp(log_r[t])
        logdet += log_r[t]
    if n > p:
        phi = orders[-1]
        e = x[p:].copy()
        for j in range(1, p + 1):
            e -= phi[j - 1] * x[p - j : n - j]
        sq += float(np.dot(e, e)) / math.exp(log_r[p])
        logdet += (n - p) * log_r[p]
    tau = process.tau
    return -0.5 * (n * _LOG_2PI - n * math.log(tau) + logdet + tau * sq)


class ArLikelihood:
    """Exact AR(p) likelihood specialised to one fixed series for repeated evaluation.

    Lagged cross-products of ``x`` are accumulated once, after which each
    evaluation costs O(p^2) regardless of ``n``. Used by the sampler, where
    the same series is evaluated tens of thousands of times.

    The log-likelihood splits as
    ``-n/2 log(2 pi) + n/2 log(tau) - logdet/2 - tau * quad / 2``;
    `terms` returns ``(logdet, quad)`` so ``tau`` updates cost O(1).
    """

    def __init__(self, x: Sequence[float], order: int):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size <= order:
            raise ValueError(f"need more than {order} observations, got {x.size}")
        self.n = int(x.size)
        self.order = int(order)
        p, n = self.order, self.n
        lagged = np.stack([x[p - i : n - i] for i in range(p + 1)])
        self._cross = (lagged @ lagged.T).tolist()
        self._head = x[:p].tolist()

    def terms(self, psi: Sequence[float], one_minus_sq: Sequence[float]) -> tuple[float, float]:
        """Log-determinant and precision-free quadratic form at ``psi``.

        ``one_minus_sq[k]`` must equal ``1 - psi[k]**2``; callers working in
        ``atanh`` coordinates pass it computed stably.
        """
        p, n = self.order, self.n
        head = self._head
        phi: list[float] = []
        r = 1.0
        logdet = 0.0
        quad = 0.0
        for t in range(p):
            e = head[t]
            for j in range(t):
                e -= phi[j] * head[t - 1 - j]
            quad += e * e / r
            logdet += math.log(r)
            k = psi[t]
            phi = [phi[j] - k * phi[t - 1 - j] for j in range(t)] + [k]
            r *= one_minus_sq[t]
        c = [1.0] + [-v for v in phi]
        cross = self._cross
        s = 0.0
        for i in range(p + 1):
            row = cross[i]
            acc = 0.0
            for j in range(p + 1):
                acc += row[j] * c[j]
            s += c[i] * acc
        quad += s / r
        logdet += (n - p) * math.log(r)
        return logdet, quad

    def __call__(self, psi: Sequence[float], tau: float) -> float:
        oms = [1.0 - v * v for v in psi]
        logdet, quad = self.terms(psi, oms)
        return -0.5 * (self.n * _LOG_2PI - self.n * math.log(tau) + logdet + tau * quad)


def kld_gaussian(sigma1: np.ndarray, sigma0: np.ndarray) -> float:
    """KL divergence ``KLD(N(0, sigma1) || N(0, sigma0))`` by dense Cholesky.

    With ``A = L0^{-1} L1`` the divergence is ``sum(lam - 1 - log(lam)) / 2``
    over the eigenvalues ``lam`` of ``A A^T``, i.e. the squared singular values
    of ``A``. Each term is formed from ``lam - 1`` so nearly equal matrices do
    not suffer the cancellation of ``trace - n - logdet``.
    """
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    if sigma1.shape != sigma0.shape or sigma1.ndim != 2 or sigma1.shape[0] != sigma1.shape[1]:
        raise ValueError(f"dimension mismatch: {sigma1.shape} vs {sigma0.shape}")
    try:
        l1 = cholesky(sigma1, lower=True)
        l0 = cholesky(sigma0, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrices must be positive definite") from exc
    sv = np.linalg.svd(solve_triangular(l0, l1, lower=True), compute_uv=False)
    d = (sv - 1.0) * (sv + 1.0)
    return max(0.5 * float(np.sum(d - np.log1p(d))), 0.0)


def _check_unit(value: float, name: str) -> float:
    value = float(value)
    if not abs(value) <= PSI_BOUND:
        raise NonStationaryError(f"|{name}| = {abs(value)!r} is not strictly inside (-1, 1)")
    return value


def distance_ar1_base0(phi: float, n: int) -> float:
    """Distance from AR(1) with coefficient ``phi`` to white noise, for ``n`` observations."""
    if n < 2:
        raise ValueError("n must be at least 2")
    phi = _check_unit(phi, "phi")
    return math.sqrt(-(n - 1) * math.log1p(-phi * phi))


def distance_sequential(psi_p: float, n: int, p: int) -> float:
    """Distance from AR(p) to its AR(p-1) base; depends only on the new ``psi_p``."""
    if not 1 <= p < n:
        raise ValueError(f"need n > p >= 1, got n={n}, p={p}")
    psi_p = _check_unit(psi_p, "psi_p")
    return math.sqrt(-(n - p) * math.log1p(-psi_p * psi_p))


def distance_ar1_base1_standardised(phi: float) -> float:
    """Distance to the ``phi = 1`` limit without its diverging constant: ``sqrt(1 - phi)``."""
    phi = _check_unit(phi, "phi")
    return math.sqrt(1.0 - phi)
