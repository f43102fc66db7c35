"""Penalised-complexity priors for AR parameters and their rate calibration.

Densities are scalar functions of one parameter. Each partial-autocorrelation
prior also has a ``logpdf_at_z`` form: the same density on the ``psi`` scale,
evaluated at ``psi = tanh(z)`` using quantities computed directly from ``z``.
This matters because PC priors with small rates put visible mass where
``|psi|`` rounds to 1 in double precision (about 5% beyond the last
representable value for ``theta = 0.5``); only the ``z`` form resolves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .arcore import PSI_BOUND, NonStationaryError
from .special import erfc_scaled

__all__ = [
    "CalibrationInfeasible",
    "CalibrationError",
    "THETA_BRACKET",
    "TailStatement",
    "ShrinkageSchedule",
    "log_sech2",
    "base0_logpdf",
    "base0_logpdf_at_z",
    "base0_cdf",
    "base0_sample",
    "base1_logpdf",
    "base1_logpdf_at_z",
    "base1_cdf",
    "base1_sample",
    "sequential_logpdf",
    "gumbel2_logpdf",
    "gumbel2_rate",
    "reference_ar1_logpdf",
    "pacf_arcsine_product_logpdf",
    "theta_from_tail_base0",
    "base1_tail_probability",
    "theta_from_tail_base1",
    "expected_shrinkage",
    "theta_schedule",
    "SequentialPcPrior",
    "ApproxReferencePrior",
    "Ar1Base1Prior",
    "FlatZPrior",
    "Gumbel2PrecisionPrior",
    "FixedPrecision",
]

THETA_BRACKET = (1e-8, 50.0)

_LOG2 = math.log(2.0)
_LOGPI = math.log(math.pi)
_SQRT2 = math.sqrt(2.0)
_SMALL = 1e-8


class CalibrationInfeasible(ValueError):
    """The requested calibration target cannot be met by any rate."""


class CalibrationError(RuntimeError):
    """Root finding failed inside the admissible rate bracket."""


def _check_rate(theta: float, name: str = "theta") -> float:
    theta = float(theta)
    if not (theta > 0 and math.isfinite(theta)):
        raise ValueError(f"{name} must be positive and finite, got {theta!r}")
    return theta


def _check_unit(phi: float) -> float:
    phi = float(phi)
    if not abs(phi) <= PSI_BOUND:
        raise NonStationaryError(f"|phi| = {abs(phi)!r} is not strictly inside (-1, 1)")
    return phi


def _softplus(x: float) -> float:
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def log_sech2(z: float) -> float:
    """``log(1 - tanh(z)**2)``, i.e. ``log |d tanh(z) / dz|``, without cancellation."""
    a = abs(z)
    return 2.0 * (_LOG2 - a - math.log1p(math.exp(-2.0 * a)))


@dataclass(frozen=True)
class TailStatement:
    """A tail-probability calibration target ``P(Q > U) = alpha``."""

    U: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise CalibrationInfeasible(f"alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class ShrinkageSchedule:
    """Per-lag targets ``E(1 - psi_k^2) = 1 - (1 - a) b^(k-1)``."""

    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    def targets(self, p: int) -> list[float]:
        return [1.0 - (1.0 - self.a) * self.b ** (k - 1) for k in range(1, p + 1)]


# -- base model phi = 0 (and the sequential AR(p-1) base) --------------------------


def _base0_core(theta: float, log_abs_psi: float, log_omsq: float) -> float:
    s = math.sqrt(-log_omsq)
    return math.log(0.5 * theta) - theta * s + log_abs_psi - log_omsq - math.log(s)


def base0_logpdf(phi: float, theta: float) -> float:
    """Log density of the PC prior shrinking an AR coefficient towards 0."""
    theta = _check_rate(theta)
    phi = _check_unit(phi)
    a = abs(phi)
    if a < _SMALL:
        return math.log(0.5 * theta) - theta * a
    return _base0_core(theta, math.log(a), math.log1p(-a * a))


def base0_logpdf_at_z(z: float, theta: float) -> float:
    """`base0_logpdf` at ``phi = tanh(z)``, stable for any finite ``z``."""
    theta = _check_rate(theta)
    a = abs(float(z))
    if a < 1.0:
        # tanh(a) is far from 1 here and log1p(-phi^2) is accurate
        return base0_logpdf(math.tanh(a), theta)
    e = math.exp(-2.0 * a)
    log_abs_psi = math.log(-math.expm1(-2.0 * a)) - math.log1p(e)
    return _base0_core(theta, log_abs_psi, log_sech2(a))


def base0_cdf(phi: float, theta: float) -> float:
    """Distribution function of the base-0 prior (closed form)."""
    theta = _check_rate(theta)
    phi = float(phi)
    if phi <= -1.0:
        return 0.0
    if phi >= 1.0:
        return 1.0
    tail = 0.5 * math.exp(-theta * math.sqrt(-math.log1p(-phi * phi)))
    return tail if phi < 0 else 1.0 - tail


def base0_sample(theta: float, size=None, rng=None):
    """Draw from the base-0 prior: the distance ``sqrt(-log(1 - psi^2))`` is Exponential(theta).

    Draws whose magnitude rounds past the admissibility bound are clipped
    to it.
    """
    theta = _check_rate(theta)
    rng = np.random.default_rng(rng)
    s = rng.exponential(1.0 / theta, size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    mag = np.minimum(np.sqrt(-np.expm1(-(s * s))), PSI_BOUND)
    out = sign * mag
    return float(out) if size is None else out


# -- base model phi = 1 ------------------------------------------------------------


def _base1_core(theta: float, log_u: float) -> float:
    u = math.exp(log_u)
    return (
        math.log(theta)
        - theta * u
        - math.log(-math.expm1(-_SQRT2 * theta))
        - _LOG2
        - log_u
    )


def base1_logpdf(phi: float, theta: float, sign: int = 1) -> float:
    """Log density of the PC prior shrinking an AR(1) coefficient towards ``phi = sign``.

    ``sign = 1`` is the no-change-in-time base; ``sign = -1`` is its mirror image.
    """
    theta = _check_rate(theta)
    phi = _check_unit(phi) * sign
    return _base1_core(theta, 0.5 * math.log1p(-phi))


def base1_logpdf_at_z(z: float, theta: float, sign: int = 1) -> float:
    """`base1_logpdf` at ``phi = tanh(z)``; uses ``1 - tanh(z) = 2 / (1 + exp(2z))``."""
    theta = _check_rate(theta)
    z = float(z) * sign
    return _base1_core(theta, 0.5 * (_LOG2 - _softplus(2.0 * z)))


def base1_cdf(phi: float, theta: float, sign: int = 1) -> float:
    theta = _check_rate(theta)
    phi = float(phi)
    if sign < 0:
        return 1.0 - base1_cdf(-phi, theta)
    if phi <= -1.0:
        return 0.0
    if phi >= 1.0:
        return 1.0
    num = math.exp(-theta * math.sqrt(1.0 - phi)) - math.exp(-_SQRT2 * theta)
    return num / -math.expm1(-_SQRT2 * theta)


def base1_sample(theta: float, size=None, rng=None, sign: int = 1):
    """Inverse-CDF draw from the base-1 prior."""
    theta = _check_rate(theta)
    rng = np.random.default_rng(rng)
    v = rng.random(size)
    floor = math.exp(-_SQRT2 * theta)
    u = -np.log(floor + v * -math.expm1(-_SQRT2 * theta)) / theta
    out = np.clip(1.0 - u * u, -PSI_BOUND, PSI_BOUND) * sign
    return float(out) if size is None else out


# -- joint and baseline priors -----------------------------------------------------


def sequential_logpdf(psi: Sequence[float], thetas: Sequence[float]) -> float:
    """Joint log density of independent per-lag PC priors on ``psi_1..psi_p``."""
    if len(psi) != len(thetas):
        raise ValueError(f"got {len(psi)} partial autocorrelations but {len(thetas)} rates")
    return sum(base0_logpdf(v, t) for v, t in zip(psi, thetas))


def reference_ar1_logpdf(phi: float) -> float:
    """Arcsine density ``1 / (pi sqrt(1 - phi^2))``, the AR(1) reference prior."""
    phi = _check_unit(phi)
    return -_LOGPI - 0.5 * math.log1p(-phi * phi)


def pacf_arcsine_product_logpdf(psi: Sequence[float]) -> float:
    """Product of arcsine densities over lags; an approximation of the AR(p) reference prior."""
    return sum(reference_ar1_logpdf(v) for v in psi)


def gumbel2_logpdf(tau: float, lam: float) -> float:
    """Type-2 Gumbel log density of a precision: Exponential(lam) on ``1/sqrt(tau)``."""
    lam = _check_rate(lam, "lambda")
    tau = float(tau)
    if not tau > 0:
        raise ValueError(f"precision must be positive, got {tau!r}")
    return math.log(0.5 * lam) - 1.5 * math.log(tau) - lam / math.sqrt(tau)


def gumbel2_rate(ts: TailStatement) -> float:
    """Rate giving ``P(1/sqrt(tau) > U) = alpha``."""
    if not ts.U > 0:
        raise CalibrationInfeasible(f"U must be positive, got {ts.U!r}")
    return -math.log(ts.alpha) / ts.U


# -- calibration -------------------------------------------------------------------


def _solve_increasing(f: Callable[[float], float], what: str) -> float:
    lo, hi = THETA_BRACKET
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise CalibrationError(
            f"{what}: no root for theta in [{lo:g}, {hi:g}] "
            f"(residuals {flo:.3g}, {fhi:.3g})"
        )
    if flo == 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def theta_from_tail_base0(ts: TailStatement) -> float:
    """Rate of the base-0 prior satisfying ``P(|phi| > U) = alpha``."""
    if not 0.0 < ts.U < 1.0:
        raise CalibrationInfeasible(f"U must lie in (0, 1) for the base-0 prior, got {ts.U!r}")
    return -math.log(ts.alpha) / math.sqrt(-math.log1p(-ts.U * ts.U))


def base1_tail_probability(theta: float, U: float) -> float:
    """``P(phi > U)`` under the base-1 prior."""
    theta = _check_rate(theta)
    return math.expm1(-theta * math.sqrt(1.0 - U)) / math.expm1(-_SQRT2 * theta)


def theta_from_tail_base1(ts: TailStatement) -> float:
    """Rate of the base-1 prior satisfying ``P(phi > U) = alpha``.

    Raises
    ------
    CalibrationInfeasible
        If ``alpha`` does not exceed ``sqrt((1 - U) / 2)``, the tail mass of
        the ``theta -> 0`` limit.
    """
    U, alpha = ts.U, ts.alpha
    if not -1.0 < U < 1.0:
        raise CalibrationInfeasible(f"U must lie in (-1, 1) for the base-1 prior, got {U!r}")
    floor = math.sqrt((1.0 - U) / 2.0)
    if alpha <= floor:
        raise CalibrationInfeasible(
            f"P(phi > {U:g}) = {alpha:g} is not above the lower limit {floor:.6g}"
        )
    return _solve_increasing(lambda t: base1_tail_probability(t, U) - alpha, "base-1 tail")


def expected_shrinkage(theta: float) -> float:
    """``E(1 - psi^2)`` under the base-0 prior with rate ``theta``."""
    theta = _check_rate(theta)
    return 0.5 * theta * math.sqrt(math.pi) * erfc_scaled(0.5 * theta)


def theta_schedule(sched: ShrinkageSchedule, p: int) -> list[float]:
    """Per-lag rates matching the schedule's expected one-step shrinkage targets."""
    if p < 1:
        raise ValueError("p must be at least 1")
    thetas = []
    for k, target in enumerate(sched.targets(p), start=1):
        if not 0.0 < target < 1.0:
            raise CalibrationInfeasible(
                f"lag {k}: target E(1 - psi^2) = {target:g} must lie strictly in (0, 1)"
            )
        thetas.append(
            _solve_increasing(lambda t: expected_shrinkage(t) - target, f"lag {k} schedule")
        )
    return thetas


# -- prior objects used by the sampler ---------------------------------------------


@dataclass(frozen=True)
class SequentialPcPrior:
    """Independent PC priors on each partial autocorrelation, lag ``k`` with rate ``thetas[k]``."""

    thetas: tuple[float, ...]
    label = "pc"

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(_check_rate(t) for t in self.thetas))

    @classmethod
    def from_schedule(cls, a: float, b: float, p: int) -> "SequentialPcPrior":
        return cls(tuple(theta_schedule(ShrinkageSchedule(a, b), p)))

    @property
    def order(self) -> int:
        return len(self.thetas)

    def logpdf(self, psi) -> float:
        return sequential_logpdf(psi, self.thetas)

    def logpdf_at_z(self, z) -> float:
        return sum(base0_logpdf_at_z(v, t) for v, t in zip(z, self.thetas))

    def sample(self, size: int, rng=None) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return np.column_stack([base0_sample(t, size, rng) for t in self.thetas])


@dataclass(frozen=True)
class ApproxReferencePrior:
    """Arcsine product prior; exact reference prior for p = 1, an approximation above."""

    order: int

    @property
    def label(self) -> str:
        return "reference" if self.order == 1 else "approximate-reference"

    def logpdf(self, psi) -> float:
        return pacf_arcsine_product_logpdf(psi)

    def logpdf_at_z(self, z) -> float:
        return sum(-_LOGPI - 0.5 * log_sech2(v) for v in z)


@dataclass(frozen=True)
class Ar1Base1Prior:
    """PC prior shrinking an AR(1) coefficient towards ``sign`` (1 or -1)."""

    theta: float
    sign: int = 1
    order = 1
    label = "ar1-base1"

    def __post_init__(self):
        _check_rate(self.theta)
        if self.sign not in (1, -1):
            raise ValueError("sign must be 1 or -1")

    def logpdf(self, psi) -> float:
        (phi,) = psi
        return base1_logpdf(phi, self.theta, self.sign)

    def logpdf_at_z(self, z) -> float:
        (v,) = z
        return base1_logpdf_at_z(v, self.theta, self.sign)


@dataclass(frozen=True)
class FlatZPrior:
    """Improper prior flat in ``atanh(psi_k)``; posterior mode equals the MLE."""

    order: int
    label = "flat-z"

    def logpdf(self, psi) -> float:
        return -sum(math.log1p(-v * v) for v in psi)

    def logpdf_at_z(self, z) -> float:
        return -sum(log_sech2(v) for v in z)


@dataclass(frozen=True)
class Gumbel2PrecisionPrior:
    lam: float
    label = "gumbel2"

    def __post_init__(self):
        _check_rate(self.lam, "lambda")

    @classmethod
    def from_tail(cls, U: float, alpha: float) -> "Gumbel2PrecisionPrior":
        return cls(gumbel2_rate(TailStatement(U, alpha)))

    def logpdf(self, tau: float) -> float:
        return gumbel2_logpdf(tau, self.lam)


@dataclass(frozen=True)
class FixedPrecision:
    tau: float
    label = "fixed"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("fixed precision must be positive")
