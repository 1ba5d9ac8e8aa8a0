"""Closed-form functions of the Modi linear failure rate (MLFR) distribution.

The MLFR law is the Modi transform ``F = (1 + theta) G / (theta + G)`` of the
linear failure rate baseline ``G(x) = 1 - exp(-a x - b x**2 / 2)`` with
``theta = alpha**beta``. Every function below depends on ``(alpha, beta)``
only through ``theta``; the pair is collapsed as soon as it is validated.

All functions broadcast over ``x`` (or ``u``) and return numpy values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_unit_interval
from .exceptions import InvalidParameterError

RNG_ALGORITHM = "numpy.random.Philox-4x64-10"


@dataclass(frozen=True)
class MlfrParams:
    """Parameter vector ``(alpha, beta, a, b)`` of the MLFR distribution.

    ``alpha`` and ``beta`` are the Modi shape parameters, ``a >= 0`` and
    ``b >= 0`` the intercept and slope of the baseline hazard ``a + b x``
    (with ``a + b > 0``).
    """

    alpha: float
    beta: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("alpha", "beta", "a", "b"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.alpha <= 0 or self.beta <= 0:
            raise InvalidParameterError("alpha and beta must be > 0")
        if self.a < 0 or self.b < 0:
            raise InvalidParameterError("a and b must be >= 0")
        if self.a + self.b <= 0:
            raise InvalidParameterError("need a + b > 0")
        try:
            theta = self.theta
        except OverflowError:
            theta = math.inf
        if not (math.isfinite(theta) and theta > 0):
            raise InvalidParameterError(f"alpha**beta = {theta!r} is not a finite positive number")

    @property
    def theta(self) -> float:
        """Effective Modi parameter ``alpha**beta``."""
        return self.alpha**self.beta

    @classmethod
    def from_theta(cls, theta: float, a: float, b: float, beta: float = 1.0) -> "MlfrParams":
        """Build a parameter vector with ``alpha = theta**(1/beta)``."""
        if not theta > 0:
            raise InvalidParameterError("theta must be > 0")
        alpha = theta if beta == 1.0 else theta ** (1.0 / beta)
        return cls(alpha, beta, a, b)

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.a, self.b)


def _cumhaz(p: MlfrParams, x):
    return p.a * x + 0.5 * p.b * x * x


def cdf(p: MlfrParams, x):
    """Distribution function; 0 for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    th = p.theta
    t = _cumhaz(p, np.maximum(x, 0.0))
    g = -np.expm1(-t)
    lower = (1.0 + th) * g / (th + g)
    # near 1 the ratio jitters by an ulp; 1 - S is monotone there
    upper = 1.0 - th * np.exp(-t) / (th + g)
    return np.where(x > 0, np.where(lower < 0.5, lower, upper), 0.0)


def survival(p: MlfrParams, x):
    """Survival function ``theta / ((theta + 1) e^T - 1)``; 1 for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    th = p.theta
    t = _cumhaz(p, np.maximum(x, 0.0))
    # theta e^{-T} / (theta + 1 - e^{-T}) keeps the tail free of overflow
    e = np.exp(-t)
    g = -np.expm1(-t)
    return np.where(x > 0, th * e / (th + g), 1.0)


def pdf(p: MlfrParams, x):
    """Density ``theta (1 + theta) (a + b x) e^{-T} / (theta + 1 - e^{-T})**2``."""
    x = np.asarray(x, dtype=float)
    th = p.theta
    xs = np.maximum(x, 0.0)
    t = _cumhaz(p, xs)
    g = -np.expm1(-t)
    val = th * (1.0 + th) * (p.a + p.b * xs) * np.exp(-t) / (th + g) ** 2
    return np.where(x >= 0, val, 0.0)


def log_pdf(p: MlfrParams, x):
    """Log-density, evaluated without forming the density.

    Returns ``-inf`` where the density vanishes (``x < 0``, or ``x = 0``
    when ``a = 0``).
    """
    x = np.asarray(x, dtype=float)
    val = log_pdf_theta(p.theta, p.a, p.b, np.maximum(x, 0.0))
    return np.where(x >= 0, val, -np.inf)


def log_pdf_theta(theta: float, a: float, b: float, x: np.ndarray):
    """Unvalidated log-density on ``x >= 0`` in ``(theta, a, b)`` coordinates."""
    t = a * x + 0.5 * b * x * x
    with np.errstate(divide="ignore"):
        return math.log(theta) + math.log1p(theta) + np.log(a + b * x) - t - 2.0 * np.log(theta - np.expm1(-t))


def hazard(p: MlfrParams, x):
    """Hazard rate ``(theta + 1)(a + b x) / (theta + 1 - e^{-T})``."""
    x = np.asarray(x, dtype=float)
    th = p.theta
    xs = np.maximum(x, 0.0)
    g = -np.expm1(-_cumhaz(p, xs))
    val = (th + 1.0) * (p.a + p.b * xs) / (th + g)
    return np.where(x >= 0, val, 0.0)


def cumulative_baseline_hazard_inverse(p: MlfrParams, level):
    """Solve ``a x + b x**2 / 2 = level`` for ``x >= 0``.

    Uses the rationalized root ``2 L / (a + sqrt(a**2 + 2 b L))`` which
    reduces to ``L / a`` at ``b = 0`` and avoids cancellation when ``a**2``
    dominates ``2 b L``.
    """
    level = np.asarray(level, dtype=float)
    return 2.0 * level / (p.a + np.sqrt(p.a * p.a + 2.0 * p.b * level))


def quantile(p: MlfrParams, u):
    """Inverse distribution function on ``[0, 1)``."""
    u = check_unit_interval(u)
    th = p.theta
    # log((theta + 1 - u) / ((1 + theta)(1 - u))) == log1p(theta u / ((1 + theta)(1 - u)))
    level = np.log1p(th * u / ((1.0 + th) * (1.0 - u)))
    with np.errstate(invalid="ignore"):
        q = cumulative_baseline_hazard_inverse(p, level)
    # level underflows to 0 for u below ~1e-308; Q(0) = 0 there
    return np.where(level > 0, q, 0.0)


def median(p: MlfrParams) -> float:
    return float(quantile(p, 0.5))


def make_generator(seed=None) -> np.random.Generator:
    """Counter-based Philox generator from an int, ``SeedSequence`` or generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed) % 2**64)
    return np.random.Generator(np.random.Philox(seed))


def sample(p: MlfrParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` variates by inverse transform of Philox uniforms."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    u = make_generator(seed).random(int(n))
    return quantile(p, u)
