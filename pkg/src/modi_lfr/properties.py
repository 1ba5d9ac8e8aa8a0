"""Moments, reliability measures and order statistics of the MLFR law.

Integrals are evaluated by adaptive quadrature on ``[lo, c]`` where ``c`` is
a survival point (``S(c) = 1e-12`` or smaller) chosen so that an analytic
bound on the neglected tail stays below ``TAIL_FRACTION`` of the tolerance. The
reported error is the integrator's estimate plus that bound. Both rely on
the hazard exceeding the baseline hazard, ``h(x) >= a + b x``, so that

    S(x) <= S(c) exp(-(a + b c)(x - c))     for x >= c.

Tolerances are absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betainc, gammaln

from . import core
from .core import MlfrParams
from .exceptions import DivergenceError, DomainError, QuadratureError, UnderflowError

DEFAULT_TOL = 1e-9
TRUNCATION_SURVIVAL = 1e-12
QUAD_LIMIT = 500
MIN_SURVIVAL = 1e-300
TAIL_FRACTION = 1e-4


@dataclass(frozen=True)
class MomentReport:
    order: int
    value: float
    abs_error_estimate: float


@dataclass(frozen=True)
class CurvePoint:
    p: float
    value: float


# -- scalar helpers -----------------------------------------------------------

def _log_sf(p: MlfrParams, x: float) -> float:
    t = p.a * x + 0.5 * p.b * x * x
    th = p.theta
    return math.log(th) - t - math.log(th - math.expm1(-t))


def _log_pdf(p: MlfrParams, x: float) -> float:
    return float(core.log_pdf_theta(p.theta, p.a, p.b, np.float64(x)))


def survival_point(p: MlfrParams, log_s: float) -> float:
    """The ``x`` with ``log S(x) = log_s``; usable far below ``S = 1e-16``."""
    th = p.theta
    level = math.log(th + math.exp(log_s)) - log_s - math.log1p(th)
    return float(core.cumulative_baseline_hazard_inverse(p, level))


def _check_tol(tol):
    if not (tol > 0 and math.isfinite(tol)):
        raise DomainError("tol must be a positive finite number")


def _breakpoints(p: MlfrParams, lo: float, hi: float):
    qs = core.quantile(p, np.array([0.1, 0.5, 0.9, 0.99, 0.9999, 1 - 1e-6, 1 - 1e-9]))
    pts = [float(q) for q in qs if lo < q < hi]
    return pts or None


def _quad(func, lo, hi, tol, points=None, what="integral"):
    """Adaptive quadrature on a finite interval; raise unless ``err <= tol``."""
    if hi <= lo:
        return 0.0, 0.0
    out = integrate.quad(func, lo, hi, epsabs=tol, epsrel=0.0, limit=QUAD_LIMIT,
                         points=points, full_output=1)
    val, err = out[0], out[1]
    ier_msg = out[3] if len(out) > 3 else None
    if ier_msg is not None or not math.isfinite(val) or err > tol:
        raise QuadratureError(
            f"{what}: quadrature did not reach tolerance {tol:g} (error estimate {err:.3g})",
            estimate=val,
            abserr=err,
        )
    return val, err


def _truncate(p: MlfrParams, tail_bound, tol, log_floor=0.0):
    """First survival point ``c`` (levels ``1e-12, 1e-24, ...`` times
    ``exp(log_floor)``) whose tail bound is at most ``TAIL_FRACTION * tol``."""
    step = math.log(TRUNCATION_SURVIVAL)
    for i in range(1, 60):
        c = survival_point(p, log_floor + i * step)
        bound = tail_bound(c)
        if bound <= TAIL_FRACTION * tol:
            return c, bound
    raise QuadratureError(
        f"tail bound {bound:.3g} still exceeds tolerance at x = {c:.6g}", abserr=bound
    )


def _moment_tail(p: MlfrParams, r: int, c: float, log_scale: float = 0.0) -> float:
    """Upper bound on ``exp(-log_scale) * int_c^inf x^r f(x) dx``.

    Integration by parts gives ``c^r S(c) + r int_c^inf x^(r-1) S(x) dx`` and
    the exponential envelope of ``S`` turns the last integral into a finite
    sum of gamma integrals.
    """
    lam = p.a + p.b * c
    log_s = _log_sf(p, c) - log_scale
    total = c**r
    for j in range(r):
        # C(r-1, j) c^(r-1-j) j! / lam^(j+1)
        total += r * math.exp(gammaln(r) - gammaln(r - j) + (r - 1 - j) * _safe_log(c) - (j + 1) * math.log(lam))
    return math.exp(log_s) * total


def _safe_log(v):
    return math.log(v) if v > 0 else -math.inf


def _integrate_moment(p, r, lo, tol, shift=0.0, log_scale=0.0, what="moment"):
    """``exp(-log_scale) * int_lo^inf (x - shift)^r f(x) dx`` with its error bound."""
    c, bound = _truncate(p, lambda c: _moment_tail(p, r, c, log_scale), tol,
                         log_floor=min(0.0, log_scale))
    lo = max(lo, 0.0)

    def func(x):
        return (x - shift) ** r * math.exp(_log_pdf(p, x) - log_scale)

    val, err = _quad(func, lo, c, tol / 2, points=_breakpoints(p, lo, c), what=what)
    return val, err + bound


# -- public operations --------------------------------------------------------

def raw_moment(p: MlfrParams, r: int, tol: float = DEFAULT_TOL) -> MomentReport:
    """``E[X^r]`` by quadrature."""
    if int(r) != r or r < 1:
        raise DomainError("r must be a positive integer")
    _check_tol(tol)
    r = int(r)
    val, err = _integrate_moment(p, r, 0.0, tol, what=f"raw moment r={r}")
    if err > tol:
        raise QuadratureError(f"raw moment r={r}: error {err:.3g} exceeds {tol:g}", val, err)
    return MomentReport(order=r, value=val, abs_error_estimate=err)


def mean(p: MlfrParams, tol: float = DEFAULT_TOL) -> float:
    return raw_moment(p, 1, tol).value


def mgf(p: MlfrParams, t: float, tol: float = DEFAULT_TOL) -> float:
    """``E[exp(t X)]``.

    Finite for every ``t`` when ``b > 0``; with ``b = 0`` the tail is
    exponential with rate ``a`` and the transform exists only for ``t < a``.
    """
    _check_tol(tol)
    t = float(t)
    if p.b == 0 and t >= p.a:
        raise DivergenceError(f"MGF diverges for t = {t:g} >= a = {p.a:g} when b = 0")

    def tail(c):
        lam = p.a + p.b * c
        if t > 0 and lam <= t:
            return math.inf
        factor = lam / (lam - t) if t > 0 else 1.0
        return math.exp(t * c + _log_sf(p, c)) * factor

    c, bound = _truncate(p, tail, tol)

    def func(x):
        return math.exp(t * x + _log_pdf(p, x))

    val, err = _quad(func, 0.0, c, tol / 2, points=_breakpoints(p, 0.0, c), what="mgf")
    if err + bound > tol:
        raise QuadratureError("mgf: tolerance not met", val, err + bound)
    return val


def _log_sf_checked(p, t):
    if t < 0:
        raise DomainError("t must be non-negative")
    log_s = _log_sf(p, t) if t > 0 else 0.0
    if log_s < math.log(MIN_SURVIVAL):
        raise UnderflowError(f"S({t:g}) = exp({log_s:.4g}) is below {MIN_SURVIVAL:g}")
    return log_s


def conditional_moment(p: MlfrParams, r: int, t: float, tol: float = DEFAULT_TOL) -> float:
    """``E[X^r | X > t]``.

    The density is divided by ``S(t)`` inside the integrand (in log space),
    so the tolerance applies to the conditional value itself.
    """
    if int(r) != r or r < 1:
        raise DomainError("r must be a positive integer")
    _check_tol(tol)
    log_s = _log_sf_checked(p, float(t))
    val, err = _integrate_moment(p, int(r), float(t), tol, log_scale=log_s,
                                 what="conditional moment")
    if err > tol:
        raise QuadratureError("conditional moment: tolerance not met", val, err)
    return val


def mean_residual_life(p: MlfrParams, t: float, tol: float = DEFAULT_TOL) -> float:
    """``E[X - t | X > t]``, integrated with weight ``x - t`` to avoid cancellation."""
    _check_tol(tol)
    t = float(t)
    log_s = _log_sf_checked(p, t)
    val, err = _integrate_moment(p, 1, t, tol, shift=t, log_scale=log_s,
                                 what="mean residual life")
    if err > tol:
        raise QuadratureError("mean residual life: tolerance not met", val, err)
    return val


def _upper_first_moment(p, lo, tol):
    return _integrate_moment(p, 1, lo, tol, what="partial moment")


def mean_deviations(p: MlfrParams, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Mean absolute deviations about the mean and about the median."""
    _check_tol(tol)
    part = tol / 6
    mu_rep = raw_moment(p, 1, part)
    mu = mu_rep.value
    med = core.median(p)
    i_mu, e1 = _upper_first_moment(p, mu, part)
    i_med, e2 = _upper_first_moment(p, med, part)
    f_mu = float(core.cdf(p, mu))
    d1 = 2 * mu * f_mu - 2 * mu + 2 * i_mu
    d2 = -mu + 2 * i_med
    err1 = 2 * (1 + f_mu) * mu_rep.abs_error_estimate + 2 * e1
    err2 = mu_rep.abs_error_estimate + 2 * e2
    if max(err1, err2) > tol:
        raise QuadratureError("mean deviations: tolerance not met", (d1, d2), max(err1, err2))
    return d1, d2


def bonferroni_lorenz(p: MlfrParams, prob: float, tol: float = DEFAULT_TOL) -> tuple[CurvePoint, CurvePoint]:
    """Bonferroni ``B(prob)`` and Lorenz ``L(prob)`` ordinates.

    ``L = 1 - (1/mu) int_q^inf x f dx`` with ``q`` the ``prob``-quantile and
    ``B = L / prob``. Rounding below zero at tiny ``prob`` is clipped.
    """
    prob = float(prob)
    if not 0 < prob < 1:
        raise DomainError("prob must lie in (0, 1)")
    _check_tol(tol)
    mu_rep = raw_moment(p, 1, tol / 4)
    mu = mu_rep.value
    q = float(core.quantile(p, prob))
    upper, err = _upper_first_moment(p, q, tol * mu / 4)
    lorenz = max(0.0, 1.0 - upper / mu)
    return CurvePoint(prob, lorenz / prob), CurvePoint(prob, lorenz)


def renyi_entropy(p: MlfrParams, s: float, tol: float = DEFAULT_TOL) -> float:
    """``log(int f^s) / (1 - s)`` for ``s > 0, s != 1``.

    When ``a = 0`` the density behaves like ``x`` near the origin, so
    ``f^s`` is integrable there for every ``s > 0``.
    """
    s = float(s)
    if not s > 0 or s == 1.0:
        raise DomainError("Renyi order s must be positive and different from 1")
    _check_tol(tol)
    th = p.theta
    log_k = math.log1p(th) - math.log(th)

    def tail(c):
        # f <= ((1+theta)/theta)(a+bx) S(x); (a+bx)^s <= lam^s exp(s b (x-c)/lam)
        lam = p.a + p.b * c
        rate = s * (lam - p.b / lam)
        if rate <= 0:
            return math.inf
        return math.exp(s * (log_k + math.log(lam) + _log_sf(p, c))) / rate

    c, bound = _truncate(p, tail, tol)

    def func(x):
        return math.exp(s * _log_pdf(p, x))

    val, err = _quad(func, 0.0, c, tol / 2, points=_breakpoints(p, 0.0, c), what="Renyi integral")
    if not val > 0 or not math.isfinite(val):
        raise DivergenceError(f"int f^s evaluated to {val!r}")
    if err + bound > tol:
        raise QuadratureError("Renyi entropy: tolerance not met", val, err + bound)
    return math.log(val) / (1.0 - s)


def stress_strength(p1: MlfrParams, p2: MlfrParams, tol: float = DEFAULT_TOL) -> float:
    """``P(X2 < X1)`` for independent strength ``X1 ~ p1`` and stress ``X2 ~ p2``."""
    _check_tol(tol)
    c, bound = _truncate(p1, lambda c: math.exp(_log_sf(p1, c)), tol)
    pts = sorted(set((_breakpoints(p1, 0.0, c) or []) + (_breakpoints(p2, 0.0, c) or [])))

    def func(x):
        return math.exp(_log_pdf(p1, x)) * float(core.cdf(p2, x))

    val, err = _quad(func, 0.0, c, tol / 2, points=pts or None, what="stress-strength")
    if err + bound > tol:
        raise QuadratureError("stress-strength: tolerance not met", val, err + bound)
    return min(1.0, max(0.0, val))


# -- order statistics ----------------------------------------------------------

def _check_rank(n, k):
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if int(k) != k or not 1 <= k <= n:
        raise DomainError("k must be an integer in [1, n]")
    return int(n), int(k)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def order_stat_pdf(p: MlfrParams, n: int, k: int, x, method: str = "closed"):
    """Density of the ``k``-th smallest of ``n`` iid MLFR draws.

    ``method="closed"`` evaluates ``c f F^(k-1) S^(n-k)`` in log space with
    the log-gamma normalizing constant; ``method="series"`` sums the
    alternating binomial expansion of ``S^(n-k)``, which loses accuracy
    once ``n - k`` grows past a few dozen.
    """
    n, k = _check_rank(n, k)
    x = np.asarray(x, dtype=float)
    log_c = math.log(n) + _log_binom(n - 1, k - 1)
    f = core.pdf(p, x)
    F = core.cdf(p, x)
    if method == "series":
        ell = np.arange(n - k + 1)
        coefs = np.exp(_log_binom(n - k, ell) + log_c) * np.where(ell % 2 == 0, 1.0, -1.0)
        powers = F[..., None] ** (k + ell - 1)
        return f * np.sum(coefs * powers, axis=-1)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    S = core.survival(p, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = log_c + np.log(f) + (k - 1) * np.log(F) + (n - k) * np.log(S)
        # 0 * log 0 is 0 here: F^0 = 1 at the origin
        logv = np.where((k == 1) & (F == 0), log_c + np.log(f) + (n - k) * np.log(S), logv)
    return np.where(f > 0, np.exp(logv), 0.0)


def order_stat_cdf(p: MlfrParams, n: int, k: int, x, method: str = "beta"):
    """Distribution function of the ``k``-th order statistic.

    The default evaluates the regularized incomplete beta ``I_F(k, n-k+1)``;
    ``method="series"`` uses the double alternating binomial sum.
    """
    n, k = _check_rank(n, k)
    x = np.asarray(x, dtype=float)
    F = core.cdf(p, x)
    if method == "beta":
        return betainc(k, n - k + 1, F)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    total = np.zeros_like(F)
    for j in range(k, n + 1):
        for ell in range(n - j + 1):
            coef = math.exp(_log_binom(n, j) + _log_binom(n - j, ell))
            total = total + (-1) ** ell * coef * F ** (j + ell)
    return total
