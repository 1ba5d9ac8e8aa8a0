"""Goodness-of-fit statistics, information criteria and model ranking.

p-values come from the asymptotic null distributions of the statistics with
the model CDF treated as fully specified, i.e. without a correction for the
parameters having been estimated from the same data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln, kve

from ._validation import check_sample
from .exceptions import DomainError
from .family import ModelId, get_model

SERIES_TOL = 1e-12
AD_CLAMP = 1e-15
UNCORRECTED_NOTE = "asymptotic p-values; no correction for estimated parameters"


@dataclass(frozen=True)
class InfoCriteria:
    neg2_loglik: float
    aic: float
    bic: float
    caic: float
    hqic: float
    k: int
    n: int

    def to_dict(self):
        return asdict(self)


def info_criteria(neg2_loglik: float, k: int, n: int) -> InfoCriteria:
    """AIC, BIC, consistent AIC and Hannan-Quinn criterion from ``-2 log L``.

    CAIC is ``-2 log L + k (ln n + 1)`` and HQIC ``-2 log L + 2 k ln ln n``.
    """
    if n < 3:
        raise DomainError("information criteria need n >= 3 (ln ln n must be positive)")
    if k < 0:
        raise DomainError("k must be non-negative")
    ln_n = math.log(n)
    return InfoCriteria(
        neg2_loglik=neg2_loglik,
        aic=neg2_loglik + 2 * k,
        bic=neg2_loglik + k * ln_n,
        caic=neg2_loglik + k * (ln_n + 1.0),
        hqic=neg2_loglik + 2 * k * math.log(ln_n),
        k=k,
        n=n,
    )


# -- asymptotic null distributions ------------------------------------------

def kolmogorov_sf(x: float) -> float:
    """``P(K > x)`` for the limiting Kolmogorov distribution of ``sqrt(n) D``."""
    if x <= 0:
        return 1.0
    if x < 1.0:
        # theta-function form converges fast for small x
        c = math.pi**2 / (8.0 * x * x)
        s, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * c)
            s += term
            if term < SERIES_TOL * max(s, 1e-300):
                break
            k += 1
        return 1.0 - math.sqrt(2.0 * math.pi) / x * s
    s, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        s += term if k % 2 else -term
        if term < SERIES_TOL:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * s))


def cvm_cdf(w: float) -> float:
    """Limiting distribution of the Cramer-von Mises ``W^2``.

    Series of modified Bessel functions ``K_{1/4}`` over the eigenvalues of
    the Brownian-bridge covariance operator.
    """
    if w <= 0:
        return 0.0
    total, k = 0.0, 0
    while True:
        y = 4 * k + 1
        q = y * y / (16.0 * w)
        coef = math.exp(gammaln(k + 0.5) - gammaln(k + 1.0)) / (math.pi**1.5 * math.sqrt(w))
        term = coef * math.sqrt(y) * math.exp(-2.0 * q) * kve(0.25, q) if q < 700 else 0.0
        total += term
        if abs(term) < SERIES_TOL or k > 200:
            break
        k += 1
    return min(1.0, max(0.0, total))


def cvm_sf(w: float) -> float:
    return 1.0 - cvm_cdf(w)


def _ad_integral(z, j):
    c = (4 * j + 1) ** 2 * math.pi**2 / (8.0 * z)

    def f(w):
        return math.exp(z / (8.0 * (w * w + 1.0)) - c * w * w)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def ad_cdf(z: float) -> float:
    """Limiting distribution of the Anderson-Darling ``A^2``.

    Sums the series of Anderson and Darling (1954), each term carrying a
    one-dimensional integral evaluated by adaptive quadrature.
    """
    if z <= 0:
        return 0.0
    total, j = 0.0, 0
    log_binom = 0.0  # log |binom(-1/2, j)|
    while True:
        y = 4 * j + 1
        expo = -(y * y) * math.pi**2 / (8.0 * z)
        if expo < -745:
            break
        term = math.exp(log_binom + expo) * y * _ad_integral(z, j)
        total += term if j % 2 == 0 else -term
        if term * math.sqrt(2.0 * math.pi) / z < SERIES_TOL:
            break
        j += 1
        log_binom += math.log((j - 0.5) / j)
    return min(1.0, max(0.0, math.sqrt(2.0 * math.pi) / z * total))


def ad_sf(z: float) -> float:
    return 1.0 - ad_cdf(z)


# -- statistics ---------------------------------------------------------------

def _probabilities(data, model, params):
    x = np.sort(check_sample(data, min_n=1))
    return get_model(model).cdf(params, x)


def ks_statistic(u_sorted: np.ndarray) -> float:
    n = u_sorted.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u_sorted), np.max(u_sorted - (i - 1) / n)))


def cvm_statistic(u_sorted: np.ndarray) -> float:
    n = u_sorted.size
    i = np.arange(1, n + 1)
    return float(1.0 / (12 * n) + np.sum((u_sorted - (2 * i - 1) / (2.0 * n)) ** 2))


def ad_statistic(u_sorted: np.ndarray) -> tuple[float, bool]:
    """``A^2`` and whether any probability had to be clamped away from 0 or 1."""
    n = u_sorted.size
    u = np.clip(u_sorted, AD_CLAMP, 1.0 - AD_CLAMP)
    clamped = bool(np.any(u != u_sorted))
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    return float(-n - s / n), clamped


def ks_test(data, model, params) -> tuple[float, float]:
    u = _probabilities(data, model, params)
    d = ks_statistic(u)
    return d, kolmogorov_sf(math.sqrt(u.size) * d)


def cvm_test(data, model, params) -> tuple[float, float]:
    w = cvm_statistic(_probabilities(data, model, params))
    return w, cvm_sf(w)


def ad_test(data, model, params) -> tuple[float, float]:
    a, _ = ad_statistic(_probabilities(data, model, params))
    return a, ad_sf(a)


@dataclass
class GofReport:
    model: ModelId
    ks_stat: float
    ks_p: float
    cvm_stat: float
    cvm_p: float
    ad_stat: float
    ad_p: float
    n: int
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["model"] = self.model.name
        return d


def gof_report(data, model, params) -> GofReport:
    m = get_model(model)
    u = _probabilities(data, m, params)
    d = ks_statistic(u)
    w = cvm_statistic(u)
    a, clamped = ad_statistic(u)
    notes = [UNCORRECTED_NOTE]
    if clamped:
        notes.append(f"AD: model probabilities clamped to [{AD_CLAMP:g}, 1 - {AD_CLAMP:g}]")
    return GofReport(
        model=m.id,
        ks_stat=d,
        ks_p=kolmogorov_sf(math.sqrt(u.size) * d),
        cvm_stat=w,
        cvm_p=cvm_sf(w),
        ad_stat=a,
        ad_p=ad_sf(a),
        n=int(u.size),
        notes=notes,
    )


_MODEL_ORDER = {m: i for i, m in enumerate(ModelId)}


def rank_models(reports) -> list:
    """Order ``(FitResult, GofReport, InfoCriteria)`` triples best first.

    AIC ascending, then BIC ascending, then K-S p-value descending; exact
    ties fall back to the fixed model order MLFR, MR, MW, ME, MF.
    """
    reports = list(reports)

    def key(entry):
        fit, gof, ic = entry
        return (ic.aic, ic.bic, -gof.ks_p, _MODEL_ORDER[ModelId(fit.model)])

    return sorted(reports, key=key)
