"""Modi-family models behind a common distribution interface.

Each model is the Modi transform ``F = (1 + theta) G / (theta + G)`` of a
baseline CDF ``G``. Parameters come in three layouts:

* *natural*: ``(alpha, beta, *baseline)`` as reported in the literature;
* *identified*: ``(theta, *baseline)`` with ``theta = alpha**beta``, the
  coordinates the likelihood actually depends on;
* *free*: logs of the identified coordinates, used by the optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from . import core
from ._validation import check_unit_interval
from .core import MlfrParams, make_generator
from .exceptions import InvalidParameterError


class ModelId(str, Enum):
    MLFR = "mlfr"
    MR = "mr"
    MW = "mw"
    ME = "me"
    MF = "mf"

    def __str__(self):
        return self.name


def _check_positive(obj):
    for f in fields(obj):
        v = getattr(obj, f.name)
        if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v) or v <= 0:
            raise InvalidParameterError(f"{type(obj).__name__}.{f.name} must be a finite positive real, got {v!r}")
        object.__setattr__(obj, f.name, float(v))
    try:
        th = obj.alpha**obj.beta
    except OverflowError:
        th = math.inf
    if not (math.isfinite(th) and th > 0):
        raise InvalidParameterError(f"alpha**beta = {th!r} is not a finite positive number")


@dataclass(frozen=True)
class MRParams:
    """Modi Rayleigh: Rayleigh baseline with scale ``sigma``."""

    alpha: float
    beta: float
    sigma: float
    model = ModelId.MR

    def __post_init__(self):
        _check_positive(self)

    @property
    def theta(self):
        return self.alpha**self.beta

    def as_tuple(self):
        return (self.alpha, self.beta, self.sigma)


@dataclass(frozen=True)
class MWParams:
    """Modi Weibull: Weibull baseline with shape ``a`` and scale ``b``."""

    alpha: float
    beta: float
    a: float
    b: float
    model = ModelId.MW

    def __post_init__(self):
        _check_positive(self)

    @property
    def theta(self):
        return self.alpha**self.beta

    def as_tuple(self):
        return (self.alpha, self.beta, self.a, self.b)


@dataclass(frozen=True)
class MEParams:
    """Modi exponential: exponential baseline with rate ``a``."""

    alpha: float
    beta: float
    a: float
    model = ModelId.ME

    def __post_init__(self):
        _check_positive(self)

    @property
    def theta(self):
        return self.alpha**self.beta

    def as_tuple(self):
        return (self.alpha, self.beta, self.a)


@dataclass(frozen=True)
class MFParams:
    """Modi Frechet: baseline ``exp(-(b / x)**a)``."""

    alpha: float
    beta: float
    a: float
    b: float
    model = ModelId.MF

    def __post_init__(self):
        _check_positive(self)

    @property
    def theta(self):
        return self.alpha**self.beta

    def as_tuple(self):
        return (self.alpha, self.beta, self.a, self.b)


MlfrParams.model = ModelId.MLFR


def _neglog_sf(g, sg):
    # -log(1 - g) from whichever of g, 1 - g is known more accurately
    return np.where(g < 0.5, -np.log1p(-np.minimum(g, 0.5)), -np.log(np.where(g < 0.5, 0.5, sg)))


def _neglog_cdf(g, sg):
    return np.where(sg < 0.5, -np.log1p(-np.minimum(sg, 0.5)), -np.log(np.where(sg < 0.5, 0.5, g)))


class ModiModel:
    """A Modi-family model defined by its baseline distribution.

    Subclasses implement the baseline CDF, survival, log-density and
    inverse; the Modi transform is applied here.
    """

    id: ModelId
    params_cls: type
    baseline_names: tuple

    @property
    def param_names(self) -> tuple:
        return ("alpha", "beta") + self.baseline_names

    @property
    def identified_names(self) -> tuple:
        return ("theta",) + self.baseline_names

    @property
    def k(self) -> int:
        """Parameter count used by the information criteria."""
        return len(self.param_names)

    def make_params(self, theta, baseline, beta_ref: float = 1.0):
        """Natural parameters from identified ones, reporting ``beta = beta_ref``."""
        alpha = theta if beta_ref == 1.0 else theta ** (1.0 / beta_ref)
        return self.params_cls(alpha, beta_ref, *baseline)

    def identified(self, params) -> np.ndarray:
        self._check_type(params)
        tup = params.as_tuple()
        return np.array((params.theta,) + tup[2:], dtype=float)

    def _check_type(self, params):
        if not isinstance(params, self.params_cls):
            raise InvalidParameterError(f"{self.id} expects {self.params_cls.__name__}, got {type(params).__name__}")

    # baseline hooks, all taking the baseline tuple ``q``
    def _g(self, q, x):
        raise NotImplementedError

    def _sg(self, q, x):
        raise NotImplementedError

    def _log_g(self, q, x):
        raise NotImplementedError

    def _g_inv(self, q, g, sg):
        raise NotImplementedError

    def baseline_check(self, q) -> bool:
        return all(v > 0 for v in q)

    # evaluation on identified coordinates
    def cdf_id(self, ident, x):
        th, q = ident[0], tuple(ident[1:])
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        g = self._g(q, xs)
        lower = (1.0 + th) * g / (th + g)
        # near 1 the ratio jitters by an ulp; 1 - S is monotone there
        upper = 1.0 - th * self._sg(q, xs) / (th + g)
        return np.where(x > 0, np.where(lower < 0.5, lower, upper), 0.0)

    def sf_id(self, ident, x):
        th, q = ident[0], tuple(ident[1:])
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        return np.where(x > 0, th * self._sg(q, xs) / (th + self._g(q, xs)), 1.0)

    def logpdf_id(self, ident, x):
        th, q = ident[0], tuple(ident[1:])
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            val = math.log(th) + math.log1p(th) + self._log_g(q, xs) - 2.0 * np.log(th + self._g(q, xs))
        return np.where(x > 0, val, -np.inf)

    def pdf_id(self, ident, x):
        return np.exp(self.logpdf_id(ident, x))

    def ppf_id(self, ident, u):
        th, q = ident[0], tuple(ident[1:])
        u = np.asarray(u, dtype=float)
        g = u * th / (1.0 + th - u)
        sg = (1.0 + th) * (1.0 - u) / (1.0 + th - u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._g_inv(q, g, sg)

    # public API on natural parameter objects
    def cdf(self, params, x):
        return self.cdf_id(self.identified(params), x)

    def sf(self, params, x):
        return self.sf_id(self.identified(params), x)

    def pdf(self, params, x):
        return self.pdf_id(self.identified(params), x)

    def logpdf(self, params, x):
        return self.logpdf_id(self.identified(params), x)

    def ppf(self, params, u):
        u = check_unit_interval(u, open_left=True)
        return self.ppf_id(self.identified(params), u)

    def hazard(self, params, x):
        ident = self.identified(params)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.pdf_id(ident, x) / self.sf_id(ident, x)

    def sample(self, params, n: int, seed=None) -> np.ndarray:
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        u = make_generator(seed).random(int(n))
        # Philox can return exactly 0; keep u in (0, 1) for open-support baselines
        u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
        return self.ppf(params, u)

    def initial_guesses(self, x: np.ndarray) -> list:
        """Identified starting vectors derived from the data."""
        raise NotImplementedError

    def grad_identified(self, ident, x):
        """Analytic gradient of the log-likelihood, or ``None`` if unavailable."""
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.id.value}>"


class MLFRModel(ModiModel):
    id = ModelId.MLFR
    params_cls = MlfrParams
    baseline_names = ("a", "b")

    def baseline_check(self, q):
        a, b = q
        return a >= 0 and b >= 0 and a + b > 0

    def _t(self, q, x):
        a, b = q
        return a * x + 0.5 * b * x * x

    def _g(self, q, x):
        return -np.expm1(-self._t(q, x))

    def _sg(self, q, x):
        return np.exp(-self._t(q, x))

    def _log_g(self, q, x):
        a, b = q
        return np.log(a + b * x) - self._t(q, x)

    def _g_inv(self, q, g, sg):
        a, b = q
        level = _neglog_sf(g, sg)
        return 2.0 * level / (a + np.sqrt(a * a + 2.0 * b * level))

    def _p(self, ident):
        th, a, b = ident
        return MlfrParams(th, 1.0, a, b)

    # the closed forms in ``core`` are the reference implementation
    def cdf_id(self, ident, x):
        return core.cdf(self._p(ident), x)

    def sf_id(self, ident, x):
        return core.survival(self._p(ident), x)

    def logpdf_id(self, ident, x):
        x = np.asarray(x, dtype=float)
        th, a, b = ident
        if np.all(x >= 0):
            return core.log_pdf_theta(th, a, b, x)
        return core.log_pdf(self._p(ident), x)

    def pdf_id(self, ident, x):
        return core.pdf(self._p(ident), x)

    def hazard(self, params, x):
        return core.hazard(params, x)

    def ppf(self, params, u):
        return core.quantile(params, u)

    def sample(self, params, n, seed=None):
        return core.sample(params, n, seed)

    def initial_guesses(self, x):
        a0 = 1.0 / np.mean(x)
        b0 = 1.0 / np.mean(x * x)
        return [np.array([t0, a0, b0]) for t0 in (0.1, 1.0, 10.0)]

    def grad_identified(self, ident, x):
        th, a, b = ident
        t = a * x + 0.5 * b * x * x
        e = np.exp(-t)
        denom = th + 1.0 - e
        lin = a + b * x
        w = e / denom
        n = x.size
        d_th = n / th + n / (1.0 + th) - 2.0 * np.sum(1.0 / denom)
        d_a = np.sum(1.0 / lin) - np.sum(x) - 2.0 * np.sum(x * w)
        d_b = np.sum(x / lin) - 0.5 * np.sum(x * x) - np.sum(x * x * w)
        return np.array([d_th, d_a, d_b])


class MRModel(ModiModel):
    id = ModelId.MR
    params_cls = MRParams
    baseline_names = ("sigma",)

    def _z(self, q, x):
        (s,) = q
        return x * x / (2.0 * s * s)

    def _g(self, q, x):
        return -np.expm1(-self._z(q, x))

    def _sg(self, q, x):
        return np.exp(-self._z(q, x))

    def _log_g(self, q, x):
        (s,) = q
        return np.log(x) - 2.0 * math.log(s) - self._z(q, x)

    def _g_inv(self, q, g, sg):
        (s,) = q
        return s * np.sqrt(2.0 * _neglog_sf(g, sg))

    def initial_guesses(self, x):
        s0 = math.sqrt(np.mean(x * x) / 2.0)
        return [np.array([t0, s0]) for t0 in (0.1, 1.0, 10.0)]


class MEModel(ModiModel):
    id = ModelId.ME
    params_cls = MEParams
    baseline_names = ("a",)

    def _g(self, q, x):
        return -np.expm1(-q[0] * x)

    def _sg(self, q, x):
        return np.exp(-q[0] * x)

    def _log_g(self, q, x):
        return math.log(q[0]) - q[0] * x

    def _g_inv(self, q, g, sg):
        return _neglog_sf(g, sg) / q[0]

    def initial_guesses(self, x):
        a0 = 1.0 / np.mean(x)
        return [np.array([t0, a0]) for t0 in (0.1, 1.0, 10.0)]


class MWModel(ModiModel):
    id = ModelId.MW
    params_cls = MWParams
    baseline_names = ("a", "b")

    def _z(self, q, x):
        a, b = q
        return (x / b) ** a

    def _g(self, q, x):
        return -np.expm1(-self._z(q, x))

    def _sg(self, q, x):
        return np.exp(-self._z(q, x))

    def _log_g(self, q, x):
        a, b = q
        return math.log(a) - math.log(b) + (a - 1.0) * np.log(x / b) - self._z(q, x)

    def _g_inv(self, q, g, sg):
        a, b = q
        return b * _neglog_sf(g, sg) ** (1.0 / a)

    def initial_guesses(self, x):
        m = np.mean(x)
        return [np.array([t0, k0, m]) for t0 in (0.1, 1.0, 10.0) for k0 in (0.7, 1.5)]


class MFModel(ModiModel):
    id = ModelId.MF
    params_cls = MFParams
    baseline_names = ("a", "b")

    def _z(self, q, x):
        a, b = q
        return (b / x) ** a

    def _g(self, q, x):
        return np.exp(-self._z(q, x))

    def _sg(self, q, x):
        return -np.expm1(-self._z(q, x))

    def _log_g(self, q, x):
        a, b = q
        return math.log(a) + a * math.log(b) - (a + 1.0) * np.log(x) - self._z(q, x)

    def _g_inv(self, q, g, sg):
        a, b = q
        return b * _neglog_cdf(g, sg) ** (-1.0 / a)

    def initial_guesses(self, x):
        med = float(np.median(x))
        out = []
        for t0 in (0.1, 1.0, 10.0):
            for k0 in (0.7, 1.5):
                # baseline median b (ln 2)^(-1/a) placed at the sample median
                out.append(np.array([t0, k0, med * math.log(2.0) ** (1.0 / k0)]))
        return out


MODELS = {m.id: m for m in (MLFRModel(), MRModel(), MWModel(), MEModel(), MFModel())}
PARAMS_TYPES = {m.params_cls: m for m in MODELS.values()}


def get_model(model) -> ModiModel:
    """Look up a model by :class:`ModelId`, name (``"mlfr"``, ``"MR"``...) or params object."""
    if isinstance(model, ModiModel):
        return model
    if type(model) in PARAMS_TYPES:
        return PARAMS_TYPES[type(model)]
    try:
        return MODELS[ModelId(str(model.value if isinstance(model, ModelId) else model).lower())]
    except (ValueError, KeyError):
        raise ValueError(f"unknown model {model!r}; choose from {[m.value for m in ModelId]}") from None


def family_pdf(c, x):
    return get_model(c).pdf(c, x)


def family_logpdf(c, x):
    return get_model(c).logpdf(c, x)


def family_cdf(c, x):
    return get_model(c).cdf(c, x)


def family_sf(c, x):
    return get_model(c).sf(c, x)


def family_quantile(c, u):
    """Inverse CDF on ``(0, 1)`` via the baseline inverse ``G^{-1}(u theta / (1 + theta - u))``."""
    return get_model(c).ppf(c, u)


def family_sample(c, n, seed=None):
    return get_model(c).sample(c, n, seed)
