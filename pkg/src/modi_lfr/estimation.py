"""Maximum-likelihood estimation for the Modi-family models.

The optimizer works on the *free* coordinates ``u = log(theta, *baseline)``:
the likelihood depends on ``(alpha, beta)`` only through ``theta``, so the
pair is not identified and is reported with ``beta`` pinned to a reference
value (1 by default).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from ._validation import check_sample
from .family import MLFRModel, ModelId, get_model
from .exceptions import (
    FitError,
    InvalidParameterError,
    MissingCovarianceError,
    NonFiniteLikelihoodError,
    SingularInformationError,
)

EPS = np.finfo(float).eps
# optimizer domain |log p| <= LOG_BOUND; estimates past DIVERGENCE_LOG are
# running toward a limit model outside the open parameter space
LOG_BOUND = 100.0
DIVERGENCE_LOG = 50.0
TIE_TOL = 1e-9
PROFILE_LOG_THETA = np.log(10.0) * np.arange(-3.0, 3.01, 0.5)
# theta beyond which the plain-LFR limit is checked, and the log L gap that
# counts as attaining it
THETA_LIMIT_CHECK = 1e4
LIMIT_GAP = 1e-6
THETA_PINNED = 1e15
GRAD_STEP = EPS ** (1.0 / 3.0)
HESS_STEP = EPS ** (1.0 / 4.0)


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    ``n_starts`` counts every start: the model's deterministic grid first
    (for MLFR preceded by the local minima of the theta profile), then
    log-normal jitter around the grid points drawn from ``seed``. The
    start sequence is prefix-stable, so raising ``n_starts`` only adds starts.
    """

    max_iter: int = 2000
    tol: float = 1e-10
    xtol: float = 1e-8
    n_starts: int = 6
    seed: int = 0
    beta_ref: float = 1.0
    boundary: bool = True
    jitter_scale: float = 0.5


@dataclass
class FitResult:
    model: ModelId
    params: object
    estimates: dict
    identified: dict
    theta_hat: float
    loglik: float
    neg2_loglik: float
    n: int
    covariance: np.ndarray | None
    covariance_names: tuple
    wald_intervals: dict
    zeta: float
    converged: bool
    n_iter: int
    grad_norm: float
    start_index: int
    boundary: str | None = None
    diverging: bool = False
    information_psd: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return get_model(self.model).k

    def std_errors(self) -> dict:
        if self.covariance is None:
            return {}
        return {name: float(math.sqrt(v)) if v >= 0 else float("nan")
                for name, v in zip(self.covariance_names, np.diag(self.covariance))}

    def to_dict(self) -> dict:
        return {
            "model": self.model.name,
            "estimates": dict(self.estimates),
            "identified": dict(self.identified),
            "theta_hat": self.theta_hat,
            "loglik": self.loglik,
            "neg2_loglik": self.neg2_loglik,
            "n": self.n,
            "k": self.k,
            "covariance_names": list(self.covariance_names),
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "std_errors": self.std_errors(),
            "zeta": self.zeta,
            "wald_intervals": {k: list(v) for k, v in self.wald_intervals.items()},
            "converged": self.converged,
            "optimizer_trace": {"n_iter": self.n_iter, "grad_norm": self.grad_norm, "start_index": self.start_index},
            "boundary": self.boundary,
            "diverging": self.diverging,
            "information_psd": self.information_psd,
            "notes": list(self.notes),
        }


def log_likelihood(model, params, data) -> float:
    """Sum of log-densities; ``-inf`` when any observation has zero density."""
    m = get_model(model)
    x = check_sample(data, min_n=1)
    return float(np.sum(m.logpdf(params, x)))


def score_analytic(params, data, coords: str = "natural") -> np.ndarray:
    """Closed-form MLFR score.

    ``coords="natural"`` differentiates with respect to ``(alpha, beta, a, b)``,
    ``coords="identified"`` with respect to ``(theta, a, b)``.
    """
    m = get_model(ModelId.MLFR)
    x = check_sample(data, min_n=1)
    ident = m.identified(params)
    g = m.grad_identified(ident, x)
    if coords == "identified":
        return g
    return _natural_jacobian(params).T @ g


def _natural_jacobian(params) -> np.ndarray:
    """d(theta, *baseline) / d(alpha, beta, *baseline)."""
    tup = params.as_tuple()
    alpha, beta = tup[0], tup[1]
    th = params.theta
    k = len(tup)
    J = np.zeros((k - 1, k))
    J[0, 0] = beta * th / alpha
    J[0, 1] = th * math.log(alpha)
    J[1:, 2:] = np.eye(k - 2)
    return J


def score_numeric(model, params, data, coords: str = "natural") -> np.ndarray:
    """Central-difference score with step ``eps**(1/3) * max(|p|, 1)``."""
    m = get_model(model)
    x = check_sample(data, min_n=1)
    if coords == "natural":
        p0 = np.array(params.as_tuple(), dtype=float)

        def f(p):
            try:
                pp = m.params_cls(*p)
            except InvalidParameterError as exc:
                raise NonFiniteLikelihoodError(f"stencil point {p} is invalid: {exc}") from None
            return np.sum(m.logpdf(pp, x))
    elif coords == "identified":
        p0 = m.identified(params)

        def f(p):
            if not (p[0] > 0 and m.baseline_check(tuple(p[1:]))):
                raise NonFiniteLikelihoodError(f"stencil point {p} is invalid")
            return np.sum(m.logpdf_id(p, x))
    else:
        raise ValueError(f"unknown coords {coords!r}")
    return _central_gradient(f, p0, GRAD_STEP * np.maximum(np.abs(p0), 1.0))


def _central_gradient(f, p0, h):
    g = np.empty_like(p0)
    for i in range(p0.size):
        e = np.zeros_like(p0)
        e[i] = h[i]
        hi, lo = f(p0 + e), f(p0 - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteLikelihoodError(f"log-likelihood not finite on stencil of coordinate {i}")
        g[i] = (hi - lo) / (2.0 * h[i])
    return g


class _Objective:
    """Negative log-likelihood over log-coordinates of the free parameters."""

    def __init__(self, model, x, free_mask):
        self.model = model
        self.x = x
        self.free = np.asarray(free_mask, dtype=bool)
        self.analytic = isinstance(model, MLFRModel)

    def full(self, u):
        p = np.zeros(self.free.size)
        with np.errstate(over="ignore"):
            p[self.free] = np.exp(u)
        return p

    def _valid(self, p):
        vals = p.tolist()
        return all(math.isfinite(v) for v in vals) and vals[0] > 0 and self.model.baseline_check(tuple(vals[1:]))

    def __call__(self, u):
        if np.max(np.abs(u)) > LOG_BOUND:
            return np.inf
        p = self.full(u)
        if not self._valid(p):
            return np.inf
        try:
            v = -np.sum(self.model.logpdf_id(p, self.x))
        except (InvalidParameterError, FloatingPointError):
            return np.inf
        return v if np.isfinite(v) else np.inf

    def grad(self, u):
        p = self.full(u)
        if self.analytic:
            if not self._valid(p):
                return np.full(u.size, np.nan)
            g = self.model.grad_identified(p, self.x)
            return -(g[self.free] * p[self.free])
        return _central_gradient(self, u, np.full(u.size, GRAD_STEP))

    def loglik_grad_u(self, u):
        """Log-likelihood gradient in ``u``; numeric when no closed form exists."""
        if self.analytic:
            return -self.grad(u)
        return _central_gradient(lambda v: -self(v), u, np.full(u.size, GRAD_STEP))


class _MlfrObjective(_Objective):
    """MLFR fast path: value and analytic gradient from one shared pass."""

    def __init__(self, model, x, free_mask):
        super().__init__(model, x, free_mask)
        self.n = x.size
        self.sx = float(np.sum(x))
        self.x2h = 0.5 * x * x
        self.sx2h = float(np.sum(self.x2h))
        self._free_list = self.free.tolist()
        self._key = None

    def _eval(self, u):
        key = u.tobytes()
        if key == self._key:
            return self._val
        self._key, self._val, self._parts, self._grad = key, np.inf, None, None
        uu = u.tolist()
        if max(map(abs, uu)) > LOG_BOUND:
            return np.inf
        it = iter(uu)
        th, a, b = (math.exp(next(it)) if f else 0.0 for f in self._free_list)
        if not (a + b > 0 and math.isfinite(th) and math.isfinite(a) and math.isfinite(b)):
            return np.inf
        p = np.array([th, a, b])
        x = self.x
        t = a * x + b * self.x2h
        e = np.exp(-t)
        denom = (th + 1.0) - e
        lin = a + b * x
        with np.errstate(divide="ignore", invalid="ignore"):
            ll = (self.n * (math.log(th) + math.log1p(th)) + np.sum(np.log(lin))
                  - (a * self.sx + b * self.sx2h) - 2.0 * np.sum(np.log(denom)))
        if np.isfinite(ll):
            self._val, self._parts = -ll, (p, e, denom, lin)
        return self._val

    def __call__(self, u):
        return self._eval(np.asarray(u, dtype=float))

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        self._eval(u)
        if self._parts is None:
            return np.full(u.size, np.nan)
        if self._grad is None:
            p, e, denom, lin = self._parts
            th = p[0]
            x = self.x
            w = e / denom
            inv = 1.0 / lin
            g = np.array([
                self.n / th + self.n / (1.0 + th) - 2.0 * np.sum(1.0 / denom),
                np.sum(inv) - self.sx - 2.0 * np.dot(x, w),
                np.dot(x, inv) - self.sx2h - 2.0 * np.dot(self.x2h, w),
            ])
            self._grad = -(g[self.free] * p[self.free])
        return self._grad.copy()


def _profile_starts(obj: _Objective, base) -> list:
    """Local minima of the profile of the objective in ``log theta``.

    The likelihood can have separate small-theta and large-theta basins;
    a fixed theta grid with one baseline guess may start in neither.
    """
    u_rest = np.log(np.asarray(base, dtype=float)[obj.free][1:])
    profile = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lt in PROFILE_LOG_THETA:
            f = lambda v, lt=lt: obj(np.concatenate(([lt], v)))
            g = lambda v, lt=lt: obj.grad(np.concatenate(([lt], v)))[1:]
            if not np.isfinite(f(u_rest)):
                continue
            res = minimize(f, u_rest, method="BFGS", jac=g, options={"maxiter": 200, "gtol": 1e-5})
            if np.isfinite(res.fun):
                # continuation: the next grid point starts from this optimum
                u_rest = res.x
                profile.append((res.fun, np.concatenate(([lt], res.x))))
    vals = [v for v, _ in profile]
    minima = [profile[i] for i in range(len(profile))
              if (i == 0 or vals[i] <= vals[i - 1]) and (i == len(profile) - 1 or vals[i] <= vals[i + 1])]
    return [u for _, u in sorted(minima, key=lambda t: t[0])]


def _start_points(model, x, config: FitConfig, free_mask):
    grid = model.initial_guesses(x)
    free = np.asarray(free_mask, dtype=bool)
    grid_u = [np.log(np.asarray(g, dtype=float)[free]) for g in grid]
    if isinstance(model, MLFRModel):
        grid_u = _profile_starts(_MlfrObjective(model, x, free), grid[0]) + grid_u
    starts = []
    for i in range(config.n_starts):
        u = grid_u[i % len(grid_u)]
        if i >= len(grid_u):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, i]))
            u = u + rng.normal(0.0, config.jitter_scale, size=u.size)
        starts.append(u)
    return starts


def _optimize_start(obj: _Objective, u0, config: FitConfig):
    # coarse simplex pass to reach the basin; BFGS does the fine work
    nm = minimize(obj, u0, method="Nelder-Mead",
                  options={"maxiter": min(config.max_iter, 30 * u0.size), "xatol": 1e-3, "fatol": 1e-6,
                           "adaptive": u0.size > 2})
    u, fval, nit = nm.x, nm.fun, nm.nit
    if not np.isfinite(fval):
        return None
    jac = obj.grad if obj.analytic else "3-point"
    history = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(4):
            bf = minimize(obj, u, method="BFGS", jac=jac, options={"maxiter": config.max_iter, "gtol": 1e-6})
            nit += bf.nit
            if not (np.isfinite(bf.fun) and bf.fun <= fval):
                history.append((0.0, 0.0))
                break
            dl = abs(fval - bf.fun) / max(abs(fval), 1.0)
            dx = float(np.max(np.abs(bf.x - u)))
            history.append((dl, dx))
            u, fval = bf.x, bf.fun
            if dl < config.tol and dx < config.xtol:
                break
    dl, dx = history[-1] if history else (np.inf, np.inf)
    converged = dl < config.tol and dx < config.xtol
    return u, fval, nit, converged


def _run_starts(model, x, config, free_mask):
    obj = (_MlfrObjective if isinstance(model, MLFRModel) else _Objective)(model, x, free_mask)
    best = None
    diagnostics = []
    for i, u0 in enumerate(_start_points(model, x, config, free_mask)):
        try:
            out = _optimize_start(obj, u0, config)
        except (ValueError, ArithmeticError) as exc:
            diagnostics.append(f"start {i}: {exc}")
            continue
        if out is None:
            diagnostics.append(f"start {i}: non-finite objective")
            continue
        u, fval, nit, conv = out
        # ties within TIE_TOL keep the lowest start index
        if best is None or fval < best[1] - TIE_TOL * max(1.0, abs(best[1])):
            best = (u, fval, nit, conv, i)
    return obj, best, diagnostics


def fit_mle(model, data, config: FitConfig | None = None, zeta: float = 0.05) -> FitResult:
    """Fit ``model`` to ``data`` by multi-start maximum likelihood.

    Each start runs a Nelder-Mead simplex search followed by BFGS polishing
    (analytic gradient for MLFR, central differences otherwise). For MLFR
    the two edge sub-models ``b = 0`` and ``a = 0`` are fitted as well and
    the highest likelihood wins.
    """
    config = config or FitConfig()
    m = get_model(model)
    x = check_sample(data)
    k_id = len(m.identified_names)

    candidates = []
    masks = [(np.ones(k_id, dtype=bool), None)]
    if isinstance(m, MLFRModel) and config.boundary:
        masks += [(np.array([True, True, False]), "b=0"), (np.array([True, False, True]), "a=0")]
    diagnostics = []
    for mask, label in masks:
        obj, best, diag = _run_starts(m, x, config, mask)
        diagnostics += [f"[{label or 'interior'}] {d}" for d in diag]
        if best is not None:
            candidates.append((best[1], label, obj, best))
    if not candidates:
        raise FitError(f"all starts failed for {m.id.name}", diagnostics)
    # an interior run sliding onto an edge ties with the edge fit; among
    # ties prefer a converged candidate that stays off the edge, then the
    # interior (listed first)
    f_min = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= f_min + TIE_TOL * max(1.0, abs(f_min))]

    def settled(c):
        return c[3][3] and np.max(np.abs(c[3][0])) <= DIVERGENCE_LOG

    fval, label, obj, (u, _, nit, conv, start_idx) = next((c for c in tied if settled(c)), tied[0])

    ident = obj.full(u)
    params = m.make_params(ident[0], tuple(ident[1:]), config.beta_ref)
    loglik = log_likelihood(m, params, x)
    grad = obj.loglik_grad_u(u)
    result = FitResult(
        model=m.id,
        params=params,
        estimates=dict(zip(m.param_names, params.as_tuple())),
        identified=dict(zip(m.identified_names, map(float, ident))),
        theta_hat=float(params.theta),
        loglik=loglik,
        neg2_loglik=-2.0 * loglik,
        n=int(x.size),
        covariance=None,
        covariance_names=m.identified_names,
        wald_intervals={},
        zeta=zeta,
        converged=bool(conv),
        n_iter=int(nit),
        grad_norm=float(np.linalg.norm(grad)),
        start_index=start_idx,
        boundary=label,
    )
    if np.max(np.abs(u)) > DIVERGENCE_LOG:
        result.diverging = True
        result.converged = False
        names = [n for n, v in zip(np.array(m.identified_names)[obj.free], u) if abs(v) > DIVERGENCE_LOG]
        result.notes.append(
            f"{', '.join(names)} diverging: the likelihood supremum lies on a limit model outside the parameter space"
        )
    if result.theta_hat > THETA_LIMIT_CHECK:
        edge = baseline_limit_loglik(m, x, ident[1:])
        if edge >= loglik - LIMIT_GAP:
            result.boundary = label = "theta=inf"
            result.diverging = True
            result.converged = False
            result.notes.append(
                f"no finite MLE: the baseline limit (theta -> inf) attains log L = {edge:.10g}, "
                f"within {LIMIT_GAP:g} of the best fit"
            )
    result.notes.append(
        f"alpha and beta enter only through theta = alpha**beta; beta is fixed at {config.beta_ref:g} for reporting"
    )
    if label is not None:
        result.notes.append(f"maximum on the {label} edge; that coordinate has no interval")
    try:
        info = observed_information(m, params, x, coords="identified")
        free = np.isfinite(np.diag(info))
        sub = info[np.ix_(free, free)]
        ev = np.linalg.eigvalsh(sub)
        result.information_psd = bool(ev.min() >= -1e-6 * abs(np.trace(sub)))
        cov = np.full_like(info, np.nan)
        cov[np.ix_(free, free)] = _invert(sub)
        result.covariance = cov
        result.wald_intervals = wald_intervals(result, zeta)
    except SingularInformationError as exc:
        result.notes.append(f"covariance omitted: {exc}")
    return result


def lfr_limit_loglik(x) -> float:
    """Maximized log-likelihood of the linear failure rate law, the
    ``theta -> inf`` limit of MLFR. Concave in ``(a, b) >= 0``."""
    x = np.asarray(x, dtype=float)
    sx, sx2 = x.sum(), 0.5 * np.dot(x, x)

    def nll(v):
        a, b = v
        rate = a + b * x
        if np.any(rate <= 0):
            return np.inf, np.zeros(2)
        val = -(np.sum(np.log(rate)) - a * sx - b * sx2)
        inv = 1.0 / rate
        return val, -np.array([inv.sum() - sx, np.dot(x, inv) - sx2])

    v0 = np.array([1.0 / x.mean(), 1.0 / np.mean(x * x)])
    res = minimize(nll, v0, jac=True, method="L-BFGS-B", bounds=[(0, None), (0, None)],
                   options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 1000})
    return float(-res.fun)


def baseline_limit_loglik(model, x, baseline_start) -> float:
    """Maximized log-likelihood of the ``theta -> inf`` limit, i.e. of the
    baseline law alone. MLFR uses the concave LFR problem; other models
    are refitted with ``theta`` pinned at ``THETA_PINNED``."""
    m = get_model(model)
    if isinstance(m, MLFRModel):
        return lfr_limit_loglik(x)
    start = np.asarray(baseline_start, dtype=float)
    free = start > 0
    if not np.any(free):
        return -np.inf

    def nll(v):
        q = start.copy()
        with np.errstate(over="ignore"):
            q[free] = np.exp(v)
        if not (np.all(np.isfinite(q)) and m.baseline_check(tuple(q))):
            return np.inf
        val = -np.sum(m.logpdf_id(np.concatenate(([THETA_PINNED], q)), x))
        return val if np.isfinite(val) else np.inf

    v0 = np.log(start[free])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(nll, v0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        res = minimize(nll, res.x, method="BFGS", options={"gtol": 1e-8})
    return float(-res.fun)


def _invert(info):
    if not np.all(np.isfinite(info)):
        raise SingularInformationError("information matrix has non-finite entries")
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularInformationError(f"information matrix is singular (condition number {cond:.3g})")
    cov = np.linalg.inv(info)
    return 0.5 * (cov + cov.T)


def numerical_hessian(model, params, data, symmetrize: bool = True) -> np.ndarray:
    """Hessian of the log-likelihood in identified coordinates.

    Differentiates the score in log-coordinates (relative steps keep tiny
    parameters such as ``a ~ 1e-3`` well resolved) and maps back with the
    exact chain rule. Coordinates sitting at 0 get ``nan`` rows/columns.
    """
    m = get_model(model)
    x = check_sample(data, min_n=1)
    ident = m.identified(params)
    free = ident > 0
    obj = _Objective(m, x, free)
    u0 = np.log(ident[free])
    step = GRAD_STEP if obj.analytic else HESS_STEP
    d = u0.size
    Hu = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        gp, gm = obj.loglik_grad_u(u0 + e), obj.loglik_grad_u(u0 - e)
        if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gm))):
            raise NonFiniteLikelihoodError("score not finite on Hessian stencil")
        Hu[:, j] = (gp - gm) / (2.0 * step)
    if symmetrize:
        Hu = 0.5 * (Hu + Hu.T)
    gu = obj.loglik_grad_u(u0)
    p = ident[free]
    Hp = (Hu - np.diag(gu)) / np.outer(p, p)
    out = np.full((ident.size, ident.size), np.nan)
    out[np.ix_(free, free)] = Hp
    return out


def observed_information(model, params, data, coords: str = "identified") -> np.ndarray:
    """Negative Hessian of the log-likelihood.

    ``coords="identified"`` gives the matrix over ``(theta, *baseline)``;
    ``coords="natural"`` over ``(alpha, beta, *baseline)``, which is rank
    deficient because the likelihood is flat along ``alpha**beta = const``.
    """
    m = get_model(model)
    H = numerical_hessian(m, params, data)
    if coords == "identified":
        return -H
    if coords != "natural":
        raise ValueError(f"unknown coords {coords!r}")
    x = check_sample(data, min_n=1)
    J = _natural_jacobian(params)
    tup = params.as_tuple()
    alpha, beta, th = tup[0], tup[1], params.theta
    ident = m.identified(params)
    obj = _Objective(m, x, ident > 0)
    g_theta = obj.loglik_grad_u(np.log(ident[ident > 0]))[0] / th
    la = math.log(alpha)
    d2 = np.zeros((len(tup), len(tup)))
    d2[0, 0] = beta * (beta - 1.0) * th / alpha**2
    d2[0, 1] = d2[1, 0] = th / alpha * (1.0 + beta * la)
    d2[1, 1] = th * la * la
    Hn = J.T @ H @ J + g_theta * d2
    return -Hn


def wald_intervals(fit: FitResult, zeta: float = 0.05) -> dict:
    """``estimate +/- z_{zeta/2} sqrt(V)`` for every identified coordinate and alpha.

    ``alpha`` uses the delta method with ``beta`` held at its reference value.
    """
    if fit.covariance is None:
        raise MissingCovarianceError("fit has no covariance matrix")
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    z = float(norm.ppf(1.0 - zeta / 2.0))
    var = np.diag(fit.covariance)
    out = {}
    for name, v in zip(fit.covariance_names, var):
        est = fit.identified[name]
        if not np.isfinite(v):
            continue
        half = z * math.sqrt(max(v, 0.0))
        out[name] = (est - half, est + half)
    if np.isfinite(var[0]):
        alpha, beta = fit.estimates["alpha"], fit.estimates["beta"]
        dalpha = alpha / (beta * fit.theta_hat)
        half = z * abs(dalpha) * math.sqrt(max(var[0], 0.0))
        out["alpha"] = (alpha - half, alpha + half)
    return out
