"""Embedded data sets, descriptive statistics, diagnostic curves and the
Monte Carlo bias/MSE study."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import core
from ._validation import check_sample
from .core import MlfrParams
from .estimation import FitConfig, fit_mle
from .exceptions import DegenerateDataError, ModiError, ScenarioInfeasibleError
from .family import ModelId, get_model

QUANTILE_CONVENTION = "linear interpolation of order statistics (Hyndman-Fan type 7, numpy method='linear')"
KURTOSIS_CONVENTION = "non-excess m4/m2^2, 1/n central moments"
SKEWNESS_CONVENTION = "m3/m2^1.5, 1/n central moments"
SEED_CONVENTION = "numpy SeedSequence([seed, scenario_id, n, replicate_index]) feeding Philox-4x64-10"

DATASET_SHA256 = {
    "bladder": "c473e10e2a3cbb04d96621b1445aa4226057261530d209827decab99513c0045",
    "guinea": "22249848df7fc02454b8f3e6f4649cac7da680107aa682a8b46757c67bbc5375",
}
DATASET_SOURCES = {
    "bladder": "Lee, E.T. and Wang, J.W. (2003), Statistical Methods for Survival Data Analysis, Wiley",
    "guinea": "Gross, A.J. and Clark, V.A. (1975), Survival Distributions: Reliability Applications "
              "in the Biomedical Sciences, Wiley",
}
MAX_FAILURE_FRACTION = 0.20


# -- data sets ------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    name: str
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


def parse_lifetimes(text: str) -> np.ndarray:
    """One decimal per line; ``#`` starts a comment, blank lines are skipped."""
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ValueError(f"line {lineno}: not a number: {line!r}") from None
    return np.array(vals, dtype=float)


def values_checksum(values) -> str:
    text = "\n".join(repr(float(v)) for v in np.asarray(values, dtype=float))
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def load_dataset(name: str) -> Dataset:
    """Embedded data set ``"bladder"`` or ``"guinea"``, verified by checksum."""
    if name not in DATASET_SHA256:
        raise ValueError(f"unknown data set {name!r}; choose from {sorted(DATASET_SHA256)}")
    text = resources.files(__package__).joinpath("data", f"{name}.txt").read_text(encoding="ascii")
    values = parse_lifetimes(text)
    digest = values_checksum(values)
    if digest != DATASET_SHA256[name]:
        raise RuntimeError(f"embedded data set {name!r} failed its checksum ({digest})")
    return Dataset(name, values, DATASET_SOURCES[name])


def load_file(path) -> Dataset:
    """Read a plain-text lifetime file; the values are validated as a sample."""
    path = Path(path)
    values = parse_lifetimes(path.read_text(encoding="utf-8"))
    if values.size:
        check_sample(values, min_n=1)
    return Dataset(path.stem, values, str(path))


# -- descriptive statistics -------------------------------------------------------

@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    std_dev: float
    skewness: float
    kurtosis: float
    conventions: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def descriptive_stats(d) -> DescriptiveStats:
    x = np.asarray(d.values if isinstance(d, Dataset) else d, dtype=float)
    if x.size < 4:
        raise DegenerateDataError(f"degenerate data: descriptive statistics need n >= 4, got {x.size}")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    if m2 == 0:
        raise DegenerateDataError("degenerate data: zero variance")
    q1, med, q3 = np.percentile(x, [25, 50, 75], method="linear")
    return DescriptiveStats(
        n=int(x.size),
        min=float(x.min()),
        q1=float(q1),
        median=float(med),
        mean=float(x.mean()),
        q3=float(q3),
        max=float(x.max()),
        std_dev=float(x.std(ddof=1)),
        skewness=float(np.mean(dev**3) / m2**1.5),
        kurtosis=float(np.mean(dev**4) / m2**2),
        conventions={
            "quantile": QUANTILE_CONVENTION,
            "kurtosis": KURTOSIS_CONVENTION,
            "skewness": SKEWNESS_CONVENTION,
        },
    )


# -- diagnostic curves ------------------------------------------------------------

def ttt_curve(d) -> list[tuple[float, float]]:
    """Scaled total-time-on-test points ``(i/n, T(i/n))`` for ``i = 1..n``."""
    x = np.sort(np.asarray(d.values if isinstance(d, Dataset) else d, dtype=float))
    n = x.size
    if n < 2:
        raise DegenerateDataError("degenerate data: TTT curve needs n >= 2")
    csum = np.cumsum(x)
    i = np.arange(1, n + 1)
    t = (csum + (n - i) * x) / csum[-1]
    return list(zip((i / n).tolist(), t.tolist()))


def pp_points(d, model, params) -> list[tuple[float, float]]:
    """``((i - 0.5)/n, F(x_(i)))`` pairs for the sorted sample."""
    x = np.sort(np.asarray(d.values if isinstance(d, Dataset) else d, dtype=float))
    n = x.size
    emp = (np.arange(1, n + 1) - 0.5) / n
    theo = get_model(model).cdf(params, x)
    return list(zip(emp.tolist(), np.asarray(theo, dtype=float).tolist()))


CURVE_COLUMNS = ("x", "pdf", "cdf", "survival", "hazard")


def curve_grid(model, params, x_lo: float, x_hi: float, n_points: int) -> dict:
    """Evenly spaced table of pdf, cdf, survival and hazard, keyed by column."""
    if not x_lo < x_hi:
        raise ValueError("need x_lo < x_hi")
    if int(n_points) != n_points or n_points < 2:
        raise ValueError("n_points must be an integer >= 2")
    m = get_model(model)
    x = np.linspace(float(x_lo), float(x_hi), int(n_points))
    return {
        "x": x,
        "pdf": np.asarray(m.pdf(params, x), dtype=float),
        "cdf": np.asarray(m.cdf(params, x), dtype=float),
        "survival": np.asarray(m.sf(params, x), dtype=float),
        "hazard": np.asarray(m.hazard(params, x), dtype=float),
    }


# -- simulation study -------------------------------------------------------------

@dataclass(frozen=True)
class SimScenario:
    true_params: MlfrParams
    sample_sizes: tuple = (20, 50, 100, 200, 500, 1000)
    replicates: int = 1000
    seed: int = 20240501
    scenario_id: int = 0

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError("sample sizes must be positive integers")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "replicates", int(self.replicates))

    def with_(self, **changes) -> "SimScenario":
        d = {k: getattr(self, k) for k in ("true_params", "sample_sizes", "replicates", "seed", "scenario_id")}
        d.update({k: v for k, v in changes.items() if v is not None})
        return SimScenario(**d)


SCENARIOS = {
    1: SimScenario(MlfrParams(1.5, 0.1, 0.75, 0.25), scenario_id=1),
    2: SimScenario(MlfrParams(0.25, 0.5, 0.8, 0.75), scenario_id=2),
    3: SimScenario(MlfrParams(3.0, 0.25, 1.2, 1.0), scenario_id=3),
}

SIM_PARAMS = ("theta", "a", "b", "alpha")
DEFAULT_SIM_FIT = FitConfig(n_starts=3)


@dataclass
class SimCell:
    n: int
    replicates: int
    failures: int
    bias: dict
    mse: dict
    no_finite_mle: int = 0

    @property
    def used(self) -> int:
        return self.replicates - self.failures

    def row(self) -> dict:
        out = {"n": self.n, "replicates": self.replicates, "failures": self.failures,
               "no_finite_mle": self.no_finite_mle, "used": self.used}
        for name in SIM_PARAMS:
            out[f"bias_{name}"] = self.bias[name]
            out[f"mse_{name}"] = self.mse[name]
        return out


def replicate_seed(scenario: SimScenario, n: int, i: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(scenario.seed) % 2**63, scenario.scenario_id, int(n), int(i)])


def _one_replicate(task):
    scenario, n, i, config = task
    x = core.sample(scenario.true_params, n, seed=replicate_seed(scenario, n, i))
    try:
        fit = fit_mle(ModelId.MLFR, x, config)
    except ModiError:
        return i, None, False
    if not fit.converged:
        return i, None, fit.boundary == "theta=inf"
    ident = fit.identified
    try:
        alpha = ident["theta"] ** (1.0 / scenario.true_params.beta)
    except OverflowError:
        alpha = math.inf
    return i, (ident["theta"], ident["a"], ident["b"], alpha), False


def worker_count() -> int:
    """Workers allowed by ``MODI_LFR_THREADS`` (unset or 0 means all cores)."""
    raw = os.environ.get("MODI_LFR_THREADS", "").strip()
    cores = os.cpu_count() or 1
    try:
        k = int(raw) if raw else 0
    except ValueError:
        k = 0
    return cores if k <= 0 else min(k, cores)


def run_simulation(scenario: SimScenario, config: FitConfig | None = None,
                   n_jobs: int | None = None) -> list[SimCell]:
    """Bias and MSE of the MLFR estimates for each sample size of ``scenario``.

    ``alpha_hat = theta_hat**(1/beta)`` uses the true ``beta`` so that it is
    comparable with the truth (``beta`` itself is not identified).
    Non-converged replicates are excluded from the averages and counted.
    Samples whose likelihood supremum is the plain LFR limit (no finite
    MLE) are among them and are also tallied in ``no_finite_mle``.
    """
    config = config or DEFAULT_SIM_FIT
    truth = np.array([scenario.true_params.theta, scenario.true_params.a,
                      scenario.true_params.b, scenario.true_params.alpha])
    jobs = worker_count() if n_jobs is None else max(1, int(n_jobs))
    cells = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for n in scenario.sample_sizes:
            tasks = [(scenario, n, i, config) for i in range(scenario.replicates)]
            if pool is None:
                results = list(map(_one_replicate, tasks))
            else:
                results = list(pool.map(_one_replicate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
            results.sort(key=lambda r: r[0])
            ok = np.array([r[1] for r in results if r[1] is not None], dtype=float).reshape(-1, 4)
            failures = scenario.replicates - ok.shape[0]
            no_mle = sum(1 for r in results if r[2])
            if failures > MAX_FAILURE_FRACTION * scenario.replicates:
                raise ScenarioInfeasibleError(
                    f"scenario {scenario.scenario_id}: {failures} of {scenario.replicates} "
                    f"replicates failed to converge at n={n}"
                )
            with np.errstate(over="ignore"):
                err = ok - truth
                bias = err.mean(axis=0)
                mse = (err**2).mean(axis=0)
            cells.append(SimCell(
                n=n,
                replicates=scenario.replicates,
                failures=failures,
                no_finite_mle=no_mle,
                bias=dict(zip(SIM_PARAMS, bias.tolist())),
                mse=dict(zip(SIM_PARAMS, mse.tolist())),
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    return cells


SIM_CSV_COLUMNS = ("n", "replicates", "failures", "no_finite_mle", "used") + tuple(
    f"{kind}_{name}" for name in SIM_PARAMS for kind in ("bias", "mse"))


def cells_to_csv(cells, scenario_id=None) -> str:
    buf = io.StringIO()
    cols = (("scenario",) if scenario_id is not None else ()) + SIM_CSV_COLUMNS
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for c in cells:
        row = c.row()
        if scenario_id is not None:
            row["scenario"] = scenario_id
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def cells_to_json(cells) -> str:
    return json.dumps([c.row() for c in cells], indent=2)


def curve_to_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for row in zip(*(table[c] for c in CURVE_COLUMNS)):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def reference_quantile_check(values) -> dict:
    """Quartiles under every numpy sample-quantile rule, for auditing the choice."""
    methods = ("inverted_cdf", "averaged_inverted_cdf", "closest_observation",
               "interpolated_inverted_cdf", "hazen", "weibull", "linear",
               "median_unbiased", "normal_unbiased")
    x = np.asarray(values, dtype=float)
    return {m: tuple(float(v) for v in np.percentile(x, [25, 75], method=m)) for m in methods}

