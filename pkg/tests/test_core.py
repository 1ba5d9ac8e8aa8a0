import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

import oracles
from conftest import SCENARIO_PARAMS, random_params
from modi_lfr import MlfrParams, cdf, hazard, log_pdf, median, pdf, quantile, sample, survival
from modi_lfr.exceptions import DomainError, InvalidParameterError
from modi_lfr.family import MEParams, MRParams, get_model

pos = st.floats(min_value=1e-3, max_value=50.0, allow_nan=False)
rate = st.floats(min_value=1e-3, max_value=5.0, allow_nan=False)


@st.composite
def mlfr_params(draw, edges=True):
    alpha, beta = draw(pos), draw(st.floats(min_value=0.05, max_value=5.0))
    assume(1e-8 < alpha**beta < 1e8)
    a, b = draw(rate), draw(rate)
    if edges:
        edge = draw(st.sampled_from(["none", "a0", "b0"]))
        a = 0.0 if edge == "a0" else a
        b = 0.0 if edge == "b0" else b
    return MlfrParams(alpha, beta, a, b)


def ulp_gap(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    scale = np.maximum(np.spacing(np.abs(x)), np.spacing(np.abs(y)))
    return np.abs(x - y) / scale


# -- parameters -------------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    (0, 1, 1, 1), (-1, 1, 1, 1), (1, 0, 1, 1), (1, 1, -0.1, 1), (1, 1, 0, -1),
    (1, 1, 0, 0), (math.nan, 1, 1, 1), (1, 1, math.inf, 1), (1e10, 40, 1, 1),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(InvalidParameterError):
        MlfrParams(*bad)


def test_theta_accessor_and_from_theta():
    p = MlfrParams(4.0, 0.5, 1, 1)
    assert p.theta == 2.0
    q = MlfrParams.from_theta(2.0, 1, 1, beta=0.5)
    assert q.alpha == pytest.approx(4.0, rel=1e-15)


# -- cdf ----------------------------------------------------------------------------

@given(mlfr_params())
def test_cdf_at_origin_is_zero(p):
    assert cdf(p, 0.0) == 0.0


def test_cdf_theta_one_half_baseline():
    p = MlfrParams(1, 1, 1, 0)
    assert cdf(p, math.log(2)) == pytest.approx(2 / 3, rel=1e-15)


def test_cdf_at_bladder_median_matches_extended_precision(bladder):
    p = MlfrParams(0.0145, 0.6912, 0.0029, 0.0015)
    x = 6.395
    expected = float(oracles.mp_cdf(*p.as_tuple(), x))
    assert cdf(p, x) == pytest.approx(expected, rel=1e-13)
    # the printed estimates put the sample median close to the middle of the fitted law
    assert abs(expected - 0.5) < 0.05
    assert float(np.median(bladder.values)) == pytest.approx(6.395, abs=1e-12)


def test_negative_x_convention():
    p = SCENARIO_PARAMS[1]
    assert cdf(p, -1.0) == 0.0 and survival(p, -1.0) == 1.0 and pdf(p, -1.0) == 0.0


@given(mlfr_params(), st.lists(st.floats(0, 40), min_size=2, max_size=30))
def test_cdf_monotone(p, xs):
    v = cdf(p, np.sort(xs))
    assert np.all(np.diff(v) >= 0)
    assert np.all((v >= 0) & (v <= 1))


def test_cdf_tends_to_one():
    for p in SCENARIO_PARAMS.values():
        assert cdf(p, 1e3) == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_cdf_pdf_against_mpmath(seed):
    rng = np.random.default_rng(seed)
    for p in random_params(rng, 4):
        for x in rng.exponential(2.0, 5):
            assert cdf(p, x) == pytest.approx(float(oracles.mp_cdf(*p.as_tuple(), x)), rel=1e-12, abs=1e-300)
            assert pdf(p, x) == pytest.approx(float(oracles.mp_pdf(*p.as_tuple(), x)), rel=1e-12, abs=1e-300)


# -- pdf and log-pdf ----------------------------------------------------------------

@given(mlfr_params(edges=False))
def test_pdf_at_origin(p):
    assert pdf(p, 0.0) == pytest.approx(p.a * (1 + p.theta) / p.theta, rel=1e-14)


def test_pdf_zero_at_origin_when_a_zero():
    p = MlfrParams(1, 1, 0, 2)
    assert pdf(p, 0.0) == 0.0
    assert log_pdf(p, 0.0) == -math.inf


def test_pdf_integrates_to_one_scenario_one():
    p = SCENARIO_PARAMS[1]
    val, err = integrate.quad(lambda x: float(pdf(p, x)), 0, np.inf, epsabs=1e-12, epsrel=1e-12)
    assert abs(val - 1) < 1e-8


def test_pdf_normalization_random_vectors():
    rng = np.random.default_rng(2024)
    for p in random_params(rng, 50):
        hi = float(quantile(p, 1 - 1e-15))
        val, _ = integrate.quad(lambda x: float(pdf(p, x)), 0, hi, epsabs=1e-12, epsrel=1e-12, limit=200,
                                points=[float(quantile(p, u)) for u in (0.5, 0.9, 0.999)])
        assert abs(val - 1) < 1e-8


def test_exp_log_pdf_equals_pdf_on_random_inputs():
    rng = np.random.default_rng(7)
    for p in random_params(rng, 100):
        x = float(quantile(p, rng.uniform(0.001, 0.999)))
        assert math.exp(log_pdf(p, x)) == pytest.approx(pdf(p, x), rel=1e-12)


def test_log_pdf_far_tail_no_overflow():
    p = MlfrParams(1, 1, 1, 1)
    v = log_pdf(p, 1e6)
    assert np.isfinite(v) and v < 0
    expected = float(oracles.mp_logpdf(1, 1, 1, 1, 10**6))
    assert v == pytest.approx(expected, rel=1e-14)


# -- survival and hazard --------------------------------------------------------------

@given(mlfr_params(), st.floats(0, 30))
def test_complement_identity(p, x):
    assert survival(p, 0.0) == 1.0
    assert abs(survival(p, x) + cdf(p, x) - 1) < 1e-12


def test_survival_exponential_case():
    assert survival(MlfrParams(1, 1, 1, 0), math.log(2)) == pytest.approx(1 / 3, rel=1e-15)


@given(mlfr_params(edges=False))
def test_hazard_at_origin(p):
    assert hazard(p, 0.0) == pytest.approx(p.a * (p.theta + 1) / p.theta, rel=1e-14)


def test_hazard_approaches_baseline_rate():
    p = MlfrParams(2, 1, 0.5, 0.3)
    x = np.array([10.0, 50.0, 200.0])
    ratio = hazard(p, x) / (p.a + p.b * x)
    assert abs(ratio[-1] - 1) < 1e-12
    assert np.all(np.diff(np.abs(ratio - 1)) <= 0)


@given(mlfr_params(), st.floats(1e-6, 60))
def test_hazard_times_survival_is_density(p, x):
    s = survival(p, x)
    assume(s > 1e-300)
    assert hazard(p, x) * s == pytest.approx(pdf(p, x), rel=1e-10, abs=1e-300)


# -- quantile ---------------------------------------------------------------------------

def test_quantile_at_zero():
    assert quantile(SCENARIO_PARAMS[2], 0.0) == 0.0


@pytest.mark.parametrize("sid", [1, 2, 3])
def test_median_closed_form(sid):
    p = SCENARIO_PARAMS[sid]
    th = p.theta
    m = (-p.a + math.sqrt(p.a**2 + 2 * p.b * math.log((2 * th + 1) / (th + 1)))) / p.b
    assert median(p) == pytest.approx(m, rel=1e-13)
    assert quantile(p, 0.5) == pytest.approx(m, rel=1e-13)


@pytest.mark.parametrize("sid", [1, 2, 3])
def test_roundtrip_scenarios(sid):
    p = SCENARIO_PARAMS[sid]
    u = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(cdf(p, quantile(p, u)) - u)) < 1e-10


@given(mlfr_params(), st.floats(0, 1 - 1e-12))
def test_roundtrip_property(p, u):
    assert abs(cdf(p, quantile(p, u)) - u) < 1e-10


@given(mlfr_params(), st.lists(st.floats(0, 1 - 1e-12), min_size=2, max_size=20))
def test_quantile_monotone(p, us):
    q = quantile(p, np.sort(us))
    assert np.all(np.diff(q) >= 0)


def test_quantile_matches_extended_precision():
    p = MlfrParams(0.7, 1.3, 0.2, 0.05)
    for u in (1e-9, 0.3, 0.9, 1 - 1e-9):
        assert quantile(p, u) == pytest.approx(float(oracles.mp_quantile(*p.as_tuple(), u)), rel=1e-12)


@pytest.mark.parametrize("u", [-0.1, 1.0, 1.5, math.nan])
def test_quantile_domain(u):
    with pytest.raises(DomainError):
        quantile(SCENARIO_PARAMS[1], u)


# -- sampling --------------------------------------------------------------------------

def test_sample_ks_distance():
    p = SCENARIO_PARAMS[3]
    x = np.sort(sample(p, 100_000, seed=11))
    assert oracles.ks_distance(cdf(p, x)) < 0.01


def test_sample_b_zero_matches_modi_exponential():
    p = MlfrParams(2.0, 0.7, 0.4, 0.0)
    me = MEParams(2.0, 0.7, 0.4)
    # same uniforms; the two inverses are algebraically equal and differ only by rounding
    np.testing.assert_allclose(sample(p, 50, seed=3), get_model("me").sample(me, 50, seed=3), rtol=1e-14)


def test_sample_deterministic():
    p = SCENARIO_PARAMS[1]
    a, b = sample(p, 5, seed=123), sample(p, 5, seed=123)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample(p, 5, seed=124))


# -- structural invariants ----------------------------------------------------------------

def _collapse_pairs():
    rng = np.random.default_rng(99)
    pairs = []
    for _ in range(25):
        theta = float(np.exp(rng.uniform(-4, 4)))
        b1, b2 = float(np.exp(rng.uniform(-1, 1))), float(np.exp(rng.uniform(-1, 1)))
        a, b = float(np.exp(rng.uniform(-3, 1))), float(np.exp(rng.uniform(-3, 1)))
        p1 = MlfrParams(theta ** (1 / b1), b1, a, b)
        # second pair built from the first's theta so both share alpha**beta to rounding
        p2 = MlfrParams(p1.theta ** (1 / b2), b2, a, b)
        if p1.theta == p2.theta:
            pairs.append((p1, p2))
    return pairs


def test_theta_collapse_within_four_ulps():
    pairs = _collapse_pairs()
    assert len(pairs) >= 10
    x = np.linspace(0, 10, 201)
    u = np.linspace(0, 0.999, 201)
    for p1, p2 in pairs:
        assert np.max(ulp_gap(cdf(p1, x), cdf(p2, x))) <= 4
        assert np.max(ulp_gap(pdf(p1, x), pdf(p2, x))) <= 4
        assert np.max(ulp_gap(quantile(p1, u), quantile(p2, u))) <= 4


@given(st.floats(0.01, 100), st.floats(0.01, 5), st.floats(0.01, 5))
def test_b_zero_reduces_to_modi_exponential(alpha, beta, a):
    assume(1e-6 < alpha**beta < 1e6)
    x = np.linspace(0.01, 20 / a, 50)
    got = pdf(MlfrParams(alpha, beta, a, 0.0), x)
    ref = np.array([float(oracles.mp_me_pdf(alpha, beta, a, v)) for v in x])
    ok = ref > 1e-300
    np.testing.assert_allclose(got[ok], ref[ok], rtol=1e-12)


@given(st.floats(0.01, 100), st.floats(0.01, 5), st.floats(0.01, 5))
def test_a_zero_reduces_to_modi_rayleigh(alpha, beta, b):
    assume(1e-6 < alpha**beta < 1e6)
    sigma = 1 / math.sqrt(b)
    x = np.linspace(0.01, 8 * sigma, 50)
    got = pdf(MlfrParams(alpha, beta, 0.0, b), x)
    ref = np.array([float(oracles.mp_mr_pdf(alpha, beta, sigma, v)) for v in x])
    ok = ref > 1e-300
    np.testing.assert_allclose(got[ok], ref[ok], rtol=1e-12)
    np.testing.assert_allclose(got, get_model("mr").pdf(MRParams(alpha, beta, sigma), x), rtol=1e-12)


def test_cdf_monotone_to_the_last_ulp():
    for p in SCENARIO_PARAMS.values():
        x = np.linspace(0.0, 40.0, 8001)
        assert np.all(np.diff(cdf(p, x)) >= 0)
