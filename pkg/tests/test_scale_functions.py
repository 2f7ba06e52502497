import math

import numpy as np
import pytest

from levcap.levy_model import laplace_exponent, laplace_exponent_prime
from levcap.mc_oracle import McConfig, simulate_functionals
from levcap.scale_functions import (
    ScaleFunctionWarning,
    W,
    W_prime,
    W_prime_0,
    Z,
    gamma_fn,
    make_evaluator,
    scaled_W,
    theta,
)

import oracles
from conftest import LEVY, make_instance

QS = (0.075, 0.275)


@pytest.mark.parametrize("q", QS)
def test_coefficients_positive_and_residues_consistent(q):
    ev = make_evaluator(LEVY, q)
    assert min(ev.coeffs) > 0
    assert ev.residues.sum() == pytest.approx(0.0, abs=1e-12)
    assert ev.residues[0] == pytest.approx(ev.c_total, rel=1e-12)


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("shift", [0.5, 1.0, 2.0])
@pytest.mark.filterwarnings("ignore::levcap.scale_functions.ScaleFunctionWarning")
def test_laplace_transform_of_W(q, shift):
    ev = make_evaluator(LEVY, q)
    s = ev.phi_q + shift
    # tail of e^{-sx}W(x) is below c_total e^{-shift x}/shift
    x_max = math.log(ev.c_total / (shift * 1e-12)) / shift
    got = oracles.laplace_W(ev, s, x_max)
    assert got == pytest.approx(1.0 / (laplace_exponent(LEVY, s) - q), rel=1e-6)


@pytest.mark.parametrize("q", QS)
def test_W_at_zero_and_slope(q):
    ev = make_evaluator(LEVY, q)
    assert W(ev, 0.0) == 0.0
    assert W(ev, -1.0) == 0.0
    assert W_prime_0(ev) == pytest.approx(2.0 / LEVY.sigma**2, rel=1e-12)
    assert W_prime(ev, 1e-9) == pytest.approx(50.0, rel=1e-6)


@pytest.mark.parametrize("q", QS)
def test_scaled_W_increases_to_limit(q):
    ev = make_evaluator(LEVY, q)
    xs = np.linspace(0.0, 40.0, 400)
    vals = np.array([scaled_W(ev, x) for x in xs])
    # strictly increasing until it saturates in double precision
    assert np.all(np.diff(vals[xs < 4.0]) > 0)
    assert np.all(np.diff(vals) >= 0)
    assert vals[-1] == pytest.approx(1.0 / laplace_exponent_prime(LEVY, ev.phi_q), abs=1e-6)


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
def test_dZ_equals_qW(q, x):
    ev = make_evaluator(LEVY, q)
    h = 1e-5
    fd = (Z(ev, x + h) - Z(ev, x - h)) / (2 * h)
    assert fd == pytest.approx(q * W(ev, x), rel=1e-6)


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("x", [0.2, 0.6, 1.2])
def test_theta_matches_derivative_of_scaled_W(q, x):
    ev = make_evaluator(LEVY, q)
    h = 1e-5
    fd = (scaled_W(ev, x + h) - scaled_W(ev, x - h)) / (2 * h)
    assert theta(ev, x) == pytest.approx(math.exp(ev.phi_q * x) * fd, rel=1e-6)


def test_theta_positive_and_decreasing_in_q():
    ev_r, ev_rm = make_evaluator(LEVY, 0.075), make_evaluator(LEVY, 0.275)
    rng = np.random.default_rng(1)
    for x in rng.uniform(1e-4, 8.0, 50):
        assert theta(ev_rm, x) > 0
        assert theta(ev_r, x) >= theta(ev_rm, x)
    assert theta(ev_r, 1e-6) - theta(ev_rm, 1e-6) < 1e-3


def test_theta_domain():
    with pytest.raises(ValueError):
        theta(make_evaluator(LEVY, 0.075), 0.0)


def test_overflow_diagnostic():
    ev = make_evaluator(LEVY, 0.075)
    with pytest.warns(ScaleFunctionWarning):
        W(ev, 61.0 / ev.phi_q)


def test_gamma_edges_and_bounds():
    ev = make_evaluator(LEVY, 0.275)
    assert gamma_fn(ev, LEVY, 0.0) == 0.0
    for y in (0.1, 1.0, 3.0):
        val = math.exp(y) - gamma_fn(ev, LEVY, y)
        assert 0.0 <= val <= 1.0


def test_gamma_against_monte_carlo():
    # gamma_term(x, B) = e^x - e^B Gamma(x - B); with B = 0, x = 1 it is e - Gamma(1)
    inst = make_instance()
    cfg = McConfig(n_paths=40_000, seed=11)
    est = simulate_functionals(inst, 1.0, 0.0, cfg)["Gamma_term"]
    closed = math.e - gamma_fn(inst.ev_rm, LEVY, 1.0)
    assert abs(est.z_score(closed)) < 3.0
