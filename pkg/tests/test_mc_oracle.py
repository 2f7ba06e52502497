import dataclasses
import math

import numpy as np
import pytest

from levcap.mc_oracle import McConfig, martingale_check, path_seeds, simulate_functionals
from levcap.valuation import CostTaxSpec

from conftest import CASE1, X0, make_instance

SMALL = McConfig(n_paths=20_000, seed=5)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(n_paths=0)
    with pytest.raises(ValueError):
        McConfig(dt=0.0)
    with pytest.raises(ValueError):
        McConfig(dt=0.5, max_step=0.25)


def test_horizon_must_make_discount_negligible(case1):
    with pytest.raises(ValueError):
        simulate_functionals(case1, X0, 3.6, McConfig(n_paths=10, horizon=50.0))


def test_zero_payoffs_estimate_zero_exactly():
    # P = 0 kills f1, f2; eta0 = 0 kills the bankruptcy loss
    inst = make_instance(CostTaxSpec(eta0=0.0, a=0.5, b=0.0, c_tax=5.0), P=0.0)
    out = simulate_functionals(inst, X0, 3.6, McConfig(n_paths=2_000, seed=1))
    for k in ("Lambda_r", "Lambda_rm", "M1_rm", "M2_r"):
        assert out[k].mean == 0.0 and out[k].std_error == 0.0


def test_seed_determinism(case1):
    a = simulate_functionals(case1, X0, 3.61, dataclasses.replace(SMALL, n_paths=3_000))
    b = simulate_functionals(case1, X0, 3.61, dataclasses.replace(SMALL, n_paths=3_000))
    assert a == b


def test_path_seeds_stable_prefix():
    assert np.array_equal(path_seeds(9, 100)[:10], path_seeds(9, 10))


def test_equity_is_firm_minus_debt(case1):
    out = simulate_functionals(case1, X0, 3.61, dataclasses.replace(SMALL, n_paths=3_000))
    assert out["Equity"].mean == pytest.approx(out["Firm"].mean - out["Debt"].mean, abs=1e-9)


def test_martingale_property(case1):
    est = martingale_check(case1, X0)
    assert abs(est.z_score(100.0)) < 3.0


def test_far_barrier_has_no_passage(case1):
    out = simulate_functionals(case1, X0, X0 - 30.0, McConfig(n_paths=2_000, seed=2))
    assert out["Lambda_r"].mean == 0.0


def test_halving_dt_changes_little(case1):
    base = McConfig(n_paths=40_000, dt=2e-3, seed=17)
    coarse = simulate_functionals(case1, X0, 3.61, base)
    fine = simulate_functionals(case1, X0, 3.61, dataclasses.replace(base, dt=1e-3))
    # the two runs share seeds, so their difference is mostly discretisation
    for k in ("Equity", "Debt", "Firm"):
        assert abs(fine[k].mean - coarse[k].mean) < fine[k].std_error


def test_matches_closed_forms_at_moderate_size(case1):
    from levcap import valuation as val

    out = simulate_functionals(case1, X0, 3.61, McConfig(n_paths=40_000, seed=23))
    closed = {
        "Lambda_r": val.lambda_fn(case1, case1.r, X0, 3.61),
        "M2_r": val.M_fn(case1, case1.r, 2, X0, 3.61),
        "Equity": val.equity(case1, X0, 3.61),
    }
    for k, v in closed.items():
        assert abs(out[k].z_score(v)) < 3.0, k
