import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from levcap.levy_model import MarketParams, calibrate_drift
from levcap.valuation import CostTaxSpec, DebtSpec, build_instance

MARKET = MarketParams(r=0.075, delta=0.07, gamma_hat=0.35, rho_hat=0.08162)
LEVY = calibrate_drift(MARKET, sigma=0.2, lam=0.5, beta=9.0)
CASE1 = CostTaxSpec(variant="scaled", eta0=0.9, a=0.5, b=0.0, c_tax=5.0)
CASE2 = CostTaxSpec(variant="scaled", eta0=0.5, a=0.01, b=5.0, c_tax=0.0)
X0 = math.log(100.0)


def make_instance(costs=CASE1, P=50.0, m=0.2, levy=LEVY, market=MARKET):
    return build_instance(levy, market, DebtSpec(P=P, m=m), costs)


@pytest.fixture(scope="session")
def case1():
    return make_instance(CASE1)


@pytest.fixture(scope="session")
def case2():
    return make_instance(CASE2)
