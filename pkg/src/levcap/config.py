"""JSON run configuration for the command line."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .levy_model import LevyModelError, LevyParams, MarketParams, calibrate_drift, laplace_exponent
from .mc_oracle import McConfig
from .valuation import CostTaxSpec, DebtSpec, ModelInstance, build_instance

FIXTURE_DIR = Path(__file__).parent / "fixtures"
ENV_CONFIG = "LEVCAP_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    market: MarketParams
    levy: LevyParams
    debt: DebtSpec
    costs: CostTaxSpec
    V0: float = 100.0
    P_grid: tuple[float, float, float] = (0.0, 100.0, 1.0)
    value_offsets: tuple[float, ...] = (-0.2, -0.1, 0.0, 0.1, 0.2)
    value_B: float | None = None
    value_V_max: float = 200.0
    value_points: int = 60
    validate_B: float | None = None
    mc: McConfig = field(default_factory=McConfig)
    source: str = "<dict>"

    @property
    def x(self) -> float:
        return math.log(self.V0)

    def instance(self, P: float | None = None) -> ModelInstance:
        debt = self.debt if P is None else DebtSpec(P=P, m=self.debt.m)
        return build_instance(self.levy, self.market, debt, self.costs)


def resolve_path(path: str | None) -> Path:
    """Explicit path, else $LEVCAP_CONFIG; bare fixture names resolve to bundled files."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
        if not path:
            raise ConfigError(f"no --config given and {ENV_CONFIG} is unset")
    p = Path(path)
    if p.exists():
        return p
    for cand in (FIXTURE_DIR / path, FIXTURE_DIR / f"{path}.json"):
        if cand.exists():
            return cand
    raise ConfigError(f"config file not found: {path}")


def _num(section: dict, key: str, where: str, default: Any = ...) -> float:
    where = f"{where}.{key}" if where else key
    if key not in section:
        if default is ...:
            raise ConfigError(f"{where}: required field missing")
        return default
    val = section[key]
    if val is None and default is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{where}: must be finite")
    return float(val)


def _section(raw: dict, key: str, required: bool = True) -> dict:
    sec = raw.get(key)
    if sec is None:
        if required:
            raise ConfigError(f"{key}: required section missing")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{key}: expected an object")
    return sec


def _build(where: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, LevyModelError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(raw: dict, source: str = "<dict>") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    m = _section(raw, "market")
    market = _build(
        "market",
        MarketParams,
        r=_num(m, "r", "market"),
        delta=_num(m, "delta", "market"),
        gamma_hat=_num(m, "gamma_hat", "market"),
        rho_hat=_num(m, "rho_hat", "market"),
    )

    lv = _section(raw, "levy")
    sigma, lam, beta = _num(lv, "sigma", "levy"), _num(lv, "lambda", "levy"), _num(lv, "beta", "levy")
    mu = _num(lv, "mu", "levy", None)
    if mu is None:
        levy = _build("levy", calibrate_drift, market=market, sigma=sigma, lam=lam, beta=beta)
    else:
        levy = _build("levy", LevyParams, mu=mu, sigma=sigma, lam=lam, beta=beta)
        gap = laplace_exponent(levy, 1.0) - (market.r - market.delta)
        if abs(gap) >= 1e-10:
            raise ConfigError(f"levy.mu: kappa(1) - (r - delta) = {gap:.3e}; the discounted asset is not a martingale")

    d = _section(raw, "debt")
    debt = _build("debt", DebtSpec, P=_num(d, "P", "debt"), m=_num(d, "m", "debt"))

    c = _section(raw, "costs")
    variant = c.get("variant", "scaled")
    tax = c.get("tax", "convex")
    if "v_T" in c and "c_tax" in c:
        raise ConfigError("costs: give either c_tax or v_T, not both")
    if "v_T" in c:
        v_T = _num(c, "v_T", "costs")
        if not v_T > 0:
            raise ConfigError("costs.v_T: must be > 0")
        c_tax = math.log(v_T)
    else:
        c_tax = _num(c, "c_tax", "costs")
    costs = _build(
        "costs",
        CostTaxSpec,
        variant=variant,
        eta0=_num(c, "eta0", "costs", 0.0),
        a=_num(c, "a", "costs", 0.0),
        b=_num(c, "b", "costs", 0.0),
        c_tax=c_tax,
        eta_const=_num(c, "eta_const", "costs", 0.0),
        tax=tax,
    )

    V0 = _num(raw, "V0", "", 100.0)
    if not V0 > 0:
        raise ConfigError("V0: must be > 0")

    ts = _section(raw, "two_stage", required=False)
    P_grid = (
        _num(ts, "P_min", "two_stage", 0.0),
        _num(ts, "P_max", "two_stage", 100.0),
        _num(ts, "P_step", "two_stage", 1.0),
    )
    if not (P_grid[0] >= 0 and P_grid[1] > P_grid[0] and P_grid[2] > 0):
        raise ConfigError("two_stage: need 0 <= P_min < P_max and P_step > 0")

    vs = _section(raw, "value", required=False)
    offsets = vs.get("offsets", [-0.2, -0.1, 0.0, 0.1, 0.2])
    if not isinstance(offsets, list) or not all(isinstance(o, (int, float)) for o in offsets):
        raise ConfigError("value.offsets: expected a list of numbers")

    va = _section(raw, "validate", required=False)
    mc_raw = _section(raw, "mc", required=False)
    mc = _build(
        "mc",
        McConfig,
        n_paths=int(_num(mc_raw, "n_paths", "mc", 200_000)),
        dt=_num(mc_raw, "dt", "mc", 1e-3),
        horizon=_num(mc_raw, "horizon", "mc", 200.0),
        seed=int(_num(mc_raw, "seed", "mc", 20240601)),
        bridge_correction=bool(mc_raw.get("bridge_correction", True)),
        max_step=_num(mc_raw, "max_step", "mc", 0.25),
    )

    return RunConfig(
        market=market,
        levy=levy,
        debt=debt,
        costs=costs,
        V0=V0,
        P_grid=P_grid,
        value_offsets=tuple(float(o) for o in offsets),
        value_B=_num(vs, "B", "value", None),
        value_V_max=_num(vs, "V_max", "value", 200.0),
        value_points=int(_num(vs, "points", "value", 60)),
        validate_B=_num(va, "B", "validate", None),
        mc=mc,
        source=source,
    )


def load_config(path: str | None) -> RunConfig:
    p = resolve_path(path)
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    return parse_config(raw, source=str(p))
