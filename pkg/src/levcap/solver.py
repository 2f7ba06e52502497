"""Optimal bankruptcy level, two-stage leverage choice and parameter sweeps."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import valuation as val
from .valuation import ModelInstance

log = logging.getLogger(__name__)

TOL_ROOT = 1e-10
TOL_WIDTH = 1e-10
BRACKET_LIMIT = 50.0
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    pass


class NoSignChangeError(SolverError):
    """K1 keeps one sign on the largest search bracket."""

    def __init__(self, lo: float, hi: float, k_lo: float, k_hi: float):
        self.lo, self.hi, self.k_lo, self.k_hi = lo, hi, k_lo, k_hi
        super().__init__(f"NO_SIGN_CHANGE: K1({lo:g})={k_lo:.6g}, K1({hi:g})={k_hi:.6g}")


@dataclass
class Values:
    equity: float
    debt: float
    firm: float


@dataclass
class SolveResult:
    B_star: float | None
    K1_residual: float
    K1_monotone_on_grid: bool
    K2_nonneg_above_root: bool
    values: Values | None = None
    x: float | None = None

    @property
    def bankruptcy_asset_level(self) -> float | None:
        return None if self.B_star is None else math.exp(self.B_star)

    @property
    def status(self) -> str:
        if self.B_star is None:
            return "UNLEVERED"
        if self.K1_monotone_on_grid and self.K2_nonneg_above_root:
            return "OPTIMAL"
        return "CANDIDATE"


def values_at(inst: ModelInstance, x: float, B: float | None) -> Values:
    """E, D, V at log-asset x with bankruptcy level B.

    ``B=None`` is the unlevered firm; ``B >= x`` means immediate bankruptcy.
    """
    if B is None or inst.debt.P == 0:
        return Values(equity=math.exp(x), debt=0.0, firm=math.exp(x))
    if B >= x:
        left = math.exp(x) - val.eta(inst.costs, x)
        return Values(equity=0.0, debt=left, firm=left)
    return Values(equity=val.equity(inst, x, B), debt=val.debt(inst, x, B), firm=val.firm(inst, x, B))


def find_root_K1(inst: ModelInstance, center: float = 0.0) -> float:
    """Bisection for K1(B) = 0 on a bracket grown geometrically around ``center``."""
    lo, hi = center - 10.0, center
    k = lambda B: val.K1(inst, B)
    k_lo, k_hi = k(lo), k(hi)
    step = hi - lo
    while k_lo > 0 or k_hi < 0:
        if (k_lo > 0 and lo <= -BRACKET_LIMIT) or (k_hi < 0 and hi >= BRACKET_LIMIT):
            raise NoSignChangeError(lo, hi, k_lo, k_hi)
        if k_lo > 0:
            lo = max(lo - step, -BRACKET_LIMIT)
            k_lo = k(lo)
        if k_hi < 0:
            hi = min(hi + step, BRACKET_LIMIT)
            k_hi = k(hi)
        step *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        k_mid = k(mid)
        if k_mid == 0:
            return mid
        if k_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < TOL_WIDTH and abs(k_mid) < TOL_ROOT:
            break
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def condition_report(inst: ModelInstance, B_star: float, n_grid: int = 400) -> tuple[bool, bool]:
    """Grid checks: K1 strictly increasing on [B*-5, B*+5] and K2 >= 0 on [B*, B*+10]."""
    grid = np.linspace(B_star - 5.0, B_star + 5.0, n_grid)
    k1 = np.array([val.K1(inst, B) for B in grid])
    monotone = bool(np.all(np.diff(k1) > 0))
    k2 = np.array([val.K2(inst, B) for B in np.linspace(B_star, B_star + 10.0, n_grid)])
    return monotone, bool(np.all(k2 >= 0))


def solve_bankruptcy_level(inst: ModelInstance, x: float | None = None, check: bool = True) -> SolveResult:
    """Root B* of K1 with the sufficient-condition report and, if x is given, E/D/V at x."""
    if inst.debt.P == 0:
        values = values_at(inst, x, None) if x is not None else None
        return SolveResult(None, 0.0, True, True, values=values, x=x)
    B_star = find_root_K1(inst, center=x if x is not None else 0.0)
    residual = val.K1(inst, B_star)
    mono, k2_ok = condition_report(inst, B_star) if check else (False, False)
    values = values_at(inst, x, B_star) if x is not None else None
    return SolveResult(B_star, residual, mono, k2_ok, values=values, x=x)


# ---------------------------------------------------------------- limited liability


@dataclass
class LiabilityReport:
    B_star: float
    min_equity_at_optimum: float
    feasible_at_optimum: bool
    violations_below: dict[float, float]
    dominated_above: dict[float, bool]

    @property
    def ok(self) -> bool:
        return (
            self.feasible_at_optimum
            and all(v < 0 for v in self.violations_below.values())
            and all(self.dominated_above.values())
        )


def _x_points(B: float, x_grid: np.ndarray) -> np.ndarray:
    near = B + np.geomspace(1e-4, 0.5, 60)
    return np.unique(np.concatenate([near, np.asarray(x_grid, float)]))


def verify_limited_liability(
    inst: ModelInstance,
    result: SolveResult,
    x_grid: np.ndarray,
    offsets_below: tuple[float, ...] = (0.1, 0.2),
    offsets_above: tuple[float, ...] = (0.1, 0.2),
) -> LiabilityReport:
    """Check E(.; B*) >= 0, E(.; B) < 0 somewhere for B < B*, and E(.; B) <= E(.; B*) for B > B*."""
    B_star = result.B_star
    if B_star is None:
        raise ValueError("unlevered result has no bankruptcy level")
    xs = _x_points(B_star, x_grid)
    xs = xs[xs > B_star]
    e_star = np.array([val.equity(inst, x, B_star) for x in xs])
    below = {}
    for off in offsets_below:
        B = B_star - off
        pts = _x_points(B, x_grid)
        pts = pts[pts > B]
        below[off] = float(min(val.equity(inst, x, B) for x in pts))
    above = {}
    for off in offsets_above:
        B = B_star + off
        mask = xs > B
        e_b = np.array([val.equity(inst, x, B) for x in xs[mask]])
        above[off] = bool(np.all(e_b <= e_star[mask] + 1e-9))
    min_e = float(e_star.min())
    return LiabilityReport(B_star, min_e, min_e >= -1e-9, below, above)


# ---------------------------------------------------------------- two-stage problem


@dataclass
class TwoStageResult:
    P_star: float
    B_star_at_P_star: float | None
    firm_value: float
    equity_value: float
    debt_value: float
    sweep: list[tuple[float, float | None, float]] = field(default_factory=list)
    failures: list[tuple[float, str]] = field(default_factory=list)


def firm_value_at_face(template: ModelInstance, x: float, P: float) -> tuple[float | None, Values]:
    inst = template.with_debt(P)
    if P == 0:
        return None, values_at(inst, x, None)
    B = find_root_K1(inst, center=x)
    return B, values_at(inst, x, B)


def golden_section_max(f, a: float, b: float, tol: float) -> float:
    """Maximiser of a unimodal f on [a, b] to within tol."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def solve_two_stage(template: ModelInstance, x: float, P_grid, tol_P: float = 1e-3) -> TwoStageResult:
    """Maximise V(x; B*(P), P) over the face value P.

    Concavity in P is not assumed: the grid picks the best cell and
    golden-section search refines inside the two neighbouring cells.
    """
    P_grid = np.sort(np.asarray(P_grid, float))
    sweep, failures = [], []
    for P in P_grid:
        try:
            B, v = firm_value_at_face(template, x, float(P))
        except SolverError as exc:
            failures.append((float(P), str(exc)))
            log.warning("two-stage: P=%g skipped: %s", P, exc)
            continue
        sweep.append((float(P), B, v.firm))
    if not sweep:
        raise SolverError("two-stage: every grid point failed")
    firms = np.array([s[2] for s in sweep])
    best = float(firms.max())
    # smallest P among the (numerically) tied maxima
    i = int(np.flatnonzero(firms >= best - 1e-12 * abs(best))[0])
    lo = sweep[max(i - 1, 0)][0]
    hi = sweep[min(i + 1, len(sweep) - 1)][0]
    P_star = sweep[i][0]
    if hi > lo:
        cand = golden_section_max(lambda P: firm_value_at_face(template, x, P)[1].firm, lo, hi, tol_P)
        if firm_value_at_face(template, x, cand)[1].firm > best:
            P_star = cand
    B, v = firm_value_at_face(template, x, P_star)
    return TwoStageResult(P_star, B, v.firm, v.equity, v.debt, sweep, failures)


# ---------------------------------------------------------------- sweeps

SWEEP_COLUMNS = ("knob", "B_star", "bankruptcy_level", "equity", "debt", "firm", "debt_to_equity", "P_star")


def _sweep_point(args) -> dict:
    template, x, knob, value, mode, P_grid = args
    field_name = {"a": "a", "c": "c_tax", "c_tax": "c_tax"}[knob]
    inst = template.with_costs(**{field_name: float(value)})
    row = {"knob": float(value)}
    try:
        if mode == "two_stage":
            ts = solve_two_stage(inst, x, P_grid)
            B, v, P_star = ts.B_star_at_P_star, Values(ts.equity_value, ts.debt_value, ts.firm_value), ts.P_star
        else:
            res = solve_bankruptcy_level(inst, x, check=False)
            B, v, P_star = res.B_star, res.values, None
    except SolverError as exc:
        row["error"] = str(exc)
        return row
    row.update(
        B_star=B,
        bankruptcy_level=None if B is None else math.exp(B),
        equity=v.equity,
        debt=v.debt,
        firm=v.firm,
        debt_to_equity=v.debt / v.equity if v.equity > 0 else math.inf,
        P_star=P_star,
    )
    return row


def sweep_scale_effects(
    template: ModelInstance,
    x: float,
    knob: str,
    values,
    mode: str = "fixed_P",
    P_grid=None,
    workers: int = 1,
) -> list[dict]:
    """Rows of (knob, B*, e^B*, E, D, V, D/E[, P*]) ordered by knob value.

    ``mode="fixed_P"`` keeps the template's face value; ``"two_stage"``
    re-optimises P at every knob value. Failed points carry an ``error``
    entry instead of values.
    """
    if knob not in ("a", "c", "c_tax"):
        raise ValueError(f"knob must be 'a' or 'c', got {knob!r}")
    if mode not in ("fixed_P", "two_stage"):
        raise ValueError(f"mode must be 'fixed_P' or 'two_stage', got {mode!r}")
    if P_grid is None:
        P_grid = np.arange(0.0, 101.0, 1.0)
    jobs = [(template, x, knob, float(v), mode, P_grid) for v in sorted(values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]
