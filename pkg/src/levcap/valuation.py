"""Equity, debt and firm values with asset-dependent bankruptcy costs and tax benefits.

All levels (x, B, b, c_tax) are log-asset values. Bankruptcy at level B
is the first passage of X below B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

from .levy_model import LevyParams, MarketParams, laplace_exponent
from .scale_functions import ScaleEvaluator, W, Z, gamma_fn, make_evaluator, theta

_POLE_TOL = 1e-8
_POLE_STEP = 1e-5


@dataclass(frozen=True)
class CostTaxSpec:
    """Bankruptcy-loss and tax-rebate shapes.

    ``variant="scaled"``: loss fraction eta0 * min(1, exp(-a (x - b))).
    ``variant="constant_eta"``: absolute loss ``eta_const`` at every level.
    ``tax="convex"``: rebate rate P gamma rho min(exp(x - c_tax), 1).
    ``tax="cutoff"``: rebate rate P gamma rho 1{x >= c_tax} (c_tax = log v_T).
    """

    variant: Literal["scaled", "constant_eta"] = "scaled"
    eta0: float = 0.0
    a: float = 0.0
    b: float = 0.0
    c_tax: float = 0.0
    eta_const: float = 0.0
    tax: Literal["convex", "cutoff"] = "convex"

    def __post_init__(self) -> None:
        if self.variant not in ("scaled", "constant_eta"):
            raise ValueError(f"unknown cost variant {self.variant!r}")
        if self.tax not in ("convex", "cutoff"):
            raise ValueError(f"unknown tax shape {self.tax!r}")
        if self.variant == "scaled":
            if not 0 <= self.eta0 <= 1:
                raise ValueError(f"eta0 must lie in [0, 1], got {self.eta0}")
            if not 0 <= self.a <= 1:
                raise ValueError(f"a must lie in [0, 1], got {self.a}")
        elif not self.eta_const > 0:
            raise ValueError(f"eta_const must be > 0, got {self.eta_const}")


@dataclass(frozen=True)
class DebtSpec:
    P: float
    m: float

    def __post_init__(self) -> None:
        if self.P < 0:
            raise ValueError(f"face value P must be >= 0, got {self.P}")
        if not self.m > 0:
            raise ValueError(f"maturity rate m must be > 0, got {self.m}")

    @property
    def p(self) -> float:
        return self.m * self.P


@dataclass(frozen=True)
class ModelInstance:
    levy: LevyParams
    market: MarketParams
    debt: DebtSpec
    costs: CostTaxSpec
    ev_r: ScaleEvaluator = field(repr=False)
    ev_rm: ScaleEvaluator = field(repr=False)

    @property
    def r(self) -> float:
        return self.market.r

    @property
    def m(self) -> float:
        return self.debt.m

    def evaluator(self, q: float) -> ScaleEvaluator:
        if q == self.ev_r.q:
            return self.ev_r
        if q == self.ev_rm.q:
            return self.ev_rm
        raise ValueError(f"no scale evaluator for q={q}; have r={self.ev_r.q}, r+m={self.ev_rm.q}")

    def with_debt(self, P: float) -> "ModelInstance":
        return replace(self, debt=DebtSpec(P=P, m=self.debt.m))

    def with_costs(self, **changes) -> "ModelInstance":
        return replace(self, costs=replace(self.costs, **changes))


def build_instance(levy: LevyParams, market: MarketParams, debt: DebtSpec, costs: CostTaxSpec) -> ModelInstance:
    return ModelInstance(
        levy=levy,
        market=market,
        debt=debt,
        costs=costs,
        ev_r=make_evaluator(levy, market.r),
        ev_rm=make_evaluator(levy, market.r + debt.m),
    )


# ---------------------------------------------------------------- cost and tax shapes


def eta_bar(spec: CostTaxSpec, x: float) -> float:
    if spec.variant == "constant_eta":
        return spec.eta_const * math.exp(-x)
    return spec.eta0 * min(1.0, math.exp(-spec.a * (x - spec.b)))


def eta(spec: CostTaxSpec, x: float) -> float:
    if spec.variant == "constant_eta":
        return spec.eta_const
    return spec.eta0 * math.exp(min(x, (1.0 - spec.a) * x + spec.a * spec.b))


def eta_prime(spec: CostTaxSpec, x: float) -> float:
    # right derivative at the kink x = b
    if spec.variant == "constant_eta":
        return 0.0
    if x >= spec.b:
        return spec.eta0 * (1.0 - spec.a) * math.exp((1.0 - spec.a) * x + spec.a * spec.b)
    return spec.eta0 * math.exp(x)


def f1(debt: DebtSpec, market: MarketParams) -> float:
    """Coupon plus principal flow P rho + p."""
    return debt.P * market.rho_hat + debt.p


def f2(spec: CostTaxSpec, debt: DebtSpec, market: MarketParams, x: float) -> float:
    full = debt.P * market.gamma_hat * market.rho_hat
    if spec.tax == "cutoff":
        return full if x >= spec.c_tax else 0.0
    return full * min(math.exp(x - spec.c_tax), 1.0)


# ---------------------------------------------------------------- G, Q, H, J, K


def G1(inst: ModelInstance, B: float | None = None) -> float:
    """int_0^inf exp(-Phi(r+m) y) f1(y + B) dy; f1 is constant so B is irrelevant."""
    return inst.debt.P * (inst.market.rho_hat + inst.m) / inst.ev_rm.phi_q


def G2(inst: ModelInstance, B: float, q: float | None = None) -> float:
    """int_0^inf exp(-Phi(q) y) f2(y + B) dy, with q = r unless given."""
    ev = inst.ev_r if q is None else inst.evaluator(q)
    phi_q = ev.phi_q
    if abs(phi_q - 1.0) < 1e-10:
        raise ZeroDivisionError("G2 is singular at Phi(q) = 1")
    spec = inst.costs
    full = inst.debt.P * inst.market.gamma_hat * inst.market.rho_hat
    d = max(spec.c_tax - B, 0.0)
    tail = math.exp(-phi_q * d) / phi_q
    if spec.tax == "cutoff":
        return full * tail
    ramp = math.exp(B - spec.c_tax) * -math.expm1(-(phi_q - 1.0) * d) / (phi_q - 1.0)
    return full * (ramp + tail)


def _q_scaled(lam: float, beta: float, eta0: float, a: float, bt: float, zeta: float, l: float) -> float:
    el_zb = 0.0 if math.isinf(l) else math.exp(-l * (zeta + beta))
    el_1b = 0.0 if math.isinf(l) else math.exp(-l * (1.0 + beta))
    el_z1 = 0.0 if math.isinf(l) else math.exp(-(zeta - 1.0) * l)
    lb = lam * beta

    first = lb / (zeta - 1.0) * (
        math.exp(-bt * (1.0 + beta)) / (1.0 + beta) * (1.0 - el_1b)
        - math.exp(-bt * (zeta + beta) + (zeta - 1.0) * bt) / (zeta + beta) * (1.0 - el_zb)
        + 1.0 / (1.0 + beta) * math.exp(-bt * (1.0 + beta)) * el_1b * (1.0 - el_z1)
    )
    second = lb / (zeta - 1.0 + a) * (
        (math.exp(-a * bt) - math.exp(-bt * (beta + 1.0))) / (beta + 1.0 - a)
        + (math.exp(-bt * (beta + 1.0)) - el_zb * math.exp(-bt * (zeta + beta) + bt * (zeta - 1.0))) / (zeta + beta)
        + el_zb * math.exp(-bt * (beta + 1.0 - a) - a * bt) / (beta + 1.0 - a)
    )
    third = -lb * math.exp(-a * bt) / (zeta - 1.0 + a) * (
        (1.0 - el_zb) / (zeta + beta) + el_zb / (1.0 - a + beta)
    )
    return eta0 * (first + second + third)


def Q_kernel(inst: ModelInstance, B: float, zeta: float, l: float) -> float:
    """Q(B; zeta, l) = int Pi(du) int_0^{u ^ l} exp(-(zeta-1) z - u) eta_bar(B - u + z) dz."""
    if not l > 0:
        if l == 0:
            return 0.0
        raise ValueError(f"l must be > 0, got {l}")
    lam, beta = inst.levy.lam, inst.levy.beta
    spec = inst.costs
    if zeta + beta <= 0 and math.isinf(l):
        raise ValueError("Q diverges for l = inf when zeta <= -beta")
    if spec.variant == "constant_eta":
        # eta_bar(w) = eta_c e^{-w}: the integrand collapses to e^{-B} e^{-zeta z}
        el = 0.0 if math.isinf(l) else math.exp(-(zeta + beta) * l)
        return spec.eta_const * math.exp(-B) * lam * (1.0 - el) / (zeta + beta)
    bt = max(B - spec.b, 0.0)
    args = (lam, beta, spec.eta0, spec.a, bt)
    if abs(zeta - 1.0) < _POLE_TOL or abs(zeta - 1.0 + spec.a) < _POLE_TOL:
        # removable pole: symmetric average of the neighbours
        return 0.5 * (_q_scaled(*args, zeta - _POLE_STEP, l) + _q_scaled(*args, zeta + _POLE_STEP, l))
    return _q_scaled(*args, zeta, l)


def H_kernel(inst: ModelInstance, q: float, B: float) -> float:
    """H(B) = int Pi(du) int_0^u exp(-Phi(q) z) [eta(B) - eta(B - u + z)] dz."""
    ev = inst.evaluator(q)
    lam, beta = inst.levy.lam, inst.levy.beta
    if lam == 0:
        return 0.0
    if inst.costs.variant == "constant_eta":
        return 0.0
    return lam * eta(inst.costs, B) / (ev.phi_q + beta) - math.exp(B) * Q_kernel(inst, B, ev.phi_q, math.inf)


def J_kernel(inst: ModelInstance, B: float) -> float:
    r, rm = inst.r, inst.r + inst.m
    coef = rm / inst.ev_rm.phi_q - r / inst.ev_r.phi_q
    return coef * eta(inst.costs, B) - (H_kernel(inst, r, B) - H_kernel(inst, rm, B))


def J_kernel_alt(inst: ModelInstance, B: float) -> float:
    """Second representation: sigma^2 (Phi(r+m) - Phi(r)) eta(B) / 2 plus a Pi double integral."""
    phi_r, phi_rm = inst.ev_r.phi_q, inst.ev_rm.phi_q
    diffusive = 0.5 * inst.levy.sigma**2 * (phi_rm - phi_r) * eta(inst.costs, B)
    if inst.levy.lam == 0:
        return diffusive
    jumps = math.exp(B) * (Q_kernel(inst, B, phi_r, math.inf) - Q_kernel(inst, B, phi_rm, math.inf))
    return diffusive + jumps


def _ratio(inst: ModelInstance, ev: ScaleEvaluator) -> float:
    # (kappa(1) - q) / (1 - Phi(q))
    return (laplace_exponent(inst.levy, 1.0) - ev.q) / (1.0 - ev.phi_q)


def small_j(inst: ModelInstance) -> float:
    """sigma^2 (Phi(r+m) - Phi(r))/2 + int Pi(du) e^{-u} [(1 - e^{-(Phi_r-1)u})/(Phi_r-1) - (same at r+m)]."""
    phi_r, phi_rm = inst.ev_r.phi_q, inst.ev_rm.phi_q
    lam, beta = inst.levy.lam, inst.levy.beta
    # int lam beta e^{-(beta+1)u} (1 - e^{-(phi-1)u})/(phi-1) du = lam beta / ((beta+1)(beta+phi))
    jump = lam * beta / (beta + 1.0) * (1.0 / (beta + phi_r) - 1.0 / (beta + phi_rm))
    return 0.5 * inst.levy.sigma**2 * (phi_rm - phi_r) + jump


def small_j_identity(inst: ModelInstance) -> float:
    return _ratio(inst, inst.ev_rm) - _ratio(inst, inst.ev_r)


def l_fn(inst: ModelInstance, B: float) -> float:
    """l(B) with K1(B) = e^B l(B) - G1 + G2(B); nonnegative for the scaled costs."""
    phi_r, phi_rm = inst.ev_r.phi_q, inst.ev_rm.phi_q
    out = _ratio(inst, inst.ev_rm) - 0.5 * inst.levy.sigma**2 * (phi_rm - phi_r) * eta_bar(inst.costs, B)
    if inst.levy.lam > 0:
        out -= Q_kernel(inst, B, phi_r, math.inf) - Q_kernel(inst, B, phi_rm, math.inf)
    return out


def K1(inst: ModelInstance, B: float) -> float:
    return _ratio(inst, inst.ev_rm) * math.exp(B) - G1(inst, B) + G2(inst, B) - J_kernel(inst, B)


def K2(inst: ModelInstance, B: float) -> float:
    r = inst.r
    spec = inst.costs
    return (
        G2(inst, B)
        + r / inst.ev_r.phi_q * eta(spec, B)
        + H_kernel(inst, r, B)
        + 0.5 * inst.levy.sigma**2 * eta_prime(spec, B)
    )


# ---------------------------------------------------------------- Lambda, M and values


def int_W_f1(inst: ModelInstance, q: float, x: float, B: float) -> float:
    """int_B^x W(x - y) f1(y) dy."""
    ev = inst.evaluator(q)
    return f1(inst.debt, inst.market) * _int_W(ev, x - B)


def _int_W(ev: ScaleEvaluator, y: float) -> float:
    # int_0^y W
    if y <= 0:
        return 0.0
    phi_q = ev.phi_q
    return sum(
        c * (math.expm1(phi_q * y) / phi_q + math.expm1(-xi * y) / xi) for c, xi in zip(ev.coeffs, ev.xi)
    )


def int_W_f2(inst: ModelInstance, q: float, x: float, B: float) -> float:
    """int_B^x W(x - y) f2(y) dy."""
    ev = inst.evaluator(q)
    spec = inst.costs
    full = inst.debt.P * inst.market.gamma_hat * inst.market.rho_hat
    k = max(min(x, spec.c_tax), B)
    flat = _int_W(ev, x - k)
    if spec.tax == "cutoff":
        return full * flat
    phi_q = ev.phi_q
    ramp = 0.0
    for c, xi in zip(ev.coeffs, ev.xi):
        ramp += c * (
            math.exp(phi_q * x) / (phi_q - 1.0) * (math.exp(-(phi_q - 1.0) * B) - math.exp(-(phi_q - 1.0) * k))
            - math.exp(-xi * x) / (xi + 1.0) * (math.exp((xi + 1.0) * k) - math.exp((xi + 1.0) * B))
        )
    return full * (math.exp(-spec.c_tax) * ramp + flat)


def pi_conv_W(inst: ModelInstance, q: float, x: float, B: float) -> float:
    """int Pi(du) int_0^{u ^ (x-B)} W(x - z - B) dz."""
    ev = inst.evaluator(q)
    lam, beta = inst.levy.lam, inst.levy.beta
    y = x - B
    phi_q = ev.phi_q
    acc = 0.0
    for c, xi in zip(ev.coeffs, ev.xi):
        acc += c * (
            (math.exp(phi_q * y) - math.exp(-beta * y)) / (phi_q + beta)
            + (math.exp(-xi * y) - math.exp(-beta * y)) / (xi - beta)
        )
    return lam * acc


def pi_conv_W_eta(inst: ModelInstance, q: float, x: float, B: float) -> float:
    """int Pi(du) int_0^{u ^ (x-B)} W(x - z - B) eta(z + B - u) dz."""
    ev = inst.evaluator(q)
    y = x - B
    out = ev.c_total * math.exp(ev.phi_q * y + B) * Q_kernel(inst, B, ev.phi_q, y)
    for c, xi in zip(ev.coeffs, ev.xi):
        out -= c * math.exp(-xi * y + B) * Q_kernel(inst, B, -xi, y)
    return out


def _require_above(x: float, B: float) -> None:
    if not x > B:
        raise ValueError(f"need x > B, got x={x}, B={B}")


def lambda_fn(inst: ModelInstance, q: float, x: float, B: float) -> float:
    """E_x[exp(-q tau_B) eta(X_tau) ; tau_B < inf]."""
    _require_above(x, B)
    ev = inst.evaluator(q)
    y = x - B
    eta_B = eta(inst.costs, B)
    w = W(ev, y)
    out = eta_B * (Z(ev, y) - q / ev.phi_q * w) - w * H_kernel(inst, q, B)
    if inst.levy.lam > 0:
        out += eta_B * pi_conv_W(inst, q, x, B) - pi_conv_W_eta(inst, q, x, B)
    return out


def M_fn(inst: ModelInstance, q: float, i: int, x: float, B: float) -> float:
    """E_x[int_0^tau_B exp(-q t) f_i(X_t) dt] for i in {1, 2}."""
    _require_above(x, B)
    ev = inst.evaluator(q)
    w = W(ev, x - B)
    if i == 1:
        return w * inst.debt.P * (inst.market.rho_hat + inst.m) / ev.phi_q - int_W_f1(inst, q, x, B)
    if i == 2:
        return w * G2(inst, B, q) - int_W_f2(inst, q, x, B)
    raise ValueError(f"i must be 1 or 2, got {i}")


def gamma_term(inst: ModelInstance, x: float, B: float) -> float:
    """E_x[exp(-(r+m) tau_B + X_tau) ; tau_B < inf] = e^x - e^B Gamma^{(r+m)}(x - B)."""
    _require_above(x, B)
    return math.exp(x) - math.exp(B) * gamma_fn(inst.ev_rm, inst.levy, x - B)


def debt(inst: ModelInstance, x: float, B: float) -> float:
    r, rm = inst.r, inst.r + inst.m
    return gamma_term(inst, x, B) + M_fn(inst, rm, 1, x, B) - lambda_fn(inst, rm, x, B)


def firm(inst: ModelInstance, x: float, B: float) -> float:
    r = inst.r
    return math.exp(x) + M_fn(inst, r, 2, x, B) - lambda_fn(inst, r, x, B)


def equity(inst: ModelInstance, x: float, B: float) -> float:
    _require_above(x, B)
    r, rm = inst.r, inst.r + inst.m
    return (
        math.exp(B) * gamma_fn(inst.ev_rm, inst.levy, x - B)
        + (M_fn(inst, r, 2, x, B) - lambda_fn(inst, r, x, B))
        - (M_fn(inst, rm, 1, x, B) - lambda_fn(inst, rm, x, B))
    )


def equity_dB(inst: ModelInstance, x: float, B: float) -> float:
    """Analytic derivative of equity(x; B) in B."""
    _require_above(x, B)
    th_r, th_rm = theta(inst.ev_r, x - B), theta(inst.ev_rm, x - B)
    return -(th_rm * K1(inst, B) + (th_r - th_rm) * K2(inst, B))
