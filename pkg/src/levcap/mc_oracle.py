"""Monte Carlo first-passage estimates for the valuation functionals.

Independent of the scale-function formulas: paths of the jump diffusion
are simulated directly and the discounted payoffs averaged.

Scheme (jump-adapted):
  * jump times are exact exponential clocks, the path is stepped onto them;
  * the diffusion moves in Gaussian steps of size ``dt`` near the barrier
    and in larger steps when the barrier is more than ``6 sigma sqrt(h)``
    away, where an in-step crossing has probability below 1e-9;
  * each diffusion step is checked for a continuous crossing with the
    Brownian-bridge probability exp(-2 (x0 - B)(x1 - B) / (sigma^2 h));
  * running integrals use the trapezoid rule on ``dt`` steps and one
    uniformly placed bridge node on larger steps (unbiased given the
    endpoints).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB layer is rarely installed; avoid its import warning
    numba.config.THREADING_LAYER = "workqueue"

from .valuation import ModelInstance, f1

_Z_SAFE = 6.0
_N_OUT = 5  # Lambda_r, Lambda_rm, M1_rm, M2_r, Gamma_term


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 200_000
    dt: float = 1e-3
    horizon: float = 200.0
    seed: int = 20240601
    bridge_correction: bool = True
    max_step: float = 0.25

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if self.max_step < self.dt:
            raise ValueError("max_step must be >= dt")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int

    def z_score(self, value: float) -> float:
        if self.std_error == 0:
            return 0.0 if value == self.mean else math.inf
        return (self.mean - value) / self.std_error


@numba.njit(cache=True)
def _eta(x, eta_kind, eta0, a, b, eta_const):
    if eta_kind == 1:
        return eta_const
    return eta0 * math.exp(min(x, (1.0 - a) * x + a * b))


@numba.njit(cache=True)
def _f2(x, tax_kind, full, c):
    if tax_kind == 1:
        return full if x >= c else 0.0
    return full * min(math.exp(x - c), 1.0)


@numba.njit(cache=True)
def _one_path(seed, x0, B, mu, sigma, lam, beta, r, rm, f1v, eta_kind, eta0, a, b, eta_const,
              tax_kind, full, c, dt, horizon, bridge, max_step, out):
    np.random.seed(seed)
    sig2 = sigma * sigma
    drift_pad = abs(mu) * math.sqrt(max_step)
    t = 0.0
    x = x0
    m2 = 0.0
    next_jump = np.random.exponential(1.0 / lam) if lam > 0 else math.inf
    crossed = False
    tau = horizon
    x_tau = 0.0
    while t < horizon:
        d = x - B
        h = d / (_Z_SAFE * sigma + drift_pad)
        h = h * h
        coarse = h > dt
        if h > max_step:
            h = max_step
        if not coarse:
            h = dt
        jump_now = False
        if next_jump - t <= h:
            h = next_jump - t
            jump_now = True
        if horizon - t < h:
            h = horizon - t
            jump_now = False
        x1 = x + mu * h + sigma * math.sqrt(h) * np.random.standard_normal()
        hit = x1 <= B
        if not hit and bridge:
            p = math.exp(-2.0 * d * (x1 - B) / (sig2 * h))
            hit = np.random.random() < p
        if hit:
            if x1 <= B:
                s = h * d / (x - x1)
            else:
                s = 0.5 * h
            m2 += 0.5 * s * (math.exp(-r * t) * _f2(x, tax_kind, full, c)
                             + math.exp(-r * (t + s)) * _f2(B, tax_kind, full, c))
            crossed = True
            tau = t + s
            x_tau = B
            break
        if coarse:
            u = np.random.random() * h
            xu = x + (u / h) * (x1 - x) + sigma * math.sqrt(u * (h - u) / h) * np.random.standard_normal()
            m2 += h * math.exp(-r * (t + u)) * _f2(xu, tax_kind, full, c)
        else:
            m2 += 0.5 * h * (math.exp(-r * t) * _f2(x, tax_kind, full, c)
                             + math.exp(-r * (t + h)) * _f2(x1, tax_kind, full, c))
        t += h
        x = x1
        if jump_now:
            x -= np.random.exponential(1.0 / beta)
            next_jump = t + np.random.exponential(1.0 / lam)
            if x <= B:
                crossed = True
                tau = t
                x_tau = x
                break
    if crossed:
        e_loss = _eta(x_tau, eta_kind, eta0, a, b, eta_const)
        out[0] = math.exp(-r * tau) * e_loss
        out[1] = math.exp(-rm * tau) * e_loss
        out[4] = math.exp(-rm * tau + x_tau)
    else:
        out[0] = 0.0
        out[1] = 0.0
        out[4] = 0.0
    # f1 is constant, so its discounted integral up to tau is exact
    out[2] = f1v * -math.expm1(-rm * tau) / rm
    out[3] = m2


@numba.njit(parallel=True, cache=True)
def _simulate(seeds, x0, B, mu, sigma, lam, beta, r, rm, f1v, eta_kind, eta0, a, b, eta_const,
              tax_kind, full, c, dt, horizon, bridge, max_step):
    n = seeds.shape[0]
    out = np.empty((n, _N_OUT))
    for i in numba.prange(n):
        _one_path(seeds[i], x0, B, mu, sigma, lam, beta, r, rm, f1v, eta_kind, eta0, a, b, eta_const,
                  tax_kind, full, c, dt, horizon, bridge, max_step, out[i])
    return out


def path_seeds(seed: int, n_paths: int) -> np.ndarray:
    """One hashed 32-bit seed per path index; independent of thread scheduling."""
    return np.random.SeedSequence(seed).generate_state(n_paths, dtype=np.uint32).astype(np.int64)


def _set_threads() -> None:
    hint = int(os.environ.get("LEVCAP_THREADS", "0") or 0)
    if hint > 0:
        numba.set_num_threads(min(hint, numba.config.NUMBA_NUM_THREADS))


def simulate_paths(inst: ModelInstance, x: float, B: float, config: McConfig) -> np.ndarray:
    """Per-path discounted payoffs, columns (Lambda_r, Lambda_rm, M1_rm, M2_r, Gamma_term)."""
    if not x > B:
        raise ValueError(f"need x > B, got x={x}, B={B}")
    r, rm = inst.market.r, inst.market.r + inst.debt.m
    if math.exp(-r * config.horizon) >= 1e-6:
        raise ValueError(
            f"horizon {config.horizon} too short: exp(-r T) = {math.exp(-r * config.horizon):.2e} >= 1e-6"
        )
    lv, spec = inst.levy, inst.costs
    _set_threads()
    return _simulate(
        path_seeds(config.seed, config.n_paths),
        float(x), float(B), lv.mu, lv.sigma, lv.lam, lv.beta, r, rm,
        f1(inst.debt, inst.market),
        1 if spec.variant == "constant_eta" else 0, spec.eta0, spec.a, spec.b, spec.eta_const,
        1 if spec.tax == "cutoff" else 0,
        inst.debt.P * inst.market.gamma_hat * inst.market.rho_hat, spec.c_tax,
        config.dt, config.horizon, config.bridge_correction, config.max_step,
    )


def _estimate(samples: np.ndarray) -> McEstimate:
    n = samples.shape[0]
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean=float(np.sum(samples) / n), std_error=se, n_paths=n)


def simulate_functionals(inst: ModelInstance, x: float, B: float, config: McConfig) -> dict[str, McEstimate]:
    raw = simulate_paths(inst, x, B, config)
    lam_r, lam_rm, m1, m2, gam = raw.T
    debt_v = gam + m1 - lam_rm
    firm_v = math.exp(x) + m2 - lam_r
    return {
        "Lambda_r": _estimate(lam_r),
        "Lambda_rm": _estimate(lam_rm),
        "M1_rm": _estimate(m1),
        "M2_r": _estimate(m2),
        "Gamma_term": _estimate(gam),
        "Equity": _estimate(firm_v - debt_v),
        "Debt": _estimate(debt_v),
        "Firm": _estimate(firm_v),
    }


def simulate_terminal(inst: ModelInstance, x: float, T: float, n_paths: int, seed: int) -> np.ndarray:
    """Exact samples of X_T started at x (no killing)."""
    lv = inst.levy
    rng = np.random.default_rng(seed)
    n_jumps = rng.poisson(lv.lam * T, size=n_paths)
    jump_sum = np.where(n_jumps > 0, rng.gamma(np.maximum(n_jumps, 1), 1.0 / lv.beta), 0.0)
    return x + lv.mu * T + lv.sigma * math.sqrt(T) * rng.standard_normal(n_paths) - jump_sum


def martingale_check(inst: ModelInstance, x: float, T: float = 1.0, n_paths: int = 200_000, seed: int = 7) -> McEstimate:
    """Estimate E[exp(-(r - delta) T) exp(X_T)]; should equal exp(x)."""
    xt = simulate_terminal(inst, x, T, n_paths, seed)
    disc = math.exp(-(inst.market.r - inst.market.delta) * T)
    return _estimate(disc * np.exp(xt))
