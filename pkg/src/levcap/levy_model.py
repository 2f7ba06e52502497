"""Brownian motion with exponential downward jumps: Laplace exponent and roots."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize


class LevyModelError(ValueError):
    """Invalid Levy/market parameters or a failed root computation."""


@dataclass(frozen=True)
class LevyParams:
    """Spectrally negative jump diffusion X_t = mu t + sigma W_t - sum of Exp(beta) jumps.

    Jumps arrive at rate ``lam``. Only the unbounded-variation case
    ``sigma > 0`` is supported.
    """

    mu: float
    sigma: float
    lam: float
    beta: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise LevyModelError(f"sigma must be > 0, got {self.sigma}")
        if self.lam < 0:
            raise LevyModelError(f"jump intensity must be >= 0, got {self.lam}")
        if not self.beta > 1:
            raise LevyModelError(f"beta must be > 1, got {self.beta}")


@dataclass(frozen=True)
class MarketParams:
    r: float
    delta: float
    gamma_hat: float
    rho_hat: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise LevyModelError(f"r must be > 0, got {self.r}")
        if not 0 < self.delta < self.r:
            raise LevyModelError(f"need 0 < delta < r, got delta={self.delta}, r={self.r}")
        if not 0 <= self.gamma_hat <= 1:
            raise LevyModelError(f"gamma_hat must lie in [0, 1], got {self.gamma_hat}")
        if not self.rho_hat > 0:
            raise LevyModelError(f"rho_hat must be > 0, got {self.rho_hat}")


def laplace_exponent(params: LevyParams, s: float) -> float:
    """kappa(s) = log E[exp(s X_1)], defined for s > -beta."""
    if s <= -params.beta:
        raise LevyModelError(f"kappa undefined for s={s} <= -beta={-params.beta}")
    return _kappa_rational(params, s)


def _kappa_rational(params: LevyParams, s: float) -> float:
    # rational continuation of kappa past the pole at -beta; roots below -beta live here
    jump = params.lam * (params.beta / (params.beta + s) - 1.0)
    return params.mu * s + 0.5 * params.sigma**2 * s * s + jump


def laplace_exponent_prime(params: LevyParams, s: float) -> float:
    return (
        params.mu
        + params.sigma**2 * s
        - params.lam * params.beta / (params.beta + s) ** 2
    )


def calibrate_drift(market: MarketParams, sigma: float, lam: float, beta: float) -> LevyParams:
    """Pick mu so that exp(-(r - delta) t) exp(X_t) is a martingale, i.e. kappa(1) = r - delta."""
    if not beta > 1:
        raise LevyModelError(f"beta must be > 1, got {beta}")
    mu = (market.r - market.delta) - 0.5 * sigma**2 - lam * (beta / (beta + 1.0) - 1.0)
    return LevyParams(mu=mu, sigma=sigma, lam=lam, beta=beta)


def _cubic_coefficients(params: LevyParams, q: float) -> np.ndarray:
    # (beta + s)(kappa(s) - q) expanded, highest degree first
    mu, sig2, lam, beta = params.mu, params.sigma**2, params.lam, params.beta
    return np.array([0.5 * sig2, mu + 0.5 * beta * sig2, beta * mu - lam - q, -beta * q])


def _polish(params: LevyParams, q: float, lo: float, hi: float) -> float:
    f = lambda s: _kappa_rational(params, s) - q
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise LevyModelError(f"kappa(s) - q has no sign change on [{lo}, {hi}] for q={q}")
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def phi(params: LevyParams, q: float) -> float:
    """Largest root of kappa(s) = q (right inverse of kappa)."""
    if not q > 0:
        raise LevyModelError(f"q must be > 0, got {q}")
    hi = 1.0
    while laplace_exponent(params, hi) <= q:
        hi *= 2.0
        if hi > 1e12:
            raise LevyModelError(f"could not bracket Phi({q})")
    # kappa(0) = 0 < q and kappa is convex with kappa(s) < q on [0, Phi(q))
    return _polish(params, q, 0.0, hi)


def kappa_roots(params: LevyParams, q: float) -> tuple[float, float, float]:
    """Return (Phi(q), xi_1, xi_2): kappa(s) = q at s = Phi(q), -xi_1, -xi_2.

    -xi_1 lies in (-beta, 0) and -xi_2 < -beta. Roots come from the
    companion matrix of the cubic (beta + s)(kappa(s) - q) and are then
    polished by Brent's method on their isolating intervals.
    """
    if not q > 0:
        raise LevyModelError(f"q must be > 0, got {q}")
    if params.lam == 0:
        raise LevyModelError("kappa_roots needs lam > 0; without jumps kappa(s) = q is quadratic")
    raw = np.roots(_cubic_coefficients(params, q))
    if np.max(np.abs(raw.imag)) > 1e-8 * np.max(np.abs(raw)):
        raise LevyModelError(f"complex roots for q={q}: {raw}")
    raw = np.sort(raw.real)
    beta = params.beta
    if not (raw[0] < -beta < raw[1] < 0 < raw[2]):
        raise LevyModelError(f"roots do not separate around -beta and 0: {raw}")

    phi_q = phi(params, q)
    # kappa - q runs from +inf at -beta+ down to -q at 0
    xi1 = -_polish(params, q, -beta * (1 - 1e-12), 0.0)
    # and from +inf at -inf up to -inf at -beta-
    xi2 = -_polish(params, q, min(1.5 * raw[0], raw[0] - 1.0), -beta * (1 + 1e-12))

    for s in (phi_q, -xi1, -xi2):
        res = abs(_kappa_rational(params, s) - q)
        if res > 1e-10 * max(1.0, q):
            raise LevyModelError(f"root residual {res:.3e} at s={s}")
    if abs(xi1 - xi2) < 1e-10 * (xi1 + xi2):
        raise LevyModelError("negative roots coincide")
    return phi_q, xi1, xi2
