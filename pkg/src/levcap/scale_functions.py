"""Closed-form q-scale functions for the exponential-jump diffusion.

With roots s_0 = Phi(q), s_1 = -xi_1, s_2 = -xi_2 of kappa(s) = q, the
partial-fraction expansion of 1/(kappa(s) - q) gives

    W(x) = sum_k exp(s_k x) / kappa'(s_k)
         = sum_i C_i [exp(Phi x) - exp(-xi_i x)],   C_i = -1/kappa'(-xi_i) > 0.

Every kernel below is evaluated from that exponential sum.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .levy_model import LevyModelError, LevyParams, kappa_roots, laplace_exponent, laplace_exponent_prime

# beyond exp(60) the Phi(q) term swamps everything; results are still finite but suspect
_SOFT_EXPONENT_CAP = 60.0


class ScaleFunctionWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ScaleEvaluator:
    """Cached roots and partial-fraction coefficients for one discount rate q."""

    q: float
    phi_q: float
    xi: tuple[float, float]
    coeffs: tuple[float, float]
    kappa_prime_at_roots: tuple[float, float, float]

    @property
    def roots(self) -> np.ndarray:
        return np.array([self.phi_q, -self.xi[0], -self.xi[1]])

    @property
    def residues(self) -> np.ndarray:
        """1/kappa'(s_k) at (Phi(q), -xi_1, -xi_2)."""
        return 1.0 / np.asarray(self.kappa_prime_at_roots)

    @property
    def c_total(self) -> float:
        return self.coeffs[0] + self.coeffs[1]


def make_evaluator(params: LevyParams, q: float) -> ScaleEvaluator:
    phi_q, xi1, xi2 = kappa_roots(params, q)
    kp = tuple(laplace_exponent_prime(params, s) for s in (phi_q, -xi1, -xi2))
    c1, c2 = -1.0 / kp[1], -1.0 / kp[2]
    if not (c1 > 0 and c2 > 0):
        raise LevyModelError(f"partial-fraction coefficients not positive: {c1}, {c2}")
    # residues sum to zero (W(0) = 0): the Phi(q) residue must equal C_1 + C_2
    if abs(1.0 / kp[0] - (c1 + c2)) > 1e-9 * (c1 + c2):
        raise LevyModelError("residue at Phi(q) inconsistent with C_1 + C_2")
    return ScaleEvaluator(q=q, phi_q=phi_q, xi=(xi1, xi2), coeffs=(c1, c2), kappa_prime_at_roots=kp)


def _check_range(ev: ScaleEvaluator, x: float) -> None:
    if ev.phi_q * x > _SOFT_EXPONENT_CAP:
        warnings.warn(
            f"scale function evaluated at x={x:.4g} > 60/Phi(q)={_SOFT_EXPONENT_CAP / ev.phi_q:.4g}",
            ScaleFunctionWarning,
            stacklevel=3,
        )


def W(ev: ScaleEvaluator, x: float) -> float:
    if x <= 0:
        return 0.0
    _check_range(ev, x)
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    return (c1 + c2) * math.exp(ev.phi_q * x) - c1 * math.exp(-xi1 * x) - c2 * math.exp(-xi2 * x)


def Z(ev: ScaleEvaluator, x: float) -> float:
    """Z(x) = 1 + q * int_0^x W."""
    if x <= 0:
        return 1.0
    _check_range(ev, x)
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    phi_q = ev.phi_q
    acc = 0.0
    for c, xi in ((c1, xi1), (c2, xi2)):
        acc += c * (math.expm1(phi_q * x) / phi_q + math.expm1(-xi * x) / xi)
    return 1.0 + ev.q * acc


def W_prime(ev: ScaleEvaluator, x: float) -> float:
    if x <= 0:
        raise ValueError(f"W' is only defined on (0, inf), got x={x}")
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    return (
        (c1 + c2) * ev.phi_q * math.exp(ev.phi_q * x)
        + c1 * xi1 * math.exp(-xi1 * x)
        + c2 * xi2 * math.exp(-xi2 * x)
    )


def W_prime_0(ev: ScaleEvaluator) -> float:
    """Right limit W'(0+); equals 2/sigma^2 when sigma > 0."""
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    return c1 * (ev.phi_q + xi1) + c2 * (ev.phi_q + xi2)


def theta(ev: ScaleEvaluator, x: float) -> float:
    """W'(x) - Phi(q) W(x); the exp(Phi x) terms cancel analytically."""
    if x <= 0:
        raise ValueError(f"theta is only defined on (0, inf), got x={x}")
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    return c1 * (ev.phi_q + xi1) * math.exp(-xi1 * x) + c2 * (ev.phi_q + xi2) * math.exp(-xi2 * x)


def scaled_W(ev: ScaleEvaluator, x: float) -> float:
    """exp(-Phi(q) x) W(x), increasing to 1/kappa'(Phi(q))."""
    if x < 0:
        return 0.0
    (c1, c2), (xi1, xi2) = ev.coeffs, ev.xi
    phi_q = ev.phi_q
    return c1 * -math.expm1(-(phi_q + xi1) * x) + c2 * -math.expm1(-(phi_q + xi2) * x)


def gamma_fn(ev: ScaleEvaluator, params: LevyParams, y: float) -> float:
    """Gamma(y) with E_y[exp(-q tau_0^- + X_tau) ; tau < inf] = e^y - Gamma(y).

    Uses int_0^y exp(-z) exp(s z) dz = (exp((s-1) y) - 1)/(s - 1) for each
    exponential in W.
    """
    if y <= 0:
        return 0.0  # W(0) = 0 when sigma > 0
    if abs(1.0 - ev.phi_q) < 1e-10:
        raise ZeroDivisionError("Gamma is singular at Phi(q) = 1 (delta = 0)")
    _check_range(ev, y)
    k1q = laplace_exponent(params, 1.0) - ev.q
    # e^y * int_0^y e^{-z} W(z) dz, term by term
    ey_int = 0.0
    for s, w in zip(ev.roots, ev.residues):
        ey_int += w * (math.exp(s * y) - math.exp(y)) / (s - 1.0)
    return float(k1q / (1.0 - ev.phi_q) * W(ev, y) + k1q * ey_int)
