"""Quadrature evaluations of the defining integrals, used as test oracles.

Nothing here calls the closed-form kernels under test except W itself,
which is checked separately against its Laplace transform.
"""
import math

from scipy.integrate import quad

from levcap import valuation as val
from levcap.scale_functions import W, W_prime

EPSABS = 1e-13
EPSREL = 1e-11
LIMIT = 400


def _quad(f, a, b, points=()):
    pts = sorted(p for p in points if a < p < b)
    edges = [a, *pts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += quad(f, lo, hi, epsabs=EPSABS, epsrel=EPSREL, limit=LIMIT)[0]
    return total


def _levy_density(inst, u):
    lam, beta = inst.levy.lam, inst.levy.beta
    return lam * beta * math.exp(-beta * u)


def _u_max(inst, extra=0.0):
    return extra + 40.0 / inst.levy.beta


def G2(inst, B, q=None):
    q = inst.r if q is None else q
    phi_q = inst.evaluator(q).phi_q
    spec = inst.costs
    f = lambda y: math.exp(-phi_q * y) * val.f2(spec, inst.debt, inst.market, y + B)
    kink = spec.c_tax - B
    upper = max(kink, 0.0) + 60.0 / phi_q
    return _quad(f, 0.0, upper, points=(kink,))


def Q(inst, B, zeta, l):
    spec = inst.costs

    def inner(u):
        top = min(u, l)
        g = lambda z: math.exp(-(zeta - 1.0) * z - u) * val.eta_bar(spec, B - u + z)
        return _quad(g, 0.0, top, points=(spec.b - B + u,))

    u_top = _u_max(inst, 0.0 if math.isinf(l) else l)
    pts = () if math.isinf(l) else (l,)
    return _quad(lambda u: _levy_density(inst, u) * inner(u), 0.0, u_top, points=(*pts, B - spec.b))


def H(inst, q, B):
    phi_q = inst.evaluator(q).phi_q
    spec = inst.costs
    eta_B = val.eta(spec, B)

    def inner(u):
        g = lambda z: math.exp(-phi_q * z) * (eta_B - val.eta(spec, B - u + z))
        return _quad(g, 0.0, u, points=(spec.b - B + u,))

    return _quad(lambda u: _levy_density(inst, u) * inner(u), 0.0, _u_max(inst), points=(B - spec.b,))


def int_W_f(inst, q, i, x, B):
    ev = inst.evaluator(q)
    if i == 1:
        f = lambda y: val.f1(inst.debt, inst.market)
    else:
        f = lambda y: val.f2(inst.costs, inst.debt, inst.market, y)
    return _quad(lambda y: W(ev, x - y) * f(y), B, x, points=(inst.costs.c_tax,))


def pi_conv_W(inst, q, x, B):
    ev = inst.evaluator(q)
    y = x - B

    def inner(u):
        return _quad(lambda z: W(ev, y - z), 0.0, min(u, y))

    return _quad(lambda u: _levy_density(inst, u) * inner(u), 0.0, _u_max(inst, y), points=(y,))


def pi_conv_W_eta(inst, q, x, B):
    ev = inst.evaluator(q)
    spec = inst.costs
    y = x - B

    def inner(u):
        g = lambda z: W(ev, y - z) * val.eta(spec, z + B - u)
        return _quad(g, 0.0, min(u, y), points=(spec.b - B + u,))

    return _quad(lambda u: _levy_density(inst, u) * inner(u), 0.0, _u_max(inst, y), points=(y, B - spec.b))


def resolvent(inst, q, x, B, y):
    """q-resolvent density of X killed below B, started at x, at level y > B."""
    ev = inst.evaluator(q)
    return math.exp(-ev.phi_q * (y - B)) * W(ev, x - B) - W(ev, x - y)


def lambda_resolvent(inst, q, x, B):
    """E_x[e^{-q tau} eta(X_tau)] = creeping part + overshoot part via the resolvent.

    Creeping: (sigma^2/2) (W'(x-B) - Phi W(x-B)) eta(B).
    Overshoot: int_B^inf r(x, y) int_{u > y-B} Pi(du) eta(y - u) dy.
    """
    ev = inst.evaluator(q)
    spec = inst.costs
    sig2 = inst.levy.sigma ** 2
    creep = 0.5 * sig2 * (W_prime(ev, x - B) - ev.phi_q * W(ev, x - B)) * val.eta(spec, B)

    def jump_out(y):
        g = lambda u: _levy_density(inst, u) * val.eta(spec, y - u)
        return _quad(g, y - B, y - B + 40.0 / inst.levy.beta, points=(y - spec.b,))

    upper = x + 60.0 / (ev.phi_q + inst.levy.beta)
    over = _quad(lambda y: resolvent(inst, q, x, B, y) * jump_out(y), B, upper, points=(x,))
    return creep + over


def M_resolvent(inst, q, i, x, B):
    ev = inst.evaluator(q)
    if i == 1:
        f = lambda y: val.f1(inst.debt, inst.market)
    else:
        f = lambda y: val.f2(inst.costs, inst.debt, inst.market, y)
    upper = max(x, inst.costs.c_tax) + 60.0 / ev.phi_q
    return _quad(lambda y: resolvent(inst, q, x, B, y) * f(y), B, upper, points=(x, inst.costs.c_tax))


def small_j(inst):
    phi_r, phi_rm = inst.ev_r.phi_q, inst.ev_rm.phi_q
    g = lambda u, p: -math.expm1(-(p - 1.0) * u) / (p - 1.0)
    jump = _quad(lambda u: _levy_density(inst, u) * math.exp(-u) * (g(u, phi_r) - g(u, phi_rm)), 0.0, _u_max(inst))
    return 0.5 * inst.levy.sigma ** 2 * (phi_rm - phi_r) + jump


def laplace_W(ev, s, x_max):
    return _quad(lambda x: math.exp(-s * x) * W(ev, x), 0.0, x_max)
