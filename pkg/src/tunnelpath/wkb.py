"""WKB eigenfunctions in the forbidden region and the path relation they imply.

With I(x) = int_x^{x1} lambda dx' and lambda(x) = sqrt(2m V(x) - k^2), the WKB
delay at x is

    beta_k(x) = m int_x^{x1} dx' / lambda(x') / cosh(log 2 + 2 I(x)),

which vanishes at the exit turning point and is bounded by (4m/5) int dx/lambda.
For the square barrier the dimensionless form rises from zero and falls back to
zero at the exit, so it cannot be inverted into a path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, optimize

from ._numerics import as_scalar_if_0d, sech
from .errors import DomainError
from .scattering import SQRT_2PI, BarrierParams, PiecewisePotential
from .wavepacket import WavePacketSpec

Potential = Union[BarrierParams, PiecewisePotential, Callable]

LOG2 = math.log(2.0)
# cosh(log 2) = 5/4, the smallest value the denominator of beta can take
BOUND_FACTOR = 0.8
ROOT_XTOL = 1e-13


@dataclass(frozen=True)
class WkbContext:
    """Potential, energy ``E`` and exit turning point ``x1`` for one momentum.

    ``a`` is the half-width of the potential's support and ``m`` the mass.
    """

    potential: Potential
    E: float
    x1: float
    a: float
    m: float = 1.0

    @classmethod
    def build(cls, potential: Potential, k, m=None, a=None):
        if isinstance(potential, BarrierParams):
            m = potential.m if m is None else m
            a = potential.a
        else:
            m = 1.0 if m is None else m
            if isinstance(potential, PiecewisePotential):
                lo, hi = potential.extent
                a = max(abs(lo), abs(hi))
            elif a is None:
                raise DomainError("a callable potential needs its support half-width a")
        E = 0.5 * k * k / m
        return cls(potential, E, turning_point(potential, E, x_max=a), a, m)

    @property
    def k(self):
        return math.sqrt(2.0 * self.m * self.E)

    def V(self, x):
        p = self.potential
        if isinstance(p, BarrierParams):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) <= p.a, p.V0, 0.0)
        return np.asarray(p(x), dtype=float)

    def lam(self, x):
        return np.sqrt(np.maximum(2.0 * self.m * (self.V(x) - self.E), 0.0))

    @property
    def square(self):
        return isinstance(self.potential, BarrierParams)


def turning_point(potential: Potential, E, x_max=None):
    """Positive x1 with V(x1) = E bounding the forbidden region.

    Square barrier: a.  Piecewise potential: the outer edge of the rightmost
    segment higher than E.  Callable: bracketed root of V - E on (0, x_max].
    """
    if isinstance(potential, BarrierParams):
        if not E < potential.V0:
            raise DomainError(f"E={E!r} is not below the barrier top V0={potential.V0!r}")
        return potential.a
    if isinstance(potential, PiecewisePotential):
        above = [hi for lo, hi, v in potential.regions() if v > E]
        if not above:
            raise DomainError(f"E={E!r} lies above every segment of the potential")
        x1 = max(above)
        if not x1 > 0:
            raise DomainError("forbidden region lies entirely at x <= 0")
        return float(x1)
    if x_max is None:
        raise DomainError("a callable potential needs x_max to bracket the turning point")
    g = lambda x: float(potential(x)) - E
    if not g(0.0) > 0:
        raise DomainError(f"E={E!r} is not below V(0)")
    xs = np.linspace(0.0, x_max, 4097)
    vals = np.array([g(x) for x in xs])
    idx = np.nonzero(vals <= 0)[0]
    if idx.size == 0:
        raise DomainError("no turning point inside (0, x_max]")
    j = int(idx[0])
    if vals[j] == 0:
        return float(xs[j])
    return optimize.brentq(g, xs[j - 1], xs[j], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)


def _check_energy(k, ctx):
    if not math.isclose(0.5 * k * k / ctx.m, ctx.E, rel_tol=1e-12):
        raise DomainError("k does not match the context energy")


def _lambda_integral(x, ctx):
    """int_x^{x1} lambda(x') dx' for scalar x."""
    if ctx.square:
        return ctx.lam(0.0)[()] * (ctx.x1 - x)
    val, _ = integrate.quad(ctx.lam, x, ctx.x1, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _inverse_lambda_integral(x, ctx):
    """int_x^{x1} dx' / lambda(x'), with the turning-point singularity removed."""
    if ctx.square:
        return (ctx.x1 - x) / ctx.lam(0.0)[()]
    # split at the midpoint; x' = x1 - u^2 and x' = x + v^2 keep both ends finite
    mid = 0.5 * (x + ctx.x1)
    h = math.sqrt(max(ctx.x1 - mid, 0.0))

    def right(u):
        lam = float(ctx.lam(ctx.x1 - u * u))
        return 2.0 * u / lam if lam > 0 else 0.0

    def left(v):
        lam = float(ctx.lam(x + v * v))
        return 2.0 * v / lam if lam > 0 else 0.0

    opts = dict(epsabs=0.0, epsrel=1e-10, limit=400)
    return integrate.quad(right, 0.0, h, **opts)[0] + integrate.quad(left, 0.0, h, **opts)[0]


def _entry_phase(k, ctx):
    """int_{-a}^{-x1} sqrt(k^2 - 2mV) dx over the allowed stretch before the turning point."""
    lo, hi = -ctx.a, -ctx.x1
    if ctx.square or hi <= lo:
        return 0.0
    f = lambda x: math.sqrt(max(k * k - 2.0 * ctx.m * float(ctx.V(x)), 0.0))
    val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _in_domain(x, ctx, closed):
    x = np.asarray(x, dtype=float)
    edge = ctx.x1 * (1.0 + 1e-12)
    bad = (np.abs(x) > edge) if closed else (np.abs(x) >= ctx.x1)
    if np.any(bad):
        raise DomainError("position outside the forbidden region (-x1, x1)")
    return np.clip(x, -ctx.x1, ctx.x1)


def wkb_eigenfunction(k, x, ctx: WkbContext):
    """WKB approximation to f_{k+}(x) for -x1 < x < x1.

        e^{i(Phi - ka + pi/4)} / sqrt(2 pi lambda(x)) * [e^{-I} - 2i e^{I}] / (e^{-J}/2 + 2 e^{J})

    with I = int_x^{x1} lambda and J the same integral over the whole forbidden
    region.  Evaluated as e^{I-J} [e^{-2I} - 2i] / (e^{-2J}/2 + 2) so large
    opacities stay finite.
    """
    _check_energy(k, ctx)
    xs = _in_domain(x, ctx, closed=False)
    J = _lambda_integral(-ctx.x1, ctx)
    phase = np.exp(1j * (_entry_phase(k, ctx) - k * ctx.a + 0.25 * math.pi))
    out = []
    for xv in np.atleast_1d(xs):
        I = _lambda_integral(float(xv), ctx)
        lam = float(ctx.lam(xv))
        val = math.exp(I - J) * (math.exp(-2.0 * I) - 2j) / (0.5 * math.exp(-2.0 * J) + 2.0)
        out.append(phase * val / (SQRT_2PI * math.sqrt(lam)))
    return as_scalar_if_0d(np.array(out).reshape(np.shape(xs)))


def wkb_beta(k, x, ctx: WkbContext):
    """WKB delay beta_k(x) on [-x1, x1]; zero at x1, positive inside."""
    _check_energy(k, ctx)
    xs = _in_domain(x, ctx, closed=True)
    out = []
    for xv in np.atleast_1d(xs):
        I = _lambda_integral(float(xv), ctx)
        out.append(ctx.m * _inverse_lambda_integral(float(xv), ctx) * float(sech(LOG2 + 2.0 * I)))
    return as_scalar_if_0d(np.array(out).reshape(np.shape(xs)))


def wkb_entry_time(spec: WavePacketSpec, ctx: WkbContext):
    """Classical time from x0 to the entry turning point -x1 at momentum k0."""
    lo, hi = -ctx.a, -ctx.x1
    inside = 0.0
    if not ctx.square and hi > lo:
        f = lambda x: 1.0 / math.sqrt(spec.k0**2 - 2.0 * ctx.m * float(ctx.V(x)))
        inside, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
    return ctx.m * inside - ctx.m * (spec.x0 + ctx.a) / spec.k0


def wkb_time_bound(ctx: WkbContext):
    """(4m/5) int_{-x1}^{x1} dx / lambda, an upper bound on the WKB delay."""
    return BOUND_FACTOR * ctx.m * _inverse_lambda_integral(-ctx.x1, ctx)


def wkb_path_time(x, spec: WavePacketSpec, ctx: WkbContext):
    """tau_1 = tau - wkb_entry_time = beta_{k0}(x); zero at x1."""
    return wkb_beta(spec.k0, x, ctx)


def wkb_s_of_d(D, gamma, epsilon):
    """Dimensionless WKB path relation for the square barrier.

    S = gamma sqrt(eps / (1 - eps)) (1 - D) / cosh(log 2 + 2 gamma (1 - D)),
    i.e. (k0 l / m) beta_{k0}(aD).
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    D = np.asarray(D, dtype=float)
    if np.any((D < -1.0 - 1e-12) | (D > 1.0 + 1e-12)):
        raise DomainError("D must lie in [-1, 1]")
    u = 1.0 - D
    pref = gamma * math.sqrt(epsilon / (1.0 - epsilon))
    return as_scalar_if_0d(pref * u * sech(LOG2 + 2.0 * gamma * u))


# ---------------------------------------------------------------------------
# invertibility


@dataclass(frozen=True)
class Witness:
    """Either two distinct D sharing one S, or a monotonicity report."""

    found: bool
    D1: float = math.nan
    D2: float = math.nan
    S: float = math.nan
    message: str = ""


def find_witness(func: Callable, lo=-1.0, hi=1.0, n=4001, rtol=1e-9) -> Witness:
    """Search ``func`` on [lo, hi] for two points with equal value.

    A scan locates an interior extremum; the target level sits halfway between
    the extremum and the higher (or lower) endpoint, and a bracketed root is
    taken on each flank.  Monotone functions yield ``found=False``.
    """
    D = np.linspace(lo, hi, n)
    S = np.asarray(func(D), dtype=float)
    scale = max(float(np.max(np.abs(S))), np.finfo(float).tiny)
    for sign in (1.0, -1.0):
        v = sign * S
        i = int(np.argmax(v))
        if i in (0, n - 1):
            continue
        top = float(v[i])
        ends = max(float(v[0]), float(v[-1]))
        if top - ends <= rtol * scale:
            continue
        res = optimize.minimize_scalar(lambda d: -sign * float(func(d)),
                                       bounds=(D[max(i - 1, 0)], D[min(i + 1, n - 1)]),
                                       method="bounded", options={"xatol": 1e-12})
        dmax = float(res.x)
        top = max(top, sign * float(func(dmax)))
        level = 0.5 * (top + ends)
        g = lambda d: sign * float(func(d)) - level
        d1 = optimize.brentq(g, lo, dmax, xtol=ROOT_XTOL)
        d2 = optimize.brentq(g, dmax, hi, xtol=ROOT_XTOL)
        return Witness(True, d1, d2, sign * level,
                       f"extremum near D={dmax:.6g}; equal S on both flanks")
    return Witness(False, message="monotone on the scanned interval; no witness")


def wkb_invertibility_witness(gamma, epsilon, n=4001) -> Witness:
    """Two distinct D with equal wkb_s_of_d, when the WKB relation is not monotone."""
    return find_witness(lambda d: wkb_s_of_d(d, gamma, epsilon), n=n)
