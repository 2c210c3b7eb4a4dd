"""Phase functions, transit times and the quasi-classical tunneling path.

Inside the barrier the exact eigenfunction is written as e^{r + i theta}.  The
envelope of a narrow wave packet peaks at x when

    omega_{k0}(x) = x0 + k0 tau / m,        omega = d theta / dk,

which for the square barrier becomes tau_1 = t_ph(k0) + beta_{k0}(x) with
tau_1 = tau + m (x0 + a) / k0.  In the dimensionless variables D = x / a and
S = (k0 l / m) tau_1 this is the monotone relation S(D) implemented by
:func:`s_of_d_exact`; its inverse is the path x(tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy import integrate, optimize

from ._numerics import as_scalar_if_0d, sech, sinhc, tanhc
from .errors import DomainError, FlatDensityError, MonotonicityError, PathRangeError
from .scattering import SQRT_2PI, BarrierParams, PiecewisePotential, _check_tunneling

if TYPE_CHECKING:
    from .wavepacket import WavePacketSpec

ROOT_XTOL = 1e-12
# opacity beyond which hyperbolic ratios are formed from tanh/sech
_OPAQUE = 20.0
ROOT_MAXITER = 200


@dataclass(frozen=True)
class PhaseData:
    k: float
    x: float
    r: float
    theta: float
    omega: float
    beta: float


def _interior_x(x, b):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > b.a * (1.0 + 1e-12)):
        raise DomainError("position outside the barrier [-a, a]")
    return np.clip(x, -b.a, b.a)


def _lam(k, b):
    return np.sqrt(np.maximum(2.0 * b.m * b.V0 - k * k, 0.0))


def transmission_phase(k, b: BarrierParams):
    """arg T_k, continuous in k on (0, sqrt(2 m V0)].

    T_k = e^{-2ika} / (cosh 2la [1 + i X]) with X real, so the continuous
    branch is -2ka - atan(X).
    """
    k = _check_tunneling(k, b)
    if b.trivial:
        return as_scalar_if_0d(np.zeros_like(k))
    lam = _lam(k, b)
    g2 = 2.0 * lam * b.a
    x_im = 0.5 * (lam / k * np.tanh(g2) - k * 2.0 * b.a * tanhc(g2))
    return as_scalar_if_0d(-2.0 * k * b.a - np.arctan(x_im))


def phase_theta(k, x, b: BarrierParams):
    """Unwrapped interior phase theta_k(x), seeded by theta_k(a) = ka + arg T_k."""
    k = _check_tunneling(k, b)
    x = _interior_x(x, b)
    lam = _lam(k, b)
    u = b.a - x
    # Re[1 - i(k/l) tanh lu] = 1 > 0, so atan gives the continuous branch
    return as_scalar_if_0d(k * b.a + transmission_phase(k, b) - np.arctan(k * u * tanhc(lam * u)))


def log_modulus(k, x, b: BarrierParams):
    """r_k(x) = log |f_{k+}(x)| inside the barrier, evaluated without overflow."""
    k = _check_tunneling(k, b)
    x = _interior_x(x, b)
    lam = _lam(k, b)
    a = b.a
    g2 = 2.0 * lam * a
    x_im = 0.5 * (lam / k * np.tanh(g2) - k * 2.0 * a * tanhc(g2))
    log_sech = -g2 - np.log1p(np.exp(-2.0 * g2)) + math.log(2.0)
    log_T = log_sech - 0.5 * np.log1p(x_im * x_im)
    u = a - x
    lu = lam * u
    log_cosh = lu + np.log1p(np.exp(-2.0 * lu)) - math.log(2.0)
    kt = k * u * tanhc(lu)
    return as_scalar_if_0d(log_T + log_cosh + 0.5 * np.log1p(kt * kt) - math.log(SQRT_2PI))


def phase_time(k, b: BarrierParams):
    """Wigner-Bohm phase time (m/k)(d arg T/dk + 2a), from its closed form."""
    k = _check_tunneling(k, b)
    m, a = b.m, b.a
    if b.trivial:
        return as_scalar_if_0d(np.zeros_like(k))
    lam = _lam(k, b)
    g = lam * a
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # moderate opacity: (l/k + k/l)^2 expanded, the two 1/l^2 terms merged
        # into 16 k^2 a^3 (sinhc(4g) - 1)/(4g)^2 so the threshold l -> 0 is regular
        g4 = np.where(g > _OPAQUE, 0.0, 4.0 * g)
        num_m = lam * np.sinh(g4) / (4.0 * k * k) + 2.0 * a * sinhc(g4) + a + 16.0 * k * k * a**3 * _shc1(g4)
        half = lam / k * np.sinh(g4 / 2.0) + 2.0 * k * a * sinhc(g4 / 2.0)
        den_m = 1.0 + 0.25 * half * half
        # opaque: numerator and denominator divided by cosh^2(2g)
        lam_s = np.where(lam > 0, lam, 1.0)
        t2 = np.tanh(2.0 * g)
        s2 = sech(2.0 * g) ** 2
        q = lam / k + k / lam_s
        num_o = q * q * t2 / (2.0 * lam_s) + (1.0 - (k / lam_s) ** 2) * a * s2
        den_o = s2 + 0.25 * q * q * t2 * t2
    opaque = g > _OPAQUE
    num = np.where(opaque, num_o, num_m)
    den = np.where(opaque, den_o, den_m)
    return as_scalar_if_0d(m / k * num / den)


def _shc1(z):
    """(sinh(z)/z - 1)/z^2."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    safe = np.where(small, 1.0, z)
    z2 = z * z
    series = 1.0 / 6.0 + z2 / 120.0 + z2 * z2 / 5040.0
    return np.where(small, series, (np.sinh(safe) / safe - 1.0) / (safe * safe))


def beta_exact(k, x, b: BarrierParams):
    """Interior delay beta_k(x); zero at the exit x = a and negative inside.

    Evaluated with numerator and denominator divided by cosh^2 l(a-x).
    """
    k = _check_tunneling(k, b)
    if b.trivial:
        return as_scalar_if_0d(b.m * (np.asarray(x, dtype=float) - b.a) / k)
    x = _interior_x(x, b)
    lam = _lam(k, b)
    u = b.a - x
    lu = lam * u
    c = 2.0 * b.m * b.V0 / (k * k)
    s2 = sech(lu) ** 2
    den = c - s2
    if np.any(den <= 0):
        raise DomainError("beta denominator vanished; k is not below the barrier top")
    return as_scalar_if_0d(b.m / k * u * (s2 - c * tanhc(lu)) / den)


def omega(k, x, b: BarrierParams, method="closed"):
    """omega_k(x) = d theta_k(x) / dk.

    ``method="closed"`` uses a + arg T' + (k/m) beta with arg T' taken from the
    phase-time closed form; ``method="fd"`` is a central difference of
    :func:`phase_theta` with step 1e-5 k, kept as an independent check.
    """
    if method == "closed":
        k = _check_tunneling(k, b)
        dphi = k / b.m * phase_time(k, b) - 2.0 * b.a
        return as_scalar_if_0d(b.a + dphi + k / b.m * beta_exact(k, x, b))
    if method == "fd":
        k = np.asarray(k, dtype=float)
        h = 1e-5 * k
        return as_scalar_if_0d((phase_theta(k + h, x, b) - phase_theta(k - h, x, b)) / (2.0 * h))
    raise ValueError(f"unknown method {method!r}")


def phase_data(k: float, x, b: BarrierParams) -> PhaseData:
    """r, theta, omega and beta at momentum ``k`` for x inside or past the barrier.

    Past the exit the eigenfunction is T_k e^{ikx}/sqrt(2 pi), which continues
    beta as free flight, m (x - a) / k.
    """
    k = float(_check_tunneling(k, b))
    x = np.asarray(x, dtype=float)
    m, a = b.m, b.a
    if b.trivial:
        r = np.full_like(x, -math.log(SQRT_2PI))
        return PhaseData(k, x, r, k * x, x.copy(), m * (x - a) / k)
    if np.any(x < -a * (1.0 + 1e-12)):
        raise DomainError("x < -a: incident and reflected waves overlap, no single phase")
    inside = x <= a
    xi = np.where(inside, x, a)
    phi = transmission_phase(k, b)
    dphi = k / m * phase_time(k, b) - 2.0 * a
    r_in = log_modulus(k, xi, b)
    beta = np.where(inside, beta_exact(k, xi, b), m * (x - a) / k)
    theta = np.where(inside, phase_theta(k, xi, b), phi + k * x)
    om = a + dphi + k / m * beta
    return PhaseData(k, x, as_scalar_if_0d(r_in), as_scalar_if_0d(theta),
                     as_scalar_if_0d(om), as_scalar_if_0d(beta))


def tau1_offset(spec: WavePacketSpec, b: BarrierParams):
    """m (x0 + a) / k0, so that tau_1 = tau + offset is zero at barrier entry."""
    return b.m * (spec.x0 + b.a) / spec.k0


def path_time(x, spec: WavePacketSpec, b: BarrierParams):
    """Detection time tau solving omega_{k0}(x) = x0 + k0 tau / m."""
    om = phase_data(spec.k0, x, b).omega
    return b.m * (om - spec.x0) / spec.k0


# ---------------------------------------------------------------------------
# dimensionless path relation


def _check_gamma_eps(gamma, epsilon):
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")


def dimensionless_phase_time(gamma, epsilon):
    """(k l / m) t_ph in terms of opacity and energy ratio."""
    _check_gamma_eps(gamma, epsilon)
    t = math.tanh(2.0 * gamma)
    s = float(sech(2.0 * gamma)) ** 2
    e = epsilon
    return (2.0 * t + 4.0 * e * (1.0 - 2.0 * e) * gamma * s) / (4.0 * e * (1.0 - e) * s + t * t)


def s_of_d_exact(D, gamma, epsilon):
    """Dimensionless detection time S at dimensionless position D in [-1, 1].

    S = (k0 l / m)(t_ph + beta).  With y = gamma (1 - D):

        S = (eps y sech^2 y - tanh y) / (1 - eps sech^2 y) + S(1)

    where S(1) is :func:`dimensionless_phase_time`.  Both pieces are written
    with bounded hyperbolics, so any opacity is safe.
    """
    _check_gamma_eps(gamma, epsilon)
    D = np.asarray(D, dtype=float)
    if np.any((D < -1.0 - 1e-12) | (D > 1.0 + 1e-12)):
        raise DomainError("D must lie in [-1, 1]")
    y = gamma * (1.0 - D)
    c = sech(y) ** 2
    first = (epsilon * y * c - np.tanh(y)) / (1.0 - epsilon * c)
    return as_scalar_if_0d(first + dimensionless_phase_time(gamma, epsilon))


def ds_dd_exact(D, gamma, epsilon):
    """dS/dD in closed form; non-negative on [-1, 1]."""
    _check_gamma_eps(gamma, epsilon)
    D = np.asarray(D, dtype=float)
    y = gamma * (1.0 - D)
    c = sech(y) ** 2
    e = epsilon
    bracket = 2.0 * e * y * np.tanh(y) + (1.0 - 3.0 * e) + e * (1.0 + e) * c
    return as_scalar_if_0d(gamma * c * bracket / (1.0 - e * c) ** 2)


def invert_path(gamma, epsilon, S):
    """The unique D in [-1, 1] with s_of_d_exact(D) = S."""
    lo = float(s_of_d_exact(-1.0, gamma, epsilon))
    hi = float(s_of_d_exact(1.0, gamma, epsilon))
    S = float(S)
    span = max(1.0, abs(hi))
    if S < lo - 1e-12 * span or S > hi + 1e-12 * span:
        raise PathRangeError(S, lo, hi)
    if S >= hi:
        return 1.0
    if S <= lo:
        return -1.0
    return optimize.brentq(
        lambda d: float(s_of_d_exact(d, gamma, epsilon)) - S,
        -1.0, 1.0, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER,
    )


@dataclass(frozen=True)
class PathTable:
    """Sampled (D, S) relation for one (gamma, epsilon)."""

    gamma: float
    epsilon: float
    D: np.ndarray
    S: np.ndarray

    @property
    def samples(self):
        return list(zip(self.D.tolist(), self.S.tolist()))

    def invert(self, S):
        return invert_path(self.gamma, self.epsilon, S)

    def dimensional(self, k0=1.0, m=1.0):
        """(tau_1, x) for the barrier that gives this table at momentum ``k0``."""
        b = BarrierParams.from_dimensionless(self.gamma, self.epsilon, k0=k0, m=m)
        lam = b.gamma(k0) / b.a
        return self.S * m / (k0 * lam), self.D * b.a

    def x_of_tau(self, tau, spec: WavePacketSpec, b: BarrierParams):
        """Path position at absolute detection time ``tau``."""
        lam = float(b.lam(spec.k0))
        tau1 = tau + tau1_offset(spec, b)
        return b.a * self.invert(spec.k0 * lam * tau1 / b.m)


def build_path(gamma, epsilon, n=201) -> PathTable:
    if n < 2:
        raise DomainError("need at least two samples")
    D = np.linspace(-1.0, 1.0, n)
    S = s_of_d_exact(D, gamma, epsilon)
    drops = np.diff(S)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(S))))
    if np.any(drops < -tol):
        i = int(np.argmin(drops))
        raise MonotonicityError(
            f"S decreases between D={D[i]:.6g} and D={D[i + 1]:.6g} "
            f"(gamma={gamma}, epsilon={epsilon})"
        )
    return PathTable(float(gamma), float(epsilon), D, S)


def hartmann_velocity(D, gamma, epsilon):
    """Exact dD/dS of the inverse path."""
    with np.errstate(divide="ignore"):
        return as_scalar_if_0d(1.0 / np.asarray(ds_dd_exact(D, gamma, epsilon)))


def hartmann_asymptote(D, gamma, epsilon):
    """Opaque-barrier form e^{2 gamma (1-D)} / (8 gamma^2 eps (1-D))."""
    D = np.asarray(D, dtype=float)
    return as_scalar_if_0d(np.exp(2.0 * gamma * (1.0 - D)) / (8.0 * gamma**2 * epsilon * (1.0 - D)))


# ---------------------------------------------------------------------------
# classically allowed motion and peak finding


def allowed_region_time(x, spec: WavePacketSpec, potential, m=1.0):
    """Classical time m * int_{x0}^{x} dx' / sqrt(k0^2 - 2 m V(x')).

    ``potential`` is a :class:`PiecewisePotential` (integrated exactly segment by
    segment) or a callable V(x) (adaptive quadrature).
    """
    k0, x0 = spec.k0, spec.x0
    x = float(x)
    lo, hi = min(x0, x), max(x0, x)
    sign = 1.0 if x >= x0 else -1.0
    if isinstance(potential, PiecewisePotential):
        cuts = {lo, hi}
        for a_, b_, _ in potential.regions():
            cuts.update(c for c in (a_, b_) if lo < c < hi)
        cuts = sorted(cuts)
        total = 0.0
        for left, right in zip(cuts, cuts[1:]):
            v = float(potential(0.5 * (left + right)))
            p2 = k0 * k0 - 2.0 * m * v
            if p2 <= 0:
                raise DomainError(f"turning point crossed in ({left}, {right})")
            total += (right - left) / math.sqrt(p2)
        return sign * m * total
    probe = np.linspace(lo, hi, 2001)
    if np.any(k0 * k0 - 2.0 * m * np.asarray(potential(probe)) <= 0):
        raise DomainError("turning point crossed between x0 and x")
    val, _ = integrate.quad(lambda s: 1.0 / math.sqrt(k0 * k0 - 2.0 * m * potential(s)),
                            lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
    return sign * m * val


def argmax_tau(x, density: Callable, taus):
    """Detection time maximizing ``density(x, taus)`` at fixed position.

    Grid scan followed by a three-point parabolic refinement; ties go to the
    earliest time.
    """
    taus = np.asarray(taus, dtype=float)
    vals = np.asarray(density(x, taus), dtype=float)
    top = float(np.max(vals))
    if not top > 0 or (top - float(np.min(vals))) < 1e-6 * abs(top):
        raise FlatDensityError(f"no peak in density at x={x!r} on the scanned window")
    i = int(np.argmax(vals))
    if i == 0 or i == len(taus) - 1:
        return float(taus[i])
    t0, t1, t2 = taus[i - 1 : i + 2]
    v0, v1, v2 = vals[i - 1 : i + 2]
    if v2 == v1 or v0 == v1:
        # flat top: keep the earliest maximal sample
        return float(t1)
    num = (t1 - t0) ** 2 * (v1 - v2) - (t1 - t2) ** 2 * (v1 - v0)
    den = (t1 - t0) * (v1 - v2) - (t1 - t2) * (v1 - v0)
    if den == 0:
        return float(t1)
    return float(t1 - 0.5 * num / den)
