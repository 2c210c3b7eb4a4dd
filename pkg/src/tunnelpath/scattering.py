"""Stationary scattering for the symmetric square barrier, with a transfer-matrix oracle.

Units: hbar = 1.  The barrier occupies [-a, a] with height V0.  Scattering states
are delta-normalized in k, so every plane wave carries a 1/sqrt(2*pi) factor:

    f_{k+}(x) = (e^{ikx} + R_k e^{-ikx}) / sqrt(2 pi)      x < -a
              = e^{ika} T_k [cosh l(a-x) - (ik/l) sinh l(a-x)] / sqrt(2 pi)
              = T_k e^{ikx} / sqrt(2 pi)                   x > a

with l = sqrt(2 m V0 - k^2).  The hyperbolics are always divided through by
cosh(2 l a) before evaluation, which keeps opaque barriers finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numerics import as_scalar_if_0d, sech, sinhc, tanhc
from .errors import DomainError, IllConditionedError

SQRT_2PI = math.sqrt(2.0 * math.pi)

# above this opacity the interior hyperbolics go through decaying exponentials
_OPAQUE_GAMMA = 20.0
# transfer-matrix coefficient magnitude treated as overflow
_TM_GUARD = 1e250


@dataclass(frozen=True)
class BarrierParams:
    """Square barrier of height ``V0`` on ``[-a, a]`` for a particle of mass ``m``."""

    V0: float
    a: float
    m: float = 1.0

    def __post_init__(self):
        if not (self.V0 >= 0 and math.isfinite(self.V0)):
            raise DomainError(f"V0 must be finite and >= 0, got {self.V0!r}")
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise DomainError(f"a must be finite and >= 0, got {self.a!r}")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise DomainError(f"m must be finite and > 0, got {self.m!r}")

    @classmethod
    def from_dimensionless(cls, gamma, epsilon, k0=1.0, m=1.0):
        """Barrier for which a particle of momentum ``k0`` sees opacity ``gamma``
        and energy ratio ``epsilon``."""
        if not gamma > 0:
            raise DomainError(f"gamma must be > 0, got {gamma!r}")
        if not 0 < epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
        V0 = k0 * k0 / (2.0 * m * epsilon)
        lam = k0 * math.sqrt((1.0 - epsilon) / epsilon)
        return cls(V0=V0, a=gamma / lam, m=m)

    @property
    def trivial(self):
        """True when there is no barrier at all."""
        return self.V0 == 0 or self.a == 0

    @property
    def k_threshold(self):
        return math.sqrt(2.0 * self.m * self.V0)

    def lam(self, k):
        return kappa(k, self)

    def gamma(self, k):
        return kappa(k, self) * self.a

    def epsilon(self, k):
        k = np.asarray(k, dtype=float)
        return as_scalar_if_0d(k * k / (2.0 * self.m * self.V0))

    def potential(self):
        return PiecewisePotential.square(self)


@dataclass(frozen=True)
class ScatteringAmplitudes:
    T: complex
    R: complex
    k: float

    @property
    def unitarity_defect(self):
        return abs(self.T) ** 2 + abs(self.R) ** 2 - 1.0


@dataclass(frozen=True)
class PiecewisePotential:
    """Piecewise-constant potential; zero outside the union of the segments.

    ``segments`` holds ``(lo, hi, height)`` triples.
    """

    segments: tuple = ()

    def __post_init__(self):
        segs = tuple((float(lo), float(hi), float(v)) for lo, hi, v in self.segments)
        for lo, hi, v in segs:
            if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(v)):
                raise DomainError("segment bounds and heights must be finite")
            if not hi > lo:
                raise DomainError(f"empty or reversed segment ({lo}, {hi})")
        for (_, hi, _), (lo, _, _) in zip(segs, segs[1:]):
            if lo < hi:
                raise DomainError("segments must be ordered and non-overlapping")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def square(cls, b: BarrierParams):
        if b.trivial:
            return cls(())
        return cls(((-b.a, b.a, b.V0),))

    @classmethod
    def from_steps(cls, edges: Sequence[float], heights: Sequence[float]):
        """Contiguous segments between consecutive ``edges``."""
        if len(edges) != len(heights) + 1:
            raise DomainError("need len(edges) == len(heights) + 1")
        return cls(tuple(zip(edges[:-1], edges[1:], heights)))

    @property
    def extent(self):
        if not self.segments:
            return (0.0, 0.0)
        return (self.segments[0][0], self.segments[-1][1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for lo, hi, v in self.segments:
            out = np.where((x >= lo) & (x <= hi), v, out)
        return as_scalar_if_0d(out)

    def regions(self):
        """Contiguous cover of the support, gaps filled with zero height."""
        out = []
        for lo, hi, v in self.segments:
            if out and lo > out[-1][1]:
                out.append((out[-1][1], lo, 0.0))
            out.append((lo, hi, v))
        return out


def kappa(k, b: BarrierParams):
    """Decay rate sqrt(2 m V0 - k^2) inside the barrier."""
    k = np.asarray(k, dtype=float)
    z = 2.0 * b.m * b.V0 - k * k
    if np.any(z <= 0):
        raise DomainError("k^2 >= 2 m V0: above-barrier momentum has no real decay rate")
    return as_scalar_if_0d(np.sqrt(z))


def _check_tunneling(k, b):
    k = np.asarray(k, dtype=float)
    if np.any(~(k > 0)):
        raise DomainError("momentum must be > 0")
    if not b.trivial and np.any(k * k > 2.0 * b.m * b.V0 * (1.0 + 1e-12)):
        raise DomainError("above-barrier momentum; closed forms cover k^2 <= 2 m V0 only")
    return k


class _Branch:
    """Per-momentum pieces shared by T, R and the interior eigenfunction.

    T = e^{-2ika} tn / den,  R = e^{-2ika} rn / den.  Momenta below the barrier
    top use the cosh(2la)-normalized form; those above it use the oscillatory
    continuation l -> i q.
    """

    def __init__(self, k, b):
        self.k = k
        self.b = b
        a, m = b.a, b.m
        z = 2.0 * m * b.V0 - k * k
        self.below = z >= 0
        lam = np.sqrt(np.abs(z))
        self.lam = lam
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # below: den = 1 + (i/2)(l/k tanh2g - (k/l) tanh2g)
            g2 = 2.0 * lam * a
            t2 = np.tanh(g2)
            k_over_l_t2 = k * 2.0 * a * tanhc(g2)
            den_b = 1.0 + 0.5j * (lam / k * t2 - k_over_l_t2)
            tn_b = sech(g2) + 0j
            rn_b = -0.5j * (lam / k * t2 + k_over_l_t2)
            # above: den = cos2qa - (i/2)(q/k + k/q) sin2qa
            c2 = np.cos(g2)
            s2 = np.sin(g2)
            k_over_q_s2 = k * 2.0 * a * np.sinc(g2 / np.pi)
            den_a = c2 - 0.5j * (lam / k * s2 + k_over_q_s2)
            tn_a = np.ones_like(den_a)
            rn_a = 0.5j * (lam / k * s2 - k_over_q_s2)
        self.den = np.where(self.below, den_b, den_a)
        self.tn = np.where(self.below, tn_b, tn_a)
        self.rn = np.where(self.below, rn_b, rn_a)
        self.phase = np.exp(-2j * k * a)

    @property
    def T(self):
        return self.phase * self.tn / self.den

    @property
    def R(self):
        return self.phase * self.rn / self.den

    def interior(self, u):
        """e^{ika} T [cosh lu - (ik/l) sinh lu] at depth u = a - x, without 1/sqrt(2pi)."""
        k, lam, a = self.k, self.lam, self.b.a
        gam = lam * a
        with np.errstate(over="ignore", invalid="ignore"):
            # below the top, both pieces are divided by cosh(2 gamma)
            opaque = gam > _OPAQUE_GAMMA
            lu = lam * u
            norm = 1.0 + np.exp(-4.0 * gam)
            ep = np.exp(lu - 2.0 * gam)
            em = np.exp(-lu - 2.0 * gam)
            c_op = (ep + em) / norm
            s_op = (ep - em) / (norm * np.where(lam > 0, lam, 1.0))
            sg = sech(2.0 * gam)
            c_th = np.cosh(np.where(opaque, 0.0, lu)) * sg
            s_th = u * sinhc(np.where(opaque, 0.0, lu)) * sg
            c_b = np.where(opaque, c_op, c_th)
            s_b = np.where(opaque, s_op, s_th)
            c_a = np.cos(lu)
            s_a = u * np.sinc(lu / np.pi)
        c = np.where(self.below, c_b, c_a)
        s = np.where(self.below, s_b, s_a)
        return np.exp(-1j * k * a) * (c - 1j * k * s) / self.den


def _amplitudes_any(k, b):
    """(T, R) for any k > 0, including above the barrier top."""
    k = np.asarray(k, dtype=float)
    if b.trivial:
        return np.ones_like(k, dtype=complex), np.zeros_like(k, dtype=complex)
    br = _Branch(k, b)
    return br.T, br.R


def _fplus_any(k, x, b):
    """f_{k+}(x) broadcast over k and x, for any k > 0."""
    k, x = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(x, dtype=float))
    if b.trivial:
        return np.exp(1j * k * x) / SQRT_2PI
    br = _Branch(k, b)
    a = b.a
    left = (np.exp(1j * k * x) + br.R * np.exp(-1j * k * x)) / SQRT_2PI
    right = br.T * np.exp(1j * k * x) / SQRT_2PI
    inside = br.interior(np.clip(a - x, 0.0, 2.0 * a)) / SQRT_2PI
    return np.where(x < -a, left, np.where(x > a, right, inside))


def transmission_amplitude(k, b: BarrierParams):
    """Transmission amplitude T_k for a right-moving particle.

    Accepts 0 < k^2 <= 2 m V0; at the threshold the removable singularity in
    (l/k - k/l) sinh 2la is taken through its limit -2ka.
    """
    k = _check_tunneling(k, b)
    return as_scalar_if_0d(_amplitudes_any(k, b)[0])


def reflection_amplitude(k, b: BarrierParams):
    """Reflection amplitude R_k = -(i/2)(l/k + k/l) sinh(2la) T_k."""
    k = _check_tunneling(k, b)
    return as_scalar_if_0d(_amplitudes_any(k, b)[1])


def scattering_amplitudes(k: float, b: BarrierParams) -> ScatteringAmplitudes:
    k = float(_check_tunneling(k, b))
    T, R = _amplitudes_any(k, b)
    return ScatteringAmplitudes(T=complex(T), R=complex(R), k=k)


def eigenfunction_plus(k, x, b: BarrierParams):
    """Scattering state incident from the left, f_{k+}(x)."""
    k = _check_tunneling(k, b)
    return as_scalar_if_0d(_fplus_any(k, x, b))


def eigenfunction_minus(k, x, b: BarrierParams):
    """Scattering state incident from the right, f_{k-}(x) = f_{k+}(-x)."""
    return eigenfunction_plus(k, -np.asarray(x, dtype=float), b)


# ---------------------------------------------------------------------------
# transfer-matrix oracle


def _tm_coefficients(p: PiecewisePotential, k: float, m: float):
    """Plane-wave coefficients region by region, propagated right to left.

    Region j holds A_j e^{iq_j(x-c_j)} + B_j e^{-iq_j(x-c_j)} with c_j its left
    edge (c = 0 for the two semi-infinite free regions).  Outgoing amplitude on
    the right is fixed to 1 and everything is rescaled by the incident A_0 at
    the end.
    """
    if not k > 0:
        raise DomainError("momentum must be > 0")
    E2m = k * k
    regs = p.regions()
    # (lo, hi, q, c); semi-infinite ends carry lo/hi = +-inf
    layout = [(-math.inf, regs[0][0] if regs else 0.0, complex(k), 0.0)]
    for lo, hi, v in regs:
        q = np.sqrt(complex(E2m - 2.0 * m * v))
        if q == 0:
            raise DomainError(f"momentum sits exactly at the top of segment ({lo}, {hi})")
        layout.append((lo, hi, q, lo))
    layout.append((regs[-1][1] if regs else 0.0, math.inf, complex(k), 0.0))

    coeffs = [None] * len(layout)
    coeffs[-1] = (1.0 + 0j, 0.0 + 0j)
    for j in range(len(layout) - 2, -1, -1):
        _, xb, q_l, c_l = layout[j]
        _, _, q_r, c_r = layout[j + 1]
        A_r, B_r = coeffs[j + 1]
        er = np.exp(1j * q_r * (xb - c_r))
        psi = A_r * er + B_r / er
        dpsi = 1j * q_r * (A_r * er - B_r / er)
        el = np.exp(1j * q_l * (xb - c_l))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            A_l = 0.5 * (psi + dpsi / (1j * q_l)) / el
            B_l = 0.5 * (psi - dpsi / (1j * q_l)) * el
        if not (abs(A_l) < _TM_GUARD and abs(B_l) < _TM_GUARD):
            raise IllConditionedError(
                "transfer-matrix coefficients exceed the overflow guard; barrier too opaque"
            )
        coeffs[j] = (A_l, B_l)
    A0 = coeffs[0][0]
    coeffs = [(A / A0, B / A0) for A, B in coeffs]
    return layout, coeffs


def transfer_matrix_solve(p: PiecewisePotential, k: float, m: float = 1.0) -> ScatteringAmplitudes:
    """(T, R) for an arbitrary piecewise-constant potential by 2x2 propagation.

    Works at any k > 0, above or below the segment heights.
    """
    _, coeffs = _tm_coefficients(p, float(k), m)
    return ScatteringAmplitudes(T=complex(coeffs[-1][0]), R=complex(coeffs[0][1]), k=float(k))


def transfer_matrix_wavefunction(p: PiecewisePotential, k: float, x, m: float = 1.0):
    """Left-incident scattering state from the transfer-matrix coefficients."""
    layout, coeffs = _tm_coefficients(p, float(k), m)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    flat_x = x.reshape(-1)
    flat = out.reshape(-1)
    for i, xi in enumerate(flat_x):
        for (lo, hi, q, c), (A, B) in zip(layout, coeffs):
            if lo <= xi <= hi:
                e = np.exp(1j * q * (xi - c))
                flat[i] = (A * e + B / e) / SQRT_2PI
                break
    return as_scalar_if_0d(out)
