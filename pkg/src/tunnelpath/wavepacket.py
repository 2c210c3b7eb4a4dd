"""Initial wave packets and their evolution through the barrier.

The packet is prepared on the left of the barrier with momentum amplitude

    psi0~(k) = phi~(k - k0) e^{-i k x0},

and evolved in the basis of left-incident scattering states,

    psi_tau(x) = int dk psi0~(k) f_{k+}(x) e^{-i k^2 tau / (2m)}.

The integral runs over a Gauss-Legendre mesh covering k0 +- n sigma_p (truncated
at k > 0).  A narrow-band saddle-point version linearizes the phase about k0.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._numerics import as_scalar_if_0d, gauss_legendre
from .errors import ConvergenceWarning, DomainError, PacketWarning
from .scattering import SQRT_2PI, BarrierParams, _fplus_any

DEFAULT_NODES = 257
DEFAULT_WIDTH = 6.0
# doubling check: relative change (to the peak modulus) that triggers a warning
CONVERGENCE_RTOL = 1e-6
NARROW_BAND_RATIO = 0.1
# |x0 + a| below this many sigma_x counts as overlapping the barrier
SEPARATION_SIGMAS = 5.0
_CHUNK = 4096


class Envelope(enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class WavePacketSpec:
    """Packet centred at ``x0`` with mean momentum ``k0`` and momentum spread ``sigma_p``."""

    x0: float
    k0: float
    sigma_p: float
    envelope: Envelope = Envelope.GAUSSIAN

    def __post_init__(self):
        if not math.isfinite(self.x0):
            raise DomainError(f"x0 must be finite, got {self.x0!r}")
        if not (self.k0 > 0 and math.isfinite(self.k0)):
            raise DomainError(f"k0 must be finite and > 0, got {self.k0!r}")
        if not (self.sigma_p > 0 and math.isfinite(self.sigma_p)):
            raise DomainError(f"sigma_p must be finite and > 0, got {self.sigma_p!r}")
        env = Envelope(self.envelope)
        object.__setattr__(self, "envelope", env)
        if self.sigma_p / self.k0 > NARROW_BAND_RATIO:
            warnings.warn(
                f"sigma_p/k0 = {self.sigma_p / self.k0:.3g} exceeds {NARROW_BAND_RATIO}; "
                "narrow-band approximations degrade",
                PacketWarning,
                stacklevel=2,
            )

    @property
    def sigma_x(self):
        return 1.0 / (2.0 * self.sigma_p)

    def check_against(self, b: BarrierParams):
        """Validate the packet placement relative to the barrier ``b``."""
        if not b.trivial and self.x0 >= -b.a:
            raise DomainError(f"x0={self.x0!r} must lie left of the barrier (x0 < -a = {-b.a!r})")
        if abs(self.x0 + b.a) < SEPARATION_SIGMAS * self.sigma_x and not b.trivial:
            warnings.warn(
                f"|x0 + a| = {abs(self.x0 + b.a):.3g} is not large against "
                f"sigma_x = {self.sigma_x:.3g}; the packet overlaps the barrier",
                PacketWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class WaveFieldSample:
    x: float
    tau: float
    psi: complex


@dataclass(frozen=True)
class MomentumGrid:
    """Quadrature nodes ``k`` and positive weights ``w``."""

    k: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.k)


def envelope_momentum(p, sigma_p):
    """phi~(p) = (2 pi sigma_p^2)^{-1/4} exp(-p^2 / (4 sigma_p^2)); |phi~|^2 integrates to 1."""
    p = np.asarray(p, dtype=float)
    return (2.0 * math.pi * sigma_p**2) ** -0.25 * np.exp(-(p * p) / (4.0 * sigma_p**2))


def envelope_position(y, sigma_p):
    """phi(y) = (2 sigma_p^2 / pi)^{1/4} exp(-sigma_p^2 y^2), the Fourier partner of phi~."""
    y = np.asarray(y, dtype=float)
    return (2.0 * sigma_p**2 / math.pi) ** 0.25 * np.exp(-(sigma_p * y) ** 2)


def momentum_grid(spec: WavePacketSpec, n=DEFAULT_NODES, width=DEFAULT_WIDTH) -> MomentumGrid:
    if n < 2:
        raise DomainError("need at least two momentum nodes")
    lo = max(spec.k0 - width * spec.sigma_p, 0.0)
    hi = spec.k0 + width * spec.sigma_p
    k, w = gauss_legendre(lo, hi, n)
    return MomentumGrid(k, w)


def momentum_amplitude(spec: WavePacketSpec, k):
    """psi0~(k) = phi~(k - k0) e^{-i k x0} for k > 0."""
    k = np.asarray(k, dtype=float)
    if np.any(~(k > 0)):
        raise DomainError("momentum must be > 0")
    return as_scalar_if_0d(envelope_momentum(k - spec.k0, spec.sigma_p) * np.exp(-1j * k * spec.x0))


def initial_state(spec: WavePacketSpec, x):
    """Free-space initial wave function psi0(x) = phi(x - x0) e^{i k0 (x - x0)}."""
    y = np.asarray(x, dtype=float) - spec.x0
    return as_scalar_if_0d(envelope_position(y, spec.sigma_p) * np.exp(1j * spec.k0 * y))


def _weighted_amplitudes(spec, grid):
    return grid.w * momentum_amplitude(spec, grid.k)


def _evolve_points(spec, b, x, tau, grid):
    c = _weighted_amplitudes(spec, grid)
    k = grid.k
    out = np.empty(x.shape, dtype=complex)
    xf, tf, of = x.ravel(), tau.ravel(), out.ravel()
    for s in range(0, xf.size, _CHUNK):
        xs, ts = xf[s : s + _CHUNK], tf[s : s + _CHUNK]
        f = _fplus_any(k[:, None], xs[None, :], b)
        f *= np.exp(-0.5j * (k * k)[:, None] * ts[None, :] / b.m)
        of[s : s + _CHUNK] = c @ f
    return out


def _check_doubling(coarse, fine, what):
    scale = float(np.max(np.abs(fine))) if fine.size else 0.0
    if scale == 0.0:
        return
    change = float(np.max(np.abs(fine - coarse))) / scale
    if change > CONVERGENCE_RTOL:
        warnings.warn(
            f"{what}: doubling the node count changed the result by {change:.2e} (relative)",
            ConvergenceWarning,
            stacklevel=3,
        )


def evolve_exact(spec: WavePacketSpec, b: BarrierParams, x, tau, n=DEFAULT_NODES,
                 width=DEFAULT_WIDTH, check=False):
    """psi_tau(x) by momentum quadrature over the exact scattering states.

    ``x`` and ``tau`` broadcast against each other.  With ``check=True`` the
    quadrature is repeated with twice the nodes and a :class:`ConvergenceWarning`
    is issued if the two disagree by more than 1e-6 of the peak modulus.
    """
    spec.check_against(b)
    x, tau = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(tau, dtype=float))
    psi = _evolve_points(spec, b, x, tau, momentum_grid(spec, n, width))
    if check:
        fine = _evolve_points(spec, b, x, tau, momentum_grid(spec, 2 * n, width))
        _check_doubling(psi, fine, "evolve_exact")
        psi = fine
    return as_scalar_if_0d(psi)


def evolve_grid(spec: WavePacketSpec, b: BarrierParams, xs, taus, n=DEFAULT_NODES,
                width=DEFAULT_WIDTH):
    """psi on the outer product of ``xs`` and ``taus``, shape (len(xs), len(taus))."""
    spec.check_against(b)
    grid = momentum_grid(spec, n, width)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    c = _weighted_amplitudes(spec, grid)
    f = _fplus_any(grid.k[:, None], xs[None, :], b) * c[:, None]
    e = np.exp(-0.5j * (grid.k * grid.k)[:, None] * taus[None, :] / b.m)
    return f.T @ e


def evolve_saddle(spec: WavePacketSpec, b: BarrierParams, x, tau):
    """Narrow-band approximation to psi_tau(x) for x inside or beyond the barrier.

    Linearizing theta_k(x) and k^2/2m about k0 turns the momentum integral into
    the position-space envelope:

        psi ~ sqrt(2 pi) phi(omega - x0 - k0 tau / m) e^{r + i theta - i k0 x0 - i k0^2 tau / 2m}
    """
    from .quasiclassical import phase_data

    spec.check_against(b)
    x, tau = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(tau, dtype=float))
    k0, m = spec.k0, b.m
    xu, inv = np.unique(x, return_inverse=True)
    pd = phase_data(k0, xu, b)
    r = np.atleast_1d(pd.r)[inv].reshape(x.shape)
    th = np.atleast_1d(pd.theta)[inv].reshape(x.shape)
    om = np.atleast_1d(pd.omega)[inv].reshape(x.shape)
    env = SQRT_2PI * envelope_position(om - spec.x0 - k0 * tau / m, spec.sigma_p)
    phase = th - k0 * spec.x0 - 0.5 * k0 * k0 * tau / m
    return as_scalar_if_0d(env * np.exp(r + 1j * phase))


def born_density(psi):
    """|psi|^2."""
    psi = np.asarray(psi)
    return as_scalar_if_0d(psi.real**2 + psi.imag**2)
