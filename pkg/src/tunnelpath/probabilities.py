"""Detection-time densities and integrated detection probabilities for ideal detectors.

Every two-momentum density is a Hermitian quadratic form.  With quadrature
amplitudes a_i = w_i psi0~(k_i) and v_i(tau) = a_i e^{-i eps_i tau}, a density is

    P(tau) = sum_ij v_i M_ij conj(v_j),     M_ij = g_i conj(g_j) K(eps_i, eps_j),

with K real and symmetric, so P is real by construction.  The kernels are

    arrival at L > a      g = T e^{ikL}/sqrt(2pi),  K = sqrt((eps + eps')/m)
    first detector at x   g = f_{k+}(x),            K = sqrt((eps + eps')/m)
    post-selected at x    g = f_{k+}(x),            K = F+(x, (eps + eps')/2)

where F+(x, E) = 2 pi (k/m) |T* f_{k+}(x) + R* f_{k-}(x)|^2 at k = sqrt(2 m E).
For a free particle all three reduce to the same unit-normalized arrival density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from ._numerics import as_scalar_if_0d, gauss_legendre
from .errors import ConvergenceWarning, DomainError, NormalizationWarning
from .scattering import SQRT_2PI, BarrierParams, _amplitudes_any, _fplus_any
from .wavepacket import (
    DEFAULT_NODES,
    DEFAULT_WIDTH,
    WavePacketSpec,
    evolve_exact,
    momentum_amplitude,
    momentum_grid,
)

CONVERGENCE_RTOL = 1e-6
NOISE_FLOOR = 1e-8
IMAG_TOL = 1e-10
PROB_TOL = 1e-8
JOINT_ENERGY_NODES = 24


@dataclass(frozen=True)
class DetectorPair:
    """First detector at ``x_first`` and second detector at ``L_second`` beyond the barrier."""

    x_first: float
    L_second: float

    def check_against(self, b: BarrierParams):
        if not self.L_second > b.a:
            raise DomainError(f"L_second={self.L_second!r} must exceed a={b.a!r}")
        if not self.x_first < self.L_second:
            raise DomainError("x_first must lie before L_second")


@dataclass
class ProbabilityTable:
    """Density samples on named axes plus the integrated detection probabilities.

    ``P_ee`` is always the complement of the other three, so the four joint
    probabilities sum to one exactly.
    """

    P_tot: float
    P_pp: float
    P_pe: float
    P_ep: float
    axes: dict = field(default_factory=dict)
    densities: dict = field(default_factory=dict)

    @property
    def P_ee(self):
        return 1.0 - self.P_pp - self.P_pe - self.P_ep

    def scalars(self):
        return {
            "P_tot": self.P_tot,
            "P_pp": self.P_pp,
            "P_pe": self.P_pe,
            "P_ep": self.P_ep,
            "P_ee": self.P_ee,
        }


# ---------------------------------------------------------------------------
# quadratic-form machinery


def _energies(k, m):
    return 0.5 * k * k / m


def _quadratic_form(a, g, K, eps, tau):
    """Real density sum_ij v_i g_i conj(g_j) K_ij conj(v_j) over ``tau``."""
    tau = np.atleast_1d(tau)
    u = a * g
    V = u[:, None] * np.exp(-1j * eps[:, None] * tau[None, :])
    P = np.einsum("it,it->t", V, K @ np.conj(V))
    # |u|^T |K| |u| bounds |P| at every tau; residues are measured against it
    bound = float(np.abs(u) @ (np.abs(K) @ np.abs(u)))
    if P.size and float(np.max(np.abs(P.imag))) > IMAG_TOL * bound:
        raise ArithmeticError("density lost hermiticity; imaginary residue above tolerance")
    return P.real, bound


def _clamp(P, what, scale):
    if P.size and float(np.min(P)) < -NOISE_FLOOR * scale:
        warnings.warn(
            f"{what}: negative excursion {float(np.min(P)):.3e} exceeds the noise floor",
            ConvergenceWarning,
            stacklevel=3,
        )
    return np.maximum(P, 0.0)


def _sqrt_kernel(eps, m):
    return np.sqrt((eps[:, None] + eps[None, :]) / m)


def _density(spec, b, tau, n, width, check, build, what):
    """Evaluate ``build(k, a) -> (g, K)`` as a density, optionally with a doubling check."""

    def run(nodes):
        grid = momentum_grid(spec, nodes, width)
        a = grid.w * momentum_amplitude(spec, grid.k)
        g, K = build(grid.k)
        return _quadratic_form(a, g, K, _energies(grid.k, b.m), tau)

    tau_arr = np.asarray(tau, dtype=float)
    P, bound = run(n)
    if check:
        fine, bound = run(2 * n)
        scale = float(np.max(np.abs(fine)))
        if scale > 0 and float(np.max(np.abs(fine - P))) > CONVERGENCE_RTOL * scale:
            warnings.warn(
                f"{what}: doubling the node count changed the result by "
                f"{float(np.max(np.abs(fine - P))) / scale:.2e} (relative)",
                ConvergenceWarning,
                stacklevel=3,
            )
        P = fine
    P = _clamp(P, what, bound)
    return as_scalar_if_0d(P.reshape(tau_arr.shape))


# ---------------------------------------------------------------------------
# kernels


def _h(k, x, b):
    """T* f_{k+}(x) + R* f_{k-}(x): amplitude, at x, of the state that leaves to the right."""
    T, R = _amplitudes_any(k, b)
    return np.conj(T) * _fplus_any(k, x, b) + np.conj(R) * _fplus_any(k, -np.asarray(x), b)


def _kernel_any(x, E, b):
    E = np.asarray(E, dtype=float)
    k = np.sqrt(2.0 * b.m * E)
    h = _h(k, x, b)
    return 2.0 * math.pi * k / b.m * (h.real**2 + h.imag**2)


def postselected_kernel(x, E, b: BarrierParams):
    """F+(x, E): rate at which a particle found at x with energy E is later transmitted.

    The energy delta of the two-time kernel is resolved on the shell k = k' =
    sqrt(2 m E), which leaves 2 pi (k/m) |T* f_{k+}(x) + R* f_{k-}(x)|^2.  For a
    free particle this is k/m at every x.
    """
    E = np.asarray(E, dtype=float)
    if np.any(~(E > 0)):
        raise DomainError("energy must be > 0")
    if not b.trivial:
        if np.any(E >= b.V0):
            raise DomainError("E >= V0: the kernel is defined for tunneling energies")
        if np.any(np.abs(np.asarray(x, dtype=float)) > b.a * (1.0 + 1e-12)):
            raise DomainError("position outside the barrier [-a, a]")
    return as_scalar_if_0d(_kernel_any(x, E, b))


# ---------------------------------------------------------------------------
# densities


def toa_density(L, t, spec: WavePacketSpec, b: BarrierParams, n=DEFAULT_NODES,
                width=DEFAULT_WIDTH, check=False):
    """Arrival-time density P(L, t) at a detector beyond the barrier."""
    if not L > b.a:
        raise DomainError(f"detector must sit beyond the barrier, L={L!r} <= a={b.a!r}")
    spec.check_against(b)

    def build(k):
        T = _amplitudes_any(k, b)[0]
        return T * np.exp(1j * k * L) / SQRT_2PI, _sqrt_kernel(_energies(k, b.m), b.m)

    return _density(spec, b, t, n, width, check, build, "toa_density")


def first_detector_density(x, tau, spec: WavePacketSpec, b: BarrierParams, n=DEFAULT_NODES,
                           width=DEFAULT_WIDTH, check=False):
    """Detection density P_1(x, tau) of the first detector, whatever the second one records."""
    spec.check_against(b)

    def build(k):
        return _fplus_any(k, x, b), _sqrt_kernel(_energies(k, b.m), b.m)

    return _density(spec, b, tau, n, width, check, build, "first_detector_density")


def postselected_density(x, tau, spec: WavePacketSpec, b: BarrierParams, n=DEFAULT_NODES,
                         width=DEFAULT_WIDTH, check=False):
    """Density P_ps(x, tau) of a detection at x followed by a transmitted detection."""
    if abs(x) > b.a * (1.0 + 1e-12) and not b.trivial:
        raise DomainError("position outside the barrier [-a, a]")
    spec.check_against(b)

    def build(k):
        eps = _energies(k, b.m)
        Emid = 0.5 * (eps[:, None] + eps[None, :])
        return _fplus_any(k, x, b), _kernel_any(x, Emid, b)

    return _density(spec, b, tau, n, width, check, build, "postselected_density")


def total_transmission_probability(spec: WavePacketSpec, b: BarrierParams, n=DEFAULT_NODES,
                                   width=DEFAULT_WIDTH):
    """P_tot = int dk |T_k|^2 |psi0~(k)|^2."""
    grid = momentum_grid(spec, n, width)
    T = _amplitudes_any(grid.k, b)[0]
    amp = np.abs(momentum_amplitude(spec, grid.k)) ** 2
    return float(np.sum(grid.w * np.abs(T) ** 2 * amp))


# ---------------------------------------------------------------------------
# two-detector joint density


def _shell_kernel(x, L, s, E, b, n_phi):
    """F(L, s; x; E) on the energy shell eps + eps' = 2E, for an array of lags ``s``.

    With k = sqrt(4mE) cos(phi), k' = sqrt(4mE) sin(phi):

        F = 2m (2E/m)^{3/2} int_0^{pi/2} dphi conj(h_k) h_k' e^{i(k-k')L - i(eps-eps')s}

    and int ds F = F+(x, E).
    """
    m = b.m
    phi, w = gauss_legendre(0.0, 0.5 * math.pi, n_phi)
    q = math.sqrt(4.0 * m * E)
    k, kp = q * np.cos(phi), q * np.sin(phi)
    hk, hkp = _h(k, x, b), _h(kp, x, b)
    amp = w * np.conj(hk) * hkp * np.exp(1j * (k - kp) * L)
    de = 0.5 * (k * k - kp * kp) / m
    s = np.atleast_1d(s)
    vals = np.exp(-1j * de[:, None] * s[None, :])
    return 2.0 * m * (2.0 * E / m) ** 1.5 * (amp @ vals)


def joint_density(x, tau, L, t, spec: WavePacketSpec, b: BarrierParams, n=DEFAULT_NODES,
                  width=DEFAULT_WIDTH, n_energy=JOINT_ENERGY_NODES, n_phi=None):
    """P(x, tau; L, t): detection at x at time tau and then at L > a at time t.

    The shell kernel is tabulated at Chebyshev energies spanning the packet and
    interpolated onto the pair energies (eps_i + eps_j)/2, so that

        P = sum_e F_e(t - tau) Q_e(tau),   Q_e = sum_ij v_i f_i conj(f_j) l_e(E_ij) conj(v_j).

    The ideal-detector shell kernel is not a positive operator, so the result
    takes negative values away from the main peak and has support at t < tau.
    It is returned unclamped, which keeps int dt P = P_ps(x, tau) exact.  This
    is by far the most expensive density in the package.
    """
    pair = DetectorPair(x, L)
    pair.check_against(b)
    if abs(x) > b.a * (1.0 + 1e-12) and not b.trivial:
        raise DomainError("position outside the barrier [-a, a]")
    spec.check_against(b)
    tau, t = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(t, dtype=float))
    s = t - tau
    m = b.m
    grid = momentum_grid(spec, n, width)
    k = grid.k
    eps = _energies(k, m)
    a = grid.w * momentum_amplitude(spec, k)
    f = _fplus_any(k, x, b)

    e_lo, e_hi = float(eps[0]), float(eps[-1])
    j = np.arange(n_energy)
    nodes = 0.5 * (e_lo + e_hi) + 0.5 * (e_hi - e_lo) * np.cos((2 * j + 1) * math.pi / (2 * n_energy))
    Emid = 0.5 * (eps[:, None] + eps[None, :])

    if n_phi is None:
        smax = float(np.max(np.abs(s))) if s.size else 0.0
        n_phi = int(96 + 2.0 * (math.sqrt(4.0 * m * e_hi) * (abs(L) + abs(x)) + 2.0 * e_hi * smax))

    tau_u, tau_inv = np.unique(tau.ravel(), return_inverse=True)
    s_u, s_inv = np.unique(s.ravel(), return_inverse=True)
    out = np.zeros(tau.size)
    for e, E in enumerate(nodes):
        unit = np.zeros(n_energy)
        unit[e] = 1.0
        lag = BarycentricInterpolator(nodes, unit)(Emid)
        Q = _quadratic_form(a, f, lag, eps, tau_u)[0]
        F = _shell_kernel(x, L, s_u, E, b, n_phi)
        out += (F[s_inv] * Q[tau_inv]).real
    return as_scalar_if_0d(out.reshape(tau.shape))


# ---------------------------------------------------------------------------
# integrated probabilities


def _complement_check(table: ProbabilityTable):
    bad = {k: v for k, v in table.scalars().items() if v < -PROB_TOL or v > 1.0 + PROB_TOL}
    if bad:
        warnings.warn(
            "probabilities outside [0, 1]: "
            + ", ".join(f"{k}={v:.6g}" for k, v in sorted(bad.items())),
            NormalizationWarning,
            stacklevel=3,
        )


def joint_detection_probabilities(x, spec: WavePacketSpec, b: BarrierParams, monochromatic=False,
                                  n=DEFAULT_NODES, width=DEFAULT_WIDTH) -> ProbabilityTable:
    """Detected-by-both / first-only / second-only / neither probabilities.

    P_pp = (2 pi)^2 int |f_{k+}(x)|^2 |T* f_{k+}(x) + R* f_{k-}(x)|^2 |psi0~|^2
    P_pe = 2 pi int |f_{k+}(x)|^2 |psi0~|^2 - P_pp
    P_ep = int |T_k|^2 |psi0~|^2
    P_ee = 1 - P_pp - P_pe - P_ep

    With ``monochromatic=True`` the integrals collapse onto k0.  P_ep counts every
    transmitted particle, so for a transparent barrier the complement goes
    negative and a :class:`NormalizationWarning` is issued.
    """
    if abs(x) > b.a * (1.0 + 1e-12) and not b.trivial:
        raise DomainError("position outside the barrier [-a, a]")
    if monochromatic:
        k = np.array([spec.k0])
        wts = np.array([1.0])
    else:
        grid = momentum_grid(spec, n, width)
        k = grid.k
        wts = grid.w * np.abs(momentum_amplitude(spec, k)) ** 2
    T = _amplitudes_any(k, b)[0]
    f2 = np.abs(_fplus_any(k, x, b)) ** 2
    h2 = np.abs(_h(k, x, b)) ** 2
    two_pi = 2.0 * math.pi
    p_first = float(np.sum(wts * two_pi * f2))
    p_pp = float(np.sum(wts * two_pi**2 * f2 * h2))
    p_tot = float(np.sum(wts * np.abs(T) ** 2))
    table = ProbabilityTable(P_tot=p_tot, P_pp=p_pp, P_pe=p_first - p_pp, P_ep=p_tot)
    _complement_check(table)
    return table


def exit_point_ratio(spec: WavePacketSpec, b: BarrierParams):
    """|1 + e^{2 i k0 a} R_{k0}|^2: F+(a, eps_{k0}) over the free flux k0/m.

    This is the constant by which post-selection rescales the first-detector
    density at the barrier exit.
    """
    R = _amplitudes_any(np.array([spec.k0]), b)[1][0]
    return float(abs(1.0 + np.exp(2j * spec.k0 * b.a) * R) ** 2)


# ---------------------------------------------------------------------------
# smeared position measurement followed by transmission


def vn_postselected_density(x, tau, spec: WavePacketSpec, b: BarrierParams, delta=None,
                            n_y=160, n_k=320, n=DEFAULT_NODES):
    """Tr[Pi_+ sqrt(P_x) rho_tau sqrt(P_x)] for a Gaussian position POVM of width ``delta``.

    chi(y) = sqrt(g_delta(y - x)) psi_tau(y) is the post-measurement state and
    Pi_+ = int dk |T_k|^2 |k,+><k,+| selects eventual transmission, so the density
    is int dk |T_k|^2 |<k,+|chi>|^2.  Momenta above the barrier top are included.
    ``delta`` defaults to one tenth of the barrier half-width (or of 1/k0 when
    the barrier is empty).
    """
    spec.check_against(b)
    if delta is None:
        delta = 0.1 * (b.a if b.a > 0 else 1.0 / spec.k0)
    if not delta > 0:
        raise DomainError("delta must be > 0")
    # sqrt(g) has standard deviation sqrt(2) delta
    half = 8.0 * math.sqrt(2.0) * delta
    y, wy = gauss_legendre(x - half, x + half, n_y)
    root_g = (2.0 * math.pi * delta**2) ** -0.25 * np.exp(-((y - x) ** 2) / (4.0 * delta**2))
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    psi = evolve_exact(spec, b, y[:, None], taus[None, :], n=n)
    chi = (wy * root_g)[:, None] * psi
    kmax = spec.k0 + 6.0 * DEFAULT_WIDTH * spec.sigma_p + 4.0 / delta
    k, wk = gauss_legendre(0.0, kmax, n_k)
    T = _amplitudes_any(k, b)[0]
    proj = np.conj(_fplus_any(k[:, None], y[None, :], b)) @ chi
    dens = (wk * np.abs(T) ** 2) @ (np.abs(proj) ** 2)
    return as_scalar_if_0d(dens.reshape(np.shape(tau)))
