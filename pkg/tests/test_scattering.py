import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tunnelpath import (
    BarrierParams,
    DomainError,
    IllConditionedError,
    PiecewisePotential,
    eigenfunction_minus,
    eigenfunction_plus,
    kappa,
    reflection_amplitude,
    scattering_amplitudes,
    transfer_matrix_solve,
    transfer_matrix_wavefunction,
    transmission_amplitude,
)

mp.mp.dps = 40


def mp_amplitudes(V0, a, k, m=1.0):
    """T and R from the unreduced hyperbolic expressions at 40 digits."""
    V0, a, k, m = map(mp.mpf, (V0, a, k, m))
    lam = mp.sqrt(2 * m * V0 - k * k)
    den = mp.cosh(2 * lam * a) + 0.5j * (lam / k - k / lam) * mp.sinh(2 * lam * a)
    T = mp.exp(-2j * k * a) / den
    R = -0.5j * (lam / k + k / lam) * mp.sinh(2 * lam * a) * T
    return complex(T), complex(R)


def test_half_energy_unit_opacity():
    b = BarrierParams.from_dimensionless(1.0, 0.5)
    assert abs(transmission_amplitude(1.0, b)) ** 2 == pytest.approx(1.0 / math.cosh(2.0) ** 2, rel=1e-13)


@pytest.mark.parametrize("gamma,eps", [(0.3, 0.2), (2.0, 0.1), (5.0, 0.9), (12.0, 0.5)])
def test_against_high_precision(gamma, eps):
    b = BarrierParams.from_dimensionless(gamma, eps)
    T, R = mp_amplitudes(b.V0, b.a, 1.0)
    assert transmission_amplitude(1.0, b) == pytest.approx(T, rel=1e-12)
    assert reflection_amplitude(1.0, b) == pytest.approx(R, rel=1e-12)


def test_trivial_barrier_transparent(free):
    amp = scattering_amplitudes(1.3, free)
    assert amp.T == 1 and amp.R == 0


def test_opaque_barrier_finite():
    b = BarrierParams.from_dimensionless(400.0, 0.3)
    T = transmission_amplitude(1.0, b)
    R = reflection_amplitude(1.0, b)
    assert np.isfinite(T) and abs(R) == pytest.approx(1.0, abs=1e-14)
    assert 0 <= abs(T) < 1e-300


@given(gamma=st.floats(1e-3, 60.0), eps=st.floats(1e-3, 0.999))
def test_unitarity_property(gamma, eps):
    b = BarrierParams.from_dimensionless(gamma, eps)
    assert scattering_amplitudes(1.0, b).unitarity_defect < 1e-12


def test_threshold_momentum_accepted():
    b = BarrierParams(V0=2.0, a=0.7)
    k = b.k_threshold
    amp = scattering_amplitudes(k, b)
    # at threshold the barrier interior is linear: T = e^{-2ika} / (1 - ika)
    assert amp.T == pytest.approx(np.exp(-2j * k * 0.7) / (1 - 1j * k * 0.7), rel=1e-10)


def test_above_barrier_rejected_by_public_api():
    b = BarrierParams(V0=1.0, a=1.0)
    with pytest.raises(DomainError):
        transmission_amplitude(2.0, b)
    with pytest.raises(DomainError):
        kappa(2.0, b)
    with pytest.raises(DomainError):
        transmission_amplitude(0.0, b)


def test_invalid_barrier():
    with pytest.raises(DomainError):
        BarrierParams(V0=-1.0, a=1.0)
    with pytest.raises(DomainError):
        BarrierParams.from_dimensionless(1.0, 1.5)


def test_oracle_agrees_square():
    b = BarrierParams.from_dimensionless(3.0, 0.4)
    amp = transfer_matrix_solve(PiecewisePotential.square(b), 1.0)
    assert amp.T == pytest.approx(transmission_amplitude(1.0, b), rel=1e-10)
    assert amp.R == pytest.approx(reflection_amplitude(1.0, b), rel=1e-10)


def test_oracle_wavefunction_matches_closed_form():
    b = BarrierParams.from_dimensionless(2.0, 0.3)
    x = np.linspace(-2 * b.a, 2 * b.a, 41)
    psi_tm = transfer_matrix_wavefunction(PiecewisePotential.square(b), 1.0, x)
    np.testing.assert_allclose(psi_tm, eigenfunction_plus(1.0, x, b), rtol=1e-9, atol=1e-14)


def test_oracle_ill_conditioned_guard():
    p = PiecewisePotential.from_steps([-300.0, 300.0], [50.0])
    with pytest.raises(IllConditionedError):
        transfer_matrix_solve(p, 1.0)


def test_oracle_step_sum_unitarity():
    # asymmetric two-step barrier: only the oracle applies
    p = PiecewisePotential.from_steps([-1.0, 0.2, 0.9], [2.0, 0.7])
    amp = transfer_matrix_solve(p, 0.8)
    assert amp.unitarity_defect < 1e-12


def test_eigenfunction_continuity():
    b = BarrierParams.from_dimensionless(2.5, 0.6)
    for edge in (-b.a, b.a):
        lo = eigenfunction_plus(1.0, edge * (1 - 1e-12) if edge > 0 else edge * (1 + 1e-12), b)
        hi = eigenfunction_plus(1.0, edge * (1 + 1e-12) if edge > 0 else edge * (1 - 1e-12), b)
        assert lo == pytest.approx(hi, rel=1e-9)


def test_minus_is_mirror():
    b = BarrierParams.from_dimensionless(1.5, 0.3)
    x = np.array([-2.0, -0.3, 0.1, 4.0]) * b.a
    np.testing.assert_allclose(eigenfunction_minus(1.0, x, b), eigenfunction_plus(1.0, -x, b))


def test_piecewise_regions_fill_gaps():
    p = PiecewisePotential.from_steps([-1.0, 0.0], [1.0])
    q = PiecewisePotential([(-2.0, -1.0, 1.0), (1.0, 2.0, 3.0)])
    assert q(0.0) == 0.0
    heights = [v for _, _, v in q.regions()]
    assert 0.0 in heights and p(-0.5) == 1.0
