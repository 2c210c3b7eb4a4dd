"""Small numerical helpers: removable-singularity functions and quadrature meshes."""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

_SERIES_CUTOFF = 1e-4


def sinhc(z):
    """sinh(z)/z, finite at z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 + z2 / 6.0 + z2 * z2 / 120.0, np.sinh(safe) / safe)


def tanhc(z):
    """tanh(z)/z, finite at z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0, np.tanh(safe) / safe)


def sech(z):
    """1/cosh(z) without overflow for large |z|."""
    z = np.abs(np.asarray(z, dtype=float))
    e = np.exp(-z)
    return 2.0 * e / (1.0 + e * e)


def gauss_legendre(lo, hi, n):
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    y, w = leggauss(n)
    half = 0.5 * (hi - lo)
    return 0.5 * (hi + lo) + half * y, half * w


def as_scalar_if_0d(arr):
    arr = np.asarray(arr)
    return arr[()] if arr.ndim == 0 else arr
