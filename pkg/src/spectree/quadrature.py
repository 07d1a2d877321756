"""Trapezoidal quadrature oracles on the circle.

These are the independent reference route for every closed-form coefficient:
equispaced trapezoid sums, which converge spectrally fast for smooth periodic
integrands.  They deliberately share no code with the closed forms they check.
"""
from __future__ import annotations

import math

import numpy as np


def circle_nodes(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def fourier_quadrature(u: complex, n: int, nodes: int = 2048) -> complex:
    """``(1/2pi) * int exp(i n t) / (2 - 2 cos t - u) dt`` by trapezoid."""
    t = circle_nodes(nodes)
    return complex(np.mean(np.exp(1j * n * t) / (2.0 - 2.0 * np.cos(t) - u)))


def sine_projected_quadrature(
    k: int, z: complex, j: int, l: int, nodes: int = 2048
) -> complex:
    """``(1/pi) * int (-2 sqrt(k) cos t + k + 1 - z)^{-1} sin((j+1)t) sin((l+1)t) dt``."""
    t = circle_nodes(nodes)
    den = -2.0 * math.sqrt(k) * np.cos(t) + (k + 1.0) - z
    vals = np.sin((j + 1) * t) * np.sin((l + 1) * t) / den
    return complex(2.0 * np.mean(vals))


def jacobi_symbol_quadrature(k: int, j: int, l: int, nodes: int = 2048) -> complex:
    """``(1/pi) * int 2 sqrt(k) cos(t) sin((j+1)t) sin((l+1)t) dt``."""
    t = circle_nodes(nodes)
    vals = 2.0 * math.sqrt(k) * np.cos(t) * np.sin((j + 1) * t) * np.sin((l + 1) * t)
    return complex(2.0 * np.mean(vals))


def cauchy_reconstruct(values: np.ndarray, radius: float, at: complex) -> np.ndarray:
    """Cauchy integral over ``|lam| = radius`` from equispaced samples.

    ``values`` has the sample index first; returns the interpolated value at
    the interior point ``at``.
    """
    n = values.shape[0]
    lam = radius * np.exp(1j * circle_nodes(n))
    weights = lam / (lam - at) / n
    return np.tensordot(weights, values, axes=(0, 0))
