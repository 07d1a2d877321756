"""Shared synthetic families for argument-principle tests."""
import numpy as np
from numpy.polynomial import Polynomial


def det_winding_oracle(f, contour, nodes=4096):
    """Winding number of det F along the contour by phase unwrapping."""
    pts = contour.points(nodes)
    phases = np.unwrap([np.angle(np.linalg.det(f(lam))) for lam in pts])
    closing = np.angle(np.linalg.det(f(pts[0]))) - phases[-1]
    closing = (closing + np.pi) % (2 * np.pi) - np.pi
    return round((phases[-1] + closing - phases[0]) / (2 * np.pi))


def planted_family(rng, n, zeros, decoys=()):
    """F(lam) = U diag(d_i(lam)) V with chosen zeros planted in the diagonal.

    ``zeros``/``decoys`` are (position, multiplicity) pairs; the analytic
    derivative comes from exact polynomial differentiation.
    """
    u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    polys = []
    for _ in range(n):
        c = 1.0 + 0.2 * rng.standard_normal() + 0.1j * rng.standard_normal()
        polys.append(Polynomial([c]))
    for idx, (z0, mult) in enumerate(tuple(zeros) + tuple(decoys)):
        slot = idx % n
        polys[slot] = polys[slot] * Polynomial([-z0, 1.0]) ** mult
    dpolys = [p.deriv() for p in polys]

    def f(lam):
        return u @ np.diag([p(lam) for p in polys]) @ v

    def fp(lam):
        return u @ np.diag([p(lam) for p in dpolys]) @ v

    return f, fp
