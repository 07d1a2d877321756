"""Closed-form weighted resolvent kernel of the free tree operator.

The free operator ``-adjacency + (k+1)`` restricted to one invariant block
is a half-line Jacobi matrix with off-diagonal ``sqrt(k)``, whose resolvent
has an explicit kernel in the scaled variable

    u = (z + 2 sqrt(k) - (k+1)) / sqrt(k),   u = 4 sin^2(phi/2),

where the branch of ``phi`` is fixed so that ``|exp(i phi)| < 1`` away from
the band (decaying boundary values).  Writing ``xi = exp(i phi)``, the
block resolvent entries are

    g(j, l) = (1 / sqrt(k)) * (i xi^{|j-l|} - i xi^{j+l+2}) / (2 sin phi),

and the full kernel is the orthogonal sum of these blocks pushed back to
vertex space through the spherical basis.

Near a band edge the spectral parameter is re-parametrized by ``lam`` with
``u = lam**2`` and ``phi = 2 arcsin(lam/2)``; the upper half-plane in
``lam`` maps onto the physical side and the lower half-plane continues the
kernel across the edge onto the second sheet.

The scalar in front of the bracket is pinned by an independent quadrature
oracle; see :data:`KERNEL_PREFACTOR`.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .decomposition import SphericalBasis, build_spherical_basis
from .errors import (
    AssumptionViolated,
    BranchFailure,
    InvalidParameter,
    OnSpectrum,
    OutOfDisk,
    TruncationWarning,
)
from .operators import delta_floor, free_operator, free_operator_sparse, m_tilde
from .tree import TreeGraph, build_tree

#: Scalar multiplying each closed-form bracket, relative to the quadrature
#: normalization ``(1/pi) * integral over the circle``.  Fixed uniquely by the
#: calibration test (sine-projected coefficients against direct quadrature);
#: the rejected alternative ``0.5 * sqrt(2/pi)`` is off by ``sqrt(2*pi)``.
KERNEL_PREFACTOR = 1.0

#: default radius of the working punctured disk in the edge parameter
DEFAULT_DISK_RADIUS = 0.3


def t_minus(k: int) -> float:
    """Lower band edge ``-2 sqrt(k) + k + 1``."""
    return -2.0 * math.sqrt(k) + k + 1.0

def t_plus(k: int) -> float:
    """Upper band edge ``+2 sqrt(k) + k + 1``."""
    return 2.0 * math.sqrt(k) + k + 1.0


def disk_radius(k: int, delta: float) -> float:
    """Working radius ``min(delta/8, 0.3)`` of the punctured edge disk."""
    return min(delta / 8.0, DEFAULT_DISK_RADIUS)


@dataclass(frozen=True)
class SpectralPoint:
    """Coupled spectral coordinates ``(z, u, phi)`` with a committed branch.

    ``eiphi`` stores ``exp(i phi)`` and is the single source of truth for all
    branch-dependent quantities; ``lam`` is set when the point was built from
    the edge parametrization (``None`` for a plain spectral parameter), and
    ``threshold`` records which band edge the parametrization refers to.
    """

    k: int
    z: complex
    u: complex
    eiphi: complex
    lam: complex | None = None
    threshold: str = "minus"

    @property
    def phi(self) -> complex:
        return -1j * cmath.log(self.eiphi)

    @property
    def two_sin_phi(self) -> complex:
        return -1j * (self.eiphi - 1.0 / self.eiphi)

    def sheet_swapped(self) -> "SpectralPoint":
        """Same point with ``exp(i phi) -> exp(-i phi)`` (other sheet)."""
        return SpectralPoint(
            k=self.k, z=self.z, u=self.u, eiphi=1.0 / self.eiphi,
            lam=self.lam, threshold=self.threshold,
        )


def spectral_point_to_json(sp_: SpectralPoint) -> dict:
    """Wire form of a point: edge-parametrized points carry ``lambda``."""
    if sp_.lam is not None:
        return {
            "k": sp_.k,
            "lambda": {"re": sp_.lam.real, "im": sp_.lam.imag},
            "threshold": sp_.threshold,
        }
    return {"k": sp_.k, "z": {"re": sp_.z.real, "im": sp_.z.imag}}


def spectral_point_from_json(obj: dict, *, eps0: float = DEFAULT_DISK_RADIUS) -> SpectralPoint:
    """Rebuild a point from its wire form (see :func:`spectral_point_to_json`)."""
    k = int(obj["k"])
    if "lambda" in obj:
        lam = complex(float(obj["lambda"]["re"]), float(obj["lambda"].get("im", 0.0)))
        return from_lambda(k, lam, obj.get("threshold", "minus"), eps0=eps0)
    z = complex(float(obj["z"]["re"]), float(obj["z"].get("im", 0.0)))
    return from_z(k, z)


def _distance_to_band(k: int, z: complex) -> float:
    lo, hi = t_minus(k), t_plus(k)
    x = z.real
    if lo <= x <= hi:
        return abs(z.imag)
    return min(abs(z - lo), abs(z - hi))


def from_z(k: int, z: complex) -> SpectralPoint:
    """Spectral point from a parameter off the band.

    Raises
    ------
    OnSpectrum
        If ``z`` is within ``1e-12`` of the band ``[t_minus, t_plus]``.
    """
    z = complex(z)
    if _distance_to_band(k, z) < 1e-12:
        raise OnSpectrum(f"z={z} lies on the essential spectrum of the k={k} tree")
    u = (z + 2.0 * math.sqrt(k) - (k + 1.0)) / math.sqrt(k)
    w = 1.0 - u / 2.0  # cos(phi)
    root = cmath.sqrt(w * w - 1.0)
    xi = w - root
    if abs(xi) > 1.0:
        xi = w + root
    return SpectralPoint(k=k, z=z, u=u, eiphi=xi)


def from_lambda(
    k: int,
    lam: complex,
    threshold: str = "minus",
    *,
    eps0: float = DEFAULT_DISK_RADIUS,
) -> SpectralPoint:
    """Spectral point from the band-edge parameter ``lam``.

    For the lower edge, ``z = t_minus + lam**2 sqrt(k)`` and
    ``phi = 2 arcsin(lam/2)`` (principal branch).  The upper edge is folded
    onto the lower one through ``2(k+1) - z``, so the returned coordinates
    always live at the lower edge; the ``threshold`` tag records the caller's
    intent and ``Im(lam) >= 0`` is the physical half-plane in both cases.

    Raises
    ------
    OutOfDisk
        Unless ``0 < |lam| < eps0``.
    """
    if threshold not in ("minus", "plus"):
        raise InvalidParameter(f"threshold must be 'minus' or 'plus', got {threshold!r}")
    lam = complex(lam)
    if not 0.0 < abs(lam) < eps0:
        raise OutOfDisk(f"|lam|={abs(lam):.3g} outside the punctured disk (0, {eps0:.3g})")
    u = lam * lam
    z = t_minus(k) + u * math.sqrt(k)
    xi = cmath.exp(2j * cmath.asin(lam / 2.0))
    return SpectralPoint(k=k, z=z, u=u, eiphi=xi, lam=lam, threshold=threshold)


def _checked_two_sin_phi(sp_: SpectralPoint) -> complex:
    s = sp_.two_sin_phi
    if abs(s) < 1e-14 * (1.0 + abs(sp_.eiphi)) ** 2:
        raise BranchFailure("2 sin(phi) vanished; kernel closed form undefined")
    return s


def fourier_coefficient(n: int, sp_: SpectralPoint) -> complex:
    """Closed form of ``(1/2pi) * int exp(i n t) / (2 - 2 cos t - u) dt``.

    Equals ``i exp(i|n| phi) / (2 sin phi)``; the quadrature identity holds
    for ``u`` off ``[0, 4]``, elsewhere the same expression evaluates the
    continued (boundary) values on the committed sheet.
    """
    s = _checked_two_sin_phi(sp_)
    return 1j * sp_.eiphi ** abs(n) / s


def sine_projected_coefficient(j: int, l: int, sp_: SpectralPoint) -> complex:
    """Closed form of the sine-projected block resolvent entry.

    Equals ``(1/pi) * int (-2 sqrt(k) cos t + k + 1 - z)^{-1}
    sin((j+1) t) sin((l+1) t) dt`` for ``u`` off ``[0, 4]``, and its
    continuation elsewhere on the committed sheet.
    """
    s = _checked_two_sin_phi(sp_)
    xi = sp_.eiphi
    bracket = 1j * (xi ** abs(j - l) - xi ** (j + l + 2)) / s
    return KERNEL_PREFACTOR * bracket / math.sqrt(sp_.k)


@dataclass
class KernelMatrix:
    """Assembled weighted-resolvent kernel plus the data that produced it."""

    entries: np.ndarray
    point: SpectralPoint
    prefactor: float
    a_weight: np.ndarray | None
    b_weight: np.ndarray | None

    @property
    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.entries))


class ResolventKernel:
    """Reusable assembler for ``A (free - z)^{-1} B*`` kernels.

    All spectral-parameter independent data (the weighted, row/column
    restricted lift stacks) is prepared once; each evaluation is then a small
    set of matrix products.  ``rows``/``cols`` restrict the output to a vertex
    subset (used for compactly supported sandwiches).
    """

    def __init__(
        self,
        t: TreeGraph,
        b: SphericalBasis,
        a_weight: np.ndarray | None = None,
        b_weight: np.ndarray | None = None,
        rows: np.ndarray | None = None,
        cols: np.ndarray | None = None,
    ):
        self.tree = t
        self.basis = b
        self.a_weight = a_weight
        self.b_weight = b_weight
        self.rows = np.arange(t.vertex_count) if rows is None else np.asarray(rows)
        self.cols = np.arange(t.vertex_count) if cols is None else np.asarray(cols)
        self._prepare()

    def _prepare(self) -> None:
        t, b = self.tree, self.basis
        depths = t.depths()
        max_row_depth = int(depths[self.rows].max(initial=0))
        max_col_depth = int(depths[self.cols].max(initial=0))
        a = self.a_weight
        bw = self.b_weight

        # per block n: stack the row-restricted A-weighted lifts (levels l)
        # and the col-restricted conj(B)-weighted lifts (levels j)
        self._blocks = []
        for n in range(t.depth + 1):
            d = int(b.dims[n])
            if d == 0:
                continue
            la = min(max_row_depth, t.depth) - n
            lb = min(max_col_depth, t.depth) - n
            if la < 0 or lb < 0:
                continue
            ua = self._stack(n, la + 1, self.rows, a)
            vb = self._stack(n, lb + 1, self.cols, bw, conjugate=True)
            if ua is None or vb is None:
                continue
            nl_a, nl_b = la + 1, lb + 1
            plus = np.add.outer(np.arange(nl_b), np.arange(nl_a)) + 2  # (j, l) -> j+l+2
            minus = np.abs(np.subtract.outer(np.arange(nl_b), np.arange(nl_a)))
            self._blocks.append((n, d, ua, vb, plus, minus))
        self._max_exponent = 2 * t.depth + 2

    def _stack(self, n, nlev, idx, weight, conjugate=False):
        # basis vectors are real, so conjugation touches only the weight
        t, b = self.tree, self.basis
        d = int(b.dims[n])
        dtype = complex if (weight is not None and np.iscomplexobj(weight)) else float
        out = np.zeros((idx.size, nlev * d), dtype=dtype)
        where = np.full(t.vertex_count, -1, dtype=np.int64)
        where[idx] = np.arange(idx.size)
        any_nonzero = False
        for j in range(nlev):
            s = t.sphere(n + j)
            slot = where[s.start:s.stop]
            mask = slot >= 0
            if not mask.any():
                continue
            any_nonzero = True
            ridx = slot[mask]
            blk = b.lifted[n][j][np.nonzero(mask)[0], :]
            if weight is not None:
                w = weight[idx[ridx]]
                if conjugate:
                    w = np.conj(w)
                blk = blk * w[:, None]
            out[ridx, j * d:(j + 1) * d] = blk
        return out if any_nonzero else None

    def exponent_tables(self, sp_: SpectralPoint) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient lookups: value = plus_table[j+l+2] + minus_table[|j-l|]."""
        s = _checked_two_sin_phi(sp_)
        powers = sp_.eiphi ** np.arange(self._max_exponent + 1)
        scale = KERNEL_PREFACTOR / math.sqrt(sp_.k)
        return -1j * scale * powers / s, 1j * scale * powers / s

    def derivative_tables(self, sp_: SpectralPoint) -> tuple[np.ndarray, np.ndarray]:
        """Edge-parameter derivative of :meth:`exponent_tables` (lam form only).

        With ``s = lam sqrt(4 - lam^2)`` and ``phi = 2 arcsin(lam/2)``,
        ``d/dlam [xi^a / s] = xi^a (i a phi' s - s') / s^2`` where
        ``phi' = 2 / sqrt(4 - lam^2)`` and ``s' = (4 - 2 lam^2) / sqrt(4 - lam^2)``.
        """
        if sp_.lam is None:
            raise InvalidParameter("derivative tables need an edge-parametrized point")
        lam = sp_.lam
        root = cmath.sqrt(4.0 - lam * lam)
        s = lam * root
        sprime = (4.0 - 2.0 * lam * lam) / root
        phiprime = 2.0 / root
        a = np.arange(self._max_exponent + 1)
        powers = sp_.eiphi ** a
        core = powers * (1j * a * phiprime * s - sprime) / (s * s)
        scale = KERNEL_PREFACTOR / math.sqrt(sp_.k)
        return -1j * scale * core, 1j * scale * core

    def assemble(self, plus_table: np.ndarray, minus_table: np.ndarray) -> np.ndarray:
        """Contract arbitrary per-exponent coefficient tables against the basis."""
        out = np.zeros((self.rows.size, self.cols.size), dtype=complex)
        for n, d, ua, vb, plus, minus in self._blocks:
            g = plus_table[plus] + minus_table[minus]  # (levels_b, levels_a)
            nl_b, nl_a = g.shape
            ua3 = ua.reshape(ua.shape[0], nl_a, d)
            tmp = np.tensordot(g, ua3, axes=(1, 1))        # (nl_b, rows, d)
            tmp = np.moveaxis(tmp, 0, 1).reshape(ua.shape[0], nl_b * d)
            out += tmp @ vb.T
        return out

    def evaluate(self, sp_: SpectralPoint) -> np.ndarray:
        plus_t, minus_t = self.exponent_tables(sp_)
        return self.assemble(plus_t, minus_t)

    def evaluate_derivative(self, sp_: SpectralPoint) -> np.ndarray:
        plus_t, minus_t = self.derivative_tables(sp_)
        return self.assemble(plus_t, minus_t)


def weighted_resolvent_kernel(
    t: TreeGraph,
    b: SphericalBasis,
    a_weight: np.ndarray | None,
    b_weight: np.ndarray | None,
    sp_: SpectralPoint,
    *,
    tail_delta: float | None = None,
    tail_tol: float | None = None,
) -> KernelMatrix:
    """Assemble the full kernel of ``A (free - z)^{-1} B*`` on the truncation.

    ``a_weight``/``b_weight`` are diagonal weights (``None`` = identity).  When
    both ``tail_delta`` and ``tail_tol`` are given and the point carries an
    edge parameter, a :class:`TruncationWarning` is emitted if the geometric
    tail estimate at this depth exceeds the tolerance.
    """
    kern = ResolventKernel(t, b, a_weight, b_weight)
    entries = kern.evaluate(sp_)
    if tail_delta is not None and tail_tol is not None and sp_.lam is not None:
        est = tail_bound(t.k, tail_delta, t.depth, abs(sp_.lam))
        if est > tail_tol:
            warnings.warn(
                f"truncation tail estimate {est:.3g} exceeds tolerance {tail_tol:.3g}",
                TruncationWarning,
                stacklevel=2,
            )
    return KernelMatrix(
        entries=entries, point=sp_, prefactor=KERNEL_PREFACTOR,
        a_weight=a_weight, b_weight=b_weight,
    )


# -- direct-solve oracle ------------------------------------------------------

def subtree_green(k: int, z: complex, tol: float = 1e-16, max_iter: int = 100_000) -> complex:
    """Root resolvent entry of one dangling k-ary subtree, by fixed point.

    Eliminating the subtree below a vertex renormalizes its diagonal, and the
    per-subtree entry satisfies ``g = 1 / (k + 1 - z - k g)``.  Iterating from
    ``g = 0`` converges to the decaying branch for ``z`` off the band; this is
    deliberately independent of the closed-form branch machinery.
    """
    g = 0.0 + 0.0j
    base = (k + 1.0) - z
    for _ in range(max_iter):
        g_next = 1.0 / (base - k * g)
        if abs(g_next - g) < tol:
            return g_next
        g = g_next
    raise OnSpectrum(f"subtree closure did not converge at z={z}")


def direct_resolvent_block(
    t: TreeGraph,
    z: complex,
    *,
    spec=None,
    boundary: str = "exact",
    pad: int = 0,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
) -> np.ndarray:
    """Resolvent block of the (optionally perturbed) operator by direct solve.

    The independent reference path for every closed-form kernel.  With
    ``boundary="exact"`` the deepest sphere is closed with the dangling
    subtree self-energy ``k * subtree_green(z)``, so the LU solve reproduces
    the *untruncated* operator's resolvent block exactly; with
    ``boundary="truncated"`` it is the plain compression (boundary
    reflections and all).  ``pad`` additionally deepens the solved tree while
    returning the block of the original one.
    """
    if boundary not in ("exact", "truncated"):
        raise InvalidParameter(f"unknown boundary mode {boundary!r}")
    big = build_tree(t.k, t.depth + pad) if pad > 0 else t
    n_small = t.vertex_count
    rows = np.arange(n_small) if rows is None else np.asarray(rows)
    cols = np.arange(n_small) if cols is None else np.asarray(cols)

    diag = np.full(big.vertex_count, -z, dtype=complex)
    if spec is not None:
        diag += m_tilde(big, spec)
    if boundary == "exact":
        s = big.sphere(big.depth)
        diag[s.start:s.stop] -= big.k * subtree_green(big.k, z)
    rhs = np.zeros((big.vertex_count, cols.size), dtype=complex)
    rhs[cols, np.arange(cols.size)] = 1.0

    if big.vertex_count <= 1500:
        h = free_operator(big).astype(complex)
        h[np.diag_indices_from(h)] += diag
        sol = np.linalg.solve(h, rhs)
    else:
        h = (free_operator_sparse(big).astype(complex) + sp.diags(diag)).tocsc()
        lu = spla.splu(h)
        sol = np.empty((big.vertex_count, cols.size), dtype=complex)
        step = 256
        for start in range(0, cols.size, step):
            sol[:, start:start + step] = lu.solve(rhs[:, start:start + step])
    return sol[rows, :]


# -- truncation tail estimate -------------------------------------------------

def tail_bound(k: int, delta: float, depth: int, lambda_max: float) -> float:
    """Geometric estimate of the squared-kernel terms discarded beyond ``depth``.

    Per sphere radius the certified decay of the weights against the sphere
    growth contributes the base rate ``delta/2 - 3 ln k`` and the
    edge-parameter disk contributes the margin ``delta/4 - 2 lambda_max``;
    the discarded part of the double sphere sum is then a closed-form
    geometric tail, monotone decreasing in ``depth`` and vanishing as
    ``depth -> infinity``.
    """
    floor = delta_floor(k)
    if delta <= 0 or delta < floor - 1e-12:
        raise AssumptionViolated(
            f"decay rate {delta:.6g} inadmissible for k={k} (floor {floor:.6g})"
        )
    rate = 0.75 * delta - 3.0 * math.log(k) - 2.0 * lambda_max
    if rate <= 0:
        return math.inf
    x = math.exp(-rate)
    s_all = x / (1.0 - x) ** 2
    m = depth + 2  # first discarded (radius+1) index
    s_tail = x**m * (m - (m - 1) * x) / (1.0 - x) ** 2
    pref = 1.0 / (lambda_max**2 * (4.0 - lambda_max**2))
    return pref * 2.0 * s_tail * s_all


def depth_for_tail(
    k: int, delta: float, tol: float, lambda_max: float, max_depth: int = 10_000
) -> int:
    """Smallest truncation depth whose tail estimate is below ``tol``."""
    for depth in range(1, max_depth + 1):
        if tail_bound(k, delta, depth, lambda_max) <= tol:
            return depth
    raise InvalidParameter(
        f"no depth up to {max_depth} meets tail tolerance {tol:.3g}"
    )


def default_basis(t: TreeGraph) -> SphericalBasis:
    """Convenience constructor kept next to the kernel assembler."""
    return build_spherical_basis(t)
