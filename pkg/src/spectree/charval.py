"""Characteristic-value counting, resonance indicators, and spectral scans.

The counting tool is the operator-valued argument principle: for a family
``F(lam)`` invertible on a circle, the trace integral

    (1 / 2 pi i) * integral of Tr[F(lam)^{-1} F'(lam)] d lam

equals the number of parameters inside the circle where ``F`` fails to be
invertible, counted with multiplicity.  Trapezoidal quadrature on the circle
is spectrally accurate for the analytic integrand, so the raw value lands on
an integer to many digits whenever the circle is comfortably away from
characteristic values; the residual after rounding is the certificate.

Families may be supplied either as plain matrices or as lists of
``(multiplicity, block)`` pairs (the exact reduction available for radial
perturbations); traces and singular values then accumulate blockwise.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .birman_schwinger import BSFactory
from .decomposition import SphericalBasis
from .errors import (
    InvalidParameter,
    NonConvergent,
    NotIsolated,
    OutOfDisk,
    SingularOnContour,
)
from .operators import PotentialSpec, perturbed_operator, m_tilde
from .resolvent import t_minus, t_plus
from .tree import TreeGraph

#: resonance flag threshold: an eigenvalue of the sandwich counts as "-1"
#: when its distance is below RESONANCE_RTOL * (1 + norm)
RESONANCE_RTOL = 1e-6


@dataclass(frozen=True)
class ContourSpec:
    """Positively oriented circle with a fixed trapezoidal node count."""

    center: complex
    radius: float
    nodes: int = 256

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidParameter("contour radius must be positive")
        if self.nodes < 16:
            raise InvalidParameter("contour needs at least 16 nodes")

    def points(self, nodes: int | None = None, phase: float = 0.0) -> np.ndarray:
        n = nodes or self.nodes
        t = 2.0 * np.pi * np.arange(n) / n + phase
        return self.center + self.radius * np.exp(1j * t)


@dataclass(frozen=True)
class IndexReport:
    """Result of one argument-principle quadrature."""

    raw: complex
    rounded: int
    residual: float
    min_sv_on_contour: float

    @property
    def certified(self) -> bool:
        return self.residual < 0.1 and self.min_sv_on_contour > 0

    def to_json(self) -> dict:
        return {
            "raw": {"re": self.raw.real, "im": self.raw.imag},
            "rounded": self.rounded,
            "residual": self.residual,
            "min_sv": self.min_sv_on_contour,
        }


def _as_blocks(val) -> list[tuple[int, np.ndarray]]:
    if isinstance(val, np.ndarray):
        return [(1, val)]
    return list(val)


def _blocks_trace_and_sv(fval, fpval) -> tuple[complex, float]:
    tr = 0.0 + 0.0j
    sv = math.inf
    for (mult, blk), (_, blkp) in zip(_as_blocks(fval), _as_blocks(fpval)):
        tr += mult * np.trace(np.linalg.solve(blk, blkp))
        sv = min(sv, float(np.linalg.svd(blk, compute_uv=False).min()))
    return tr, sv


def contour_index(
    f,
    fprime=None,
    contour: ContourSpec = ContourSpec(0.0, 0.1),
    *,
    sv_floor: float = 1e-10,
    residual_tol: float = 0.1,
    max_doublings: int = 2,
) -> IndexReport:
    """Count characteristic values of ``f`` inside the contour.

    ``f(lam)`` returns the family value (matrix or block list); ``fprime``
    its derivative, approximated by complex central differences with step
    ``1e-6 * radius`` when omitted.  Nodes are doubled up to
    ``max_doublings`` times until the quadrature result sits within
    ``residual_tol`` of an integer.

    Raises
    ------
    SingularOnContour
        If the family drops below ``sv_floor`` at some node (after one
        automatic node-phase nudge).
    NonConvergent
        If the residual never certifies.
    """
    if fprime is None:
        h = 1e-6 * contour.radius

        def fprime(lam, _f=f, _h=h):
            plus, minus = _as_blocks(_f(lam + _h)), _as_blocks(_f(lam - _h))
            return [(m, (bp - bm) / (2.0 * _h)) for (m, bp), (_, bm) in zip(plus, minus)]

    nodes = contour.nodes
    for _ in range(max_doublings + 1):
        report = None
        for phase in (0.0, math.pi / nodes):
            try:
                report = _quadrature_pass(f, fprime, contour, nodes, phase, sv_floor)
                break
            except SingularOnContour:
                if phase != 0.0:
                    raise
        assert report is not None
        if report.residual < residual_tol:
            return report
        nodes *= 2
    raise NonConvergent(
        f"index residual {report.residual:.3g} after {nodes // 2} nodes"
    )


def _quadrature_pass(f, fprime, contour, nodes, phase, sv_floor) -> IndexReport:
    pts = contour.points(nodes, phase)
    unit = (pts - contour.center) / contour.radius
    total = 0.0 + 0.0j
    min_sv = math.inf
    for lam, u in zip(pts, unit):
        tr, sv = _blocks_trace_and_sv(f(lam), fprime(lam))
        if sv < sv_floor:
            raise SingularOnContour(
                f"family singular at contour node {lam:.6g} (sv={sv:.3g})"
            )
        min_sv = min(min_sv, sv)
        total += u * tr
    raw = contour.radius * total / nodes
    rounded = int(round(raw.real))
    return IndexReport(
        raw=complex(raw),
        rounded=rounded,
        residual=float(abs(raw - rounded)),
        min_sv_on_contour=float(min_sv),
    )


# -- resonance machinery ---------------------------------------------------------


def _sign_for(threshold: str) -> int:
    if threshold not in ("minus", "plus"):
        raise InvalidParameter(f"threshold must be 'minus' or 'plus', got {threshold!r}")
    return 1 if threshold == "minus" else -1


def _family(factory: BSFactory, sign: int, eps0: float | None):
    """Evaluators for F = I + T and F' = T', blockwise when radial."""
    if factory.radial and np.all(factory._a_radial > 0):

        def fval(lam):
            return [
                (d, np.eye(b.shape[0]) + b)
                for d, b in factory.reduced_blocks(lam, sign, eps0=eps0)
            ]

        def fpval(lam):
            return factory.reduced_blocks(lam, sign, derivative=True, eps0=eps0)

    else:

        def fval(lam):
            t = factory.matrix(lam, sign, eps0=eps0)
            return np.eye(t.shape[0]) + t

        def fpval(lam):
            return factory.derivative(lam, sign, eps0=eps0)

    return fval, fpval


def _eigs_and_minsv(factory: BSFactory, lam, sign, eps0=None):
    """Eigenvalues of T, min singular value of I + T, and a norm bound for T."""
    if factory.radial and np.all(factory._a_radial > 0):
        blocks = factory.reduced_blocks(lam, sign, eps0=eps0)
        eigs = []
        minsv = math.inf
        tnorm = 0.0
        for d, b in blocks:
            eigs.append(np.repeat(np.linalg.eigvals(b), d))
            minsv = min(minsv, float(
                np.linalg.svd(np.eye(b.shape[0]) + b, compute_uv=False).min()
            ))
            tnorm = max(tnorm, float(np.linalg.norm(b, 2)))
        return np.concatenate(eigs), minsv, tnorm
    t = factory.matrix(lam, sign, eps0=eps0)
    eigs = np.linalg.eigvals(t)
    minsv = float(np.linalg.svd(np.eye(t.shape[0]) + t, compute_uv=False).min())
    return eigs, minsv, float(np.linalg.norm(t, 2))


def resonance_indicator(
    t: TreeGraph,
    b: SphericalBasis,
    spec: PotentialSpec | None,
    lam: complex,
    threshold: str = "minus",
    *,
    eps0: float | None = None,
    factory: BSFactory | None = None,
) -> tuple[np.ndarray, float]:
    """Eigenvalues of the sandwich at ``lam`` and their distance to ``-1``."""
    factory = factory or BSFactory(t, b, spec)
    eigs, _, _ = _eigs_and_minsv(factory, lam, _sign_for(threshold), eps0)
    return eigs, float(np.min(np.abs(eigs + 1.0)))


@dataclass
class ScanReport:
    """Outcome of an annulus scan at one band edge."""

    threshold: str
    ladder: list[tuple[float, IndexReport]]
    grid_rows: np.ndarray  # columns: re, im, dist_to_minus_one, min_sv
    min_singular_value: float
    flagged: int = 0
    failure: str | None = None

    @property
    def all_indices_zero(self) -> bool:
        return all(rep.rounded == 0 and rep.certified for _, rep in self.ladder)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for row in self.grid_rows:
                w.writerow([f"{x:.17g}" for x in row])


CSV_HEADER = ["re_lambda", "im_lambda", "dist_minus_one", "min_sv"]


def absence_scan(
    t: TreeGraph,
    b: SphericalBasis,
    spec: PotentialSpec | None,
    annulus: tuple[float, float],
    grid: int,
    threshold: str = "minus",
    *,
    nodes: int = 256,
    ladder_factor: float = 2.0,
    csv_path=None,
    jobs: int | None = None,
    factory: BSFactory | None = None,
) -> ScanReport:
    """Certify the absence of edge resonances on an annulus.

    Runs the argument-principle counter on a geometric ladder of circles
    inside ``[r_min, r_max]`` and tabulates the eigenvalue distance to ``-1``
    and the smallest singular value of ``I + T`` on a ``grid x grid`` polar
    grid.  Rows stream to ``csv_path`` as they are produced, so a failure
    leaves partial results behind.
    """
    r_min, r_max = annulus
    factory = factory or BSFactory(t, b, spec)
    eps0 = factory.eps0
    if not 0.0 < r_min < r_max < eps0:
        raise OutOfDisk(
            f"annulus ({r_min}, {r_max}) must sit inside the working disk (0, {eps0:.3g})"
        )
    sign = _sign_for(threshold)
    fval, fpval = _family(factory, sign, eps0)

    ladder: list[tuple[float, IndexReport]] = []
    radius = r_min
    while radius <= r_max * (1.0 + 1e-12):
        rep = contour_index(fval, fpval, ContourSpec(0.0, radius, nodes))
        ladder.append((radius, rep))
        radius *= ladder_factor

    radii = np.linspace(r_min, r_max, grid)
    angles = 2.0 * np.pi * np.arange(grid) / grid
    points = [r * np.exp(1j * a) for r in radii for a in angles]

    def one(lam):
        eigs, minsv, tnorm = _eigs_and_minsv(factory, lam, sign, eps0)
        dist = float(np.min(np.abs(eigs + 1.0)))
        flag = dist < RESONANCE_RTOL * (1.0 + tnorm)
        return (lam.real, lam.imag, dist, minsv), flag

    rows: list[tuple] = []
    flagged = 0
    sink = open(csv_path, "w", newline="") if csv_path else None
    writer = None
    if sink is not None:
        writer = csv.writer(sink)
        writer.writerow(CSV_HEADER)
    try:
        if jobs and jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(one, points))
        else:
            results = map(one, points)
        for row, flag in results:
            rows.append(row)
            flagged += int(flag)
            if writer is not None:
                writer.writerow([f"{x:.17g}" for x in row])
    finally:
        if sink is not None:
            sink.close()

    grid_rows = np.array(rows)
    return ScanReport(
        threshold=threshold,
        ladder=ladder,
        grid_rows=grid_rows,
        min_singular_value=float(grid_rows[:, 3].min()),
        flagged=flagged,
    )


# -- Riesz projections and direct spectra ---------------------------------------


def riesz_multiplicity(op: np.ndarray, z0: complex, contour: ContourSpec) -> int:
    """Algebraic multiplicity of ``z0`` as rank of the spectral projector.

    The projector is the contour integral of the resolvent around ``z0``;
    its rank is read off the singular values (threshold 0.5).  The point must
    be isolated: every eigenvalue outside the circle must stay at least two
    radii away from ``z0``.
    """
    eigs = np.linalg.eigvals(op)
    dist = np.abs(eigs - z0)
    outside = dist > contour.radius
    if np.any(outside & (dist < 2.0 * contour.radius)):
        raise NotIsolated(
            f"spectrum within 2x contour radius of {z0:.6g}; shrink the circle"
        )
    n = op.shape[0]
    pts = contour.points()
    unit = (pts - contour.center) / contour.radius
    proj = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for zeta, u in zip(pts, unit):
        proj += u * np.linalg.solve(zeta * eye - op, eye)
    proj *= contour.radius / pts.size
    sv = np.linalg.svd(proj, compute_uv=False)
    return int(np.sum(sv > 0.5))


@dataclass
class SpectrumResult:
    """Eigenvalues of the perturbed truncation, tagged against the band."""

    eigenvalues: np.ndarray
    inside_band: np.ndarray
    t_minus: float
    t_plus: float

    def outside(self) -> np.ndarray:
        return self.eigenvalues[~self.inside_band]


def spectrum(
    t: TreeGraph, spec: PotentialSpec | None, *, allow_violation: bool = False,
    band_tol: float = 1e-8,
) -> SpectrumResult:
    """Dense eigensolve of the perturbed truncated operator."""
    m_vec = m_tilde(t, spec, allow_violation=allow_violation)
    h = perturbed_operator(t, spec, allow_violation=allow_violation)
    if np.abs(m_vec.imag).max(initial=0.0) == 0.0:
        eigs = np.linalg.eigvalsh(h.real).astype(complex)
    else:
        eigs = np.linalg.eigvals(h)
        eigs = eigs[np.lexsort((eigs.imag, eigs.real))]
    lo, hi = t_minus(t.k), t_plus(t.k)
    x = np.clip(eigs.real, lo, hi)
    inside = np.abs(eigs - x) <= band_tol
    return SpectrumResult(
        eigenvalues=eigs, inside_band=inside, t_minus=lo, t_plus=hi
    )
