"""Command-line front end.

Subcommands
-----------
validate   run the cross-checking invariant suite, print a pass/fail table
kernel     closed-form kernel vs direct-solve reference, max/relative error
scan       absence-of-resonances certification over an annulus, CSV output
spectrum   eigenvalues of the perturbed truncation, CSV output
index      one argument-principle count, JSON output

Exit codes: 0 success, 1 usage error, 2 certification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import charval, quadrature
from .birman_schwinger import BSFactory, hol_split
from .charval import ContourSpec, absence_scan, spectrum
from .decomposition import build_spherical_basis, verify_jacobi_form
from .errors import SpectreeError
from .operators import (
    PotentialSpec,
    adjacency,
    lowering,
    m_tilde,
    raising,
    theta,
    weights,
)
from .resolvent import (
    direct_resolvent_block,
    from_lambda,
    from_z,
    sine_projected_coefficient,
    fourier_coefficient,
    t_minus,
    weighted_resolvent_kernel,
)
from .tree import build_tree

USAGE_ERROR, CERTIFICATION_FAILURE = 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_potential(arg: str | None) -> PotentialSpec | None:
    if arg is None:
        return None
    text = arg
    if not arg.lstrip().startswith("{"):
        with open(arg) as fh:
            text = fh.read()
    return PotentialSpec.from_json(text)


def _default_jobs(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("SPECTREE_JOBS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def build_parser() -> _Parser:
    p = _Parser(prog="spectree", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--k", type=int, required=True, help="branching factor")
        sp.add_argument("--depth", type=int, default=None, help="truncation depth")
        sp.add_argument("--potential", default=None,
                        help="potential JSON (inline or file path)")

    v = sub.add_parser("validate", help="run the invariant suite")
    common(v)

    kcmd = sub.add_parser("kernel", help="closed form vs direct solve")
    common(kcmd)
    kcmd.add_argument("--z", default=None, help="spectral parameter (complex literal)")
    kcmd.add_argument("--lam", default=None, help="edge parameter (complex literal)")
    kcmd.add_argument("--threshold", choices=("minus", "plus"), default="minus")
    kcmd.add_argument("--delta", type=float, default=None, help="weight decay rate")

    s = sub.add_parser("scan", help="absence-of-resonances certification")
    common(s)
    s.add_argument("--rmin", type=float, required=True)
    s.add_argument("--rmax", type=float, required=True)
    s.add_argument("--grid", type=int, default=32)
    s.add_argument("--nodes", type=int, default=256)
    s.add_argument("--threshold", choices=("minus", "plus"), default="minus")
    s.add_argument("--sv-floor", type=float, default=1e-4,
                   help="certification floor for min singular value")
    s.add_argument("--out", default=None, help="CSV output path")
    s.add_argument("--jobs", type=int, default=None)

    e = sub.add_parser("spectrum", help="eigenvalues of the perturbed truncation")
    common(e)
    e.add_argument("--out", default=None, help="CSV output path")

    i = sub.add_parser("index", help="one argument-principle count")
    common(i)
    i.add_argument("--center", default="0", help="contour center (complex literal)")
    i.add_argument("--radius", type=float, required=True)
    i.add_argument("--nodes", type=int, default=256)
    i.add_argument("--threshold", choices=("minus", "plus"), default="minus")
    return p


# -- validate ------------------------------------------------------------------

def _run_validation(k: int, depth: int, spec: PotentialSpec | None):
    rows = []

    def check(name, value, tol):
        rows.append((name, float(value), tol, value <= tol))

    t = build_tree(k, depth)
    sizes = [t.sphere_size(r) for r in range(depth + 1)]
    check("tree sphere sizes", max(abs(s - k**r) for r, s in enumerate(sizes)), 0)
    a = adjacency(t)
    check("edge count = V - 1", abs(a.sum() / 2 - (t.vertex_count - 1)), 0)
    pi_up, pi_dn = raising(t), lowering(t)
    check("raising + lowering = adjacency", np.abs(pi_up + pi_dn - a).max(), 0)
    interior = t.vertex_count - t.sphere_size(depth)
    check("trace of lower.raise = k * interior",
          abs(np.trace(pi_dn @ pi_up) - k * interior), 0)
    eigs = np.linalg.eigvalsh(a)
    check("adjacency band confinement", max(0.0, np.abs(eigs).max() - 2 * math.sqrt(k)), 1e-10)
    th = theta(t)
    check("parity conjugation flips adjacency", np.abs(th[:, None] * a * th[None, :] + a).max(), 0)
    m_vec = m_tilde(t, spec)
    z0 = 0.37 + 0.11j
    eye = np.eye(t.vertex_count)
    lhs = th[:, None] * (-a + np.diag(m_vec) + (k + 1 - z0) * eye) * th[None, :]
    rhs = a + np.diag(m_vec) + (k + 1 - z0) * eye
    check("edge-swap conjugation identity", np.abs(lhs - rhs).max(), 1e-10)
    delta = spec.delta if spec is not None else max(1.0, 6.0 * math.log(k))
    e_m, e_p = weights(t, delta)
    check("weight pair multiplies to identity", np.abs(e_m * e_p - 1).max(), 1e-12)

    b = build_spherical_basis(t)
    check("basis count = vertex count", abs(b.total_vectors() - t.vertex_count), 0)
    full = np.hstack([
        b.global_vectors(n, j)
        for n in range(depth + 1) if b.dims[n]
        for j in range(b.levels(n))
    ])
    gram = full.T @ full
    check("basis Gram deviation", np.abs(gram - np.eye(gram.shape[0])).max(), 1e-10)
    jac = max(verify_jacobi_form(b, t, n) for n in range(min(depth, 5)))
    check("block Jacobi residual", jac, 1e-10)

    sp_ = from_z(k, -1.0 if k == 1 else t_minus(k) - 0.5)
    qf = max(
        abs(fourier_coefficient(n, sp_) - quadrature.fourier_quadrature(sp_.u, n))
        for n in range(7)
    )
    check("fourier coefficient vs quadrature", qf, 1e-10)
    qs = max(
        abs(sine_projected_coefficient(j, l, sp_)
            - quadrature.sine_projected_quadrature(k, sp_.z, j, l))
        for j in range(4) for l in range(4)
    )
    check("sine-projected coefficient vs quadrature", qs, 1e-10)

    kern = weighted_resolvent_kernel(t, b, e_m, e_m, sp_)
    oracle = e_m[:, None] * direct_resolvent_block(t, sp_.z) * e_m[None, :]
    rel = np.linalg.norm(kern.entries - oracle) / np.linalg.norm(oracle)
    check("weighted kernel vs direct solve (rel)", rel, 1e-6)

    if spec is not None:
        spec.check_assumption(t)
        rows.append(("potential decay certificate", 0.0, 0, True))
        factory = BSFactory(t, b, spec)
        lam = 0.05j
        tmat = factory.matrix(lam, +1)
        g_pert = direct_resolvent_block(t, factory.point(lam).z, spec=spec,
                                        rows=factory.support, cols=factory.support)
        s_res = np.eye(tmat.shape[0]) + tmat
        s_res = s_res @ (np.eye(tmat.shape[0]) - factory.j_phase[:, None]
                         * factory.sqrt_abs[:, None] * g_pert * factory.sqrt_abs[None, :])
        check("resolvent-identity residual", np.abs(s_res - np.eye(tmat.shape[0])).max(), 1e-8)
        _, hol_res = hol_split(t, b, spec, lam, factory=factory)
        check("desingularized reconstruction residual", hol_res, 1e-8)
    return rows


def _cmd_validate(args) -> int:
    depth = args.depth if args.depth is not None else 8
    spec = _load_potential(args.potential)
    rows = _run_validation(args.k, depth, spec)
    width = max(len(r[0]) for r in rows)
    ok = True
    for name, value, tol, passed in rows:
        ok &= passed
        print(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}  "
              f"value={_fmt(value)} tol={_fmt(float(tol))}")
    print(f"{'overall':<{width}}  {'PASS' if ok else 'FAIL'}")
    return 0 if ok else CERTIFICATION_FAILURE


# -- kernel ----------------------------------------------------------------------

def _cmd_kernel(args) -> int:
    depth = args.depth if args.depth is not None else 8
    t = build_tree(args.k, depth)
    b = build_spherical_basis(t)
    spec = _load_potential(args.potential)
    delta = args.delta
    if delta is None:
        delta = spec.delta if spec is not None else max(1.0, 6.0 * math.log(args.k))
    if args.lam is not None:
        sp_ = from_lambda(args.k, complex(args.lam), args.threshold)
    else:
        z = complex(args.z) if args.z is not None else t_minus(args.k) - 0.5
        sp_ = from_z(args.k, z)
    e_m, _ = weights(t, delta)
    kern = weighted_resolvent_kernel(t, b, e_m, e_m, sp_)
    oracle = e_m[:, None] * direct_resolvent_block(t, sp_.z) * e_m[None, :]
    max_err = float(np.abs(kern.entries - oracle).max())
    rel = float(np.linalg.norm(kern.entries - oracle) / np.linalg.norm(oracle))
    print(json.dumps({
        "k": args.k,
        "depth": depth,
        "z": {"re": sp_.z.real, "im": sp_.z.imag},
        "delta": delta,
        "max_abs_error": max_err,
        "rel_frobenius_error": rel,
    }))
    return 0 if rel <= 1e-6 else CERTIFICATION_FAILURE


# -- scan ------------------------------------------------------------------------

def _cmd_scan(args) -> int:
    spec = _load_potential(args.potential)
    depth = args.depth
    if depth is None:
        depth = _auto_depth(args.k, spec)
    t = build_tree(args.k, depth)
    b = build_spherical_basis(t)
    report = absence_scan(
        t, b, spec, (args.rmin, args.rmax), args.grid, args.threshold,
        nodes=args.nodes, csv_path=args.out, jobs=_default_jobs(args.jobs),
    )
    summary = {
        "threshold": report.threshold,
        "ladder": [
            {"radius": r, **rep.to_json()} for r, rep in report.ladder
        ],
        "min_sv": report.min_singular_value,
        "flagged": report.flagged,
        "rows": int(report.grid_rows.shape[0]),
    }
    print(json.dumps(summary))
    ok = report.all_indices_zero and report.min_singular_value > args.sv_floor
    return 0 if ok else CERTIFICATION_FAILURE


def _auto_depth(k: int, spec: PotentialSpec | None) -> int:
    """Deep enough to hold the numerically relevant support of the potential."""
    if spec is None:
        return 8
    if spec.kind == "table":
        vmax = max((v for v, _ in spec.values), default=0)
        d = 0
        while sum(k**r for r in range(d + 1)) <= vmax:
            d += 1
        return max(d + 1, 4)
    amp = abs(spec.amplitude)
    if amp <= 1e-14:
        return 4
    span = math.log(amp / 1e-14) / spec.delta
    return max(4, math.ceil(span))


# -- spectrum --------------------------------------------------------------------

def _cmd_spectrum(args) -> int:
    depth = args.depth if args.depth is not None else 10
    t = build_tree(args.k, depth)
    spec = _load_potential(args.potential)
    result = spectrum(t, spec)
    lines = ["re,im,inside_band"]
    for e, inside in zip(result.eigenvalues, result.inside_band):
        lines.append(f"{_fmt(e.real)},{_fmt(e.imag)},{int(inside)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# -- index -----------------------------------------------------------------------

def _cmd_index(args) -> int:
    spec = _load_potential(args.potential)
    depth = args.depth if args.depth is not None else _auto_depth(args.k, spec)
    t = build_tree(args.k, depth)
    b = build_spherical_basis(t)
    factory = BSFactory(t, b, spec)
    sign = 1 if args.threshold == "minus" else -1
    fval, fpval = charval._family(factory, sign, factory.eps0)
    report = charval.contour_index(
        fval, fpval, ContourSpec(complex(args.center), args.radius, args.nodes)
    )
    print(json.dumps(report.to_json()))
    return 0 if report.certified else CERTIFICATION_FAILURE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "validate": _cmd_validate,
        "kernel": _cmd_kernel,
        "scan": _cmd_scan,
        "spectrum": _cmd_spectrum,
        "index": _cmd_index,
    }
    try:
        return handlers[args.command](args)
    except SpectreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
