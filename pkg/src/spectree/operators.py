"""Operators on the truncated tree, materialized as numpy arrays.

Conventions
-----------
* Full operators (adjacency, raising/lowering, the Laplacian) are dense
  2-D arrays.  They are real symmetric and kept in ``float64``; mixing
  them with complex data upcasts automatically.
* Multiplication operators (degree terms, potentials, parity, weights)
  are represented by their diagonal as 1-D arrays.
* The Laplacian is always formed with the *untruncated* vertex degrees
  ``k + 1 - d0``, so the truncated operator is the compression of the
  full-tree operator and its spectrum stays inside the numerical range.

The perturbed operator splits as ``(-adjacency + (k+1)) + m_tilde`` where
``m_tilde = -d0 + potential`` carries the whole perturbation, including
the root degree defect.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssumptionViolated, InvalidParameter
from .tree import TreeGraph

#: admissibility rule for the decay rate: delta > 0 when k = 1,
#: delta >= 6 ln k otherwise.
_DECAY_SLACK = 1e-12


def _parent_indices(t: TreeGraph) -> tuple[np.ndarray, np.ndarray]:
    v = np.arange(1, t.vertex_count, dtype=np.int64)
    return v, (v - 1) // t.k


def adjacency(t: TreeGraph) -> np.ndarray:
    """Dense adjacency matrix: 1 whenever two vertices share an edge."""
    a = np.zeros((t.vertex_count, t.vertex_count))
    v, p = _parent_indices(t)
    a[v, p] = 1.0
    a[p, v] = 1.0
    return a


def adjacency_sparse(t: TreeGraph) -> sp.csr_matrix:
    """CSR adjacency, for trees too large to hold densely."""
    v, p = _parent_indices(t)
    rows = np.concatenate([v, p])
    cols = np.concatenate([p, v])
    data = np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(t.vertex_count, t.vertex_count))


def raising(t: TreeGraph) -> np.ndarray:
    """Sum over the parent: maps functions on ``S_r`` into ``S_{r+1}``."""
    a = np.zeros((t.vertex_count, t.vertex_count))
    v, p = _parent_indices(t)
    a[v, p] = 1.0
    return a


def lowering(t: TreeGraph) -> np.ndarray:
    """Sum over the children; the transpose of :func:`raising`."""
    return raising(t).T.copy()


def degree_terms(t: TreeGraph) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals ``(d, d0)`` with ``d = k + 1 - d0`` and ``d0`` the root indicator."""
    d0 = np.zeros(t.vertex_count)
    d0[0] = 1.0
    d = (t.k + 1.0) - d0
    return d, d0


def laplacian(t: TreeGraph) -> np.ndarray:
    """``-adjacency + diag(k + 1 - d0)``, the compression of the full-tree Laplacian."""
    d, _ = degree_terms(t)
    m = -adjacency(t)
    m[np.diag_indices_from(m)] += d
    return m


def free_operator(t: TreeGraph) -> np.ndarray:
    """``-adjacency + (k+1)``: the unperturbed operator whose band is [t-, t+]."""
    m = -adjacency(t)
    m[np.diag_indices_from(m)] += t.k + 1.0
    return m


def free_operator_sparse(t: TreeGraph) -> sp.csr_matrix:
    m = -adjacency_sparse(t)
    return (m + sp.identity(t.vertex_count, format="csr") * (t.k + 1.0)).tocsr()


def theta(t: TreeGraph) -> np.ndarray:
    """Diagonal of the depth-parity involution ``(-1)**|v|``.

    Conjugation by it flips the sign of the adjacency and fixes every
    multiplication operator, which is what maps one spectral edge onto
    the other.
    """
    return np.where(t.depths() % 2 == 0, 1.0, -1.0)


def weights(t: TreeGraph, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Exponential weight diagonals ``e∓ = exp(∓(delta/2)|v|)``.

    The pair multiplies to the identity; sandwiching the resolvent between
    the decaying weight on both sides is what makes it Hilbert-Schmidt.
    """
    if delta <= 0:
        raise InvalidParameter(f"weight rate must be positive, got {delta}")
    r = t.depths()
    e_minus = np.exp(-0.5 * delta * r)
    e_plus = np.exp(0.5 * delta * r)
    return e_minus, e_plus


def delta_floor(k: int) -> float:
    """Smallest admissible decay rate for branching factor ``k``."""
    return 0.0 if k == 1 else 6.0 * math.log(k)


@dataclass(frozen=True)
class PotentialSpec:
    """Per-vertex complex potential with an exponential decay certificate.

    Two kinds are supported:

    * ``radial-exp``: ``M(v) = amplitude * exp(-delta * |v|)``,
    * ``table``: explicit values on finitely many vertices, zero elsewhere.

    ``c_const`` is the certificate constant ``C`` in
    ``|M(v)| <= C * exp(-delta * |v|)``; when absent it is estimated on the
    truncation as ``max |M(v)| * exp(delta * |v|)``.
    """

    kind: str
    delta: float
    amplitude: complex = 0.0
    values: tuple[tuple[int, complex], ...] = ()
    c_const: float | None = None

    def __post_init__(self):
        if self.kind not in ("radial-exp", "table"):
            raise InvalidParameter(f"unknown potential kind {self.kind!r}")
        if self.delta <= 0:
            raise InvalidParameter("decay rate delta must be positive")

    @classmethod
    def radial_exp(cls, amplitude: complex, delta: float) -> "PotentialSpec":
        return cls(kind="radial-exp", delta=delta, amplitude=complex(amplitude))

    @classmethod
    def table(cls, values, delta: float, c_const: float | None = None) -> "PotentialSpec":
        vals = tuple((int(v), complex(x)) for v, x in values)
        return cls(kind="table", delta=delta, values=vals, c_const=c_const)

    def materialize(self, t: TreeGraph) -> np.ndarray:
        """Potential values on every vertex of the truncation."""
        m = np.zeros(t.vertex_count, dtype=complex)
        if self.kind == "radial-exp":
            m[:] = self.amplitude * np.exp(-self.delta * t.depths())
        else:
            for v, x in self.values:
                if 0 <= v < t.vertex_count:
                    m[v] = x
        return m

    def certificate(self, t: TreeGraph) -> tuple[float, float]:
        """The pair ``(C, delta)``, estimating ``C`` when not supplied."""
        if self.c_const is not None:
            return float(self.c_const), self.delta
        m = self.materialize(t)
        growth = np.abs(m) * np.exp(self.delta * t.depths())
        return float(growth.max(initial=0.0)), self.delta

    def check_assumption(self, t: TreeGraph) -> None:
        """Raise :class:`AssumptionViolated` unless the decay certificate holds."""
        floor = delta_floor(t.k)
        if self.delta < floor - _DECAY_SLACK:
            raise AssumptionViolated(
                f"decay rate {self.delta:.6g} below the admissible floor "
                f"{floor:.6g} for k={t.k}"
            )
        c, delta = self.certificate(t)
        bound = c * np.exp(-delta * t.depths()) + 1e-12 * (1.0 + c)
        if np.any(np.abs(self.materialize(t)) > bound):
            raise AssumptionViolated("materialized potential exceeds its certificate")

    # -- JSON wire format ---------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "radial-exp":
            out = {
                "kind": "radial-exp",
                "amplitude": {"re": self.amplitude.real, "im": self.amplitude.imag},
                "delta": self.delta,
            }
        else:
            out = {
                "kind": "table",
                "values": [
                    {"v": v, "re": x.real, "im": x.imag} for v, x in self.values
                ],
                "delta": self.delta,
            }
        if self.c_const is not None:
            out["C"] = self.c_const
        return out

    @classmethod
    def from_json(cls, obj: dict | str) -> "PotentialSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj.get("kind")
        delta = float(obj["delta"])
        c = obj.get("C")
        if kind == "radial-exp":
            amp = _complex_field(obj["amplitude"])
            spec = cls(kind="radial-exp", delta=delta, amplitude=amp, c_const=c)
        elif kind == "table":
            vals = tuple(
                (int(e["v"]), complex(float(e["re"]), float(e.get("im", 0.0))))
                for e in obj["values"]
            )
            spec = cls(kind="table", delta=delta, values=vals, c_const=c)
        else:
            raise InvalidParameter(f"unknown potential kind {kind!r}")
        return spec


def _complex_field(x) -> complex:
    if isinstance(x, dict):
        return complex(float(x["re"]), float(x.get("im", 0.0)))
    return complex(x)


def potential_matrix(
    t: TreeGraph, spec: PotentialSpec, *, allow_violation: bool = False
) -> np.ndarray:
    """Diagonal of the multiplication operator M, admissibility-checked."""
    if not allow_violation:
        spec.check_assumption(t)
    return spec.materialize(t)


def m_tilde(
    t: TreeGraph, spec: PotentialSpec | None, *, allow_violation: bool = False
) -> np.ndarray:
    """Diagonal of the effective perturbation ``-d0 + M``."""
    _, d0 = degree_terms(t)
    m = -d0.astype(complex)
    if spec is not None:
        m += potential_matrix(t, spec, allow_violation=allow_violation)
    return m


def perturbed_operator(
    t: TreeGraph, spec: PotentialSpec | None, *, allow_violation: bool = False
) -> np.ndarray:
    """Dense ``-adjacency + (k+1) + diag(m_tilde)``."""
    h = free_operator(t).astype(complex)
    h[np.diag_indices_from(h)] += m_tilde(t, spec, allow_violation=allow_violation)
    return h
