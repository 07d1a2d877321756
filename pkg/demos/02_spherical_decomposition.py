"""The sphere-wise orthogonal decomposition and its block Jacobi form.

Each invariant block is born on one sphere as the orthogonal complement of
the raise of the previous sphere, then propagated downward by normalized
raising.  On every block the adjacency is a free Jacobi matrix with
off-diagonal sqrt(k) -- the structure behind the closed-form resolvent.
"""
import numpy as np

from spectree import build_spherical_basis, build_tree, projector, verify_jacobi_form

k, depth = 2, 6
t = build_tree(k, depth)
b = build_spherical_basis(t)

print(f"k={k}, depth={depth}: newborn dimensions per level: {[int(d) for d in b.dims]}")
print("triangular fill of each sphere (must equal k^r):")
for r in range(depth + 1):
    filled = sum(int(b.dims[n]) for n in range(r + 1))
    print(f"  sphere {r}: {filled} == {k**r}")

print("\ntotal basis vectors:", b.total_vectors(), "== vertex count:", t.vertex_count)
full = np.hstack([
    b.global_vectors(n, j)
    for n in range(depth + 1) if b.dims[n]
    for j in range(b.levels(n))
])
gram = full.T @ full
print("orthonormality (max Gram deviation):",
      f"{np.abs(gram - np.eye(t.vertex_count)).max():.2e}")

total = sum(projector(b, n) for n in range(depth + 1))
print("projectors resolve the identity:",
      f"{np.abs(total - np.eye(t.vertex_count)).max():.2e}")

print("\nblock Jacobi residuals (interior levels):")
for n in range(4):
    print(f"  block {n}: {verify_jacobi_form(b, t, n):.2e}")

print("\nhalf-line check (k=1 collapses to a single block):")
t1 = build_tree(1, 6)
b1 = build_spherical_basis(t1)
print("  dims:", [int(d) for d in b1.dims],
      " Jacobi residual:", f"{verify_jacobi_form(b1, t1, 0):.2e}")
