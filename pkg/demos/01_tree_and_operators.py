"""Truncated k-ary trees and the operators living on them.

Walks through: breadth-first indexing, the raising/lowering split of the
adjacency, band confinement of the spectrum, and the depth-parity involution
that swaps the two band edges.
"""
import numpy as np

from spectree import (
    PotentialSpec,
    adjacency,
    build_tree,
    children,
    lowering,
    m_tilde,
    parent,
    raising,
    t_minus,
    t_plus,
    theta,
    vertex_depth,
    weights,
)

k, depth = 2, 4
t = build_tree(k, depth)
print(f"binary tree truncated at depth {depth}: {t.vertex_count} vertices")
print("sphere sizes:", [t.sphere_size(r) for r in range(depth + 1)])
print("children of the root:", list(children(t, 0)))
print("vertex 11: depth", vertex_depth(t, 11), "parent", parent(t, 11))

a = adjacency(t)
up, dn = raising(t), lowering(t)
print("\nraising + lowering reproduces the adjacency exactly:",
      np.abs(up + dn - a).max() == 0.0)
print("lowering.raising acts as k on every vertex with children:",
      np.allclose((dn @ up).diagonal()[: t.vertex_count - t.sphere_size(depth)], k))

eigs = np.linalg.eigvalsh(a)
print(f"\nadjacency spectrum inside [-2 sqrt(k), 2 sqrt(k)] = "
      f"[{-2 * np.sqrt(k):.4f}, {2 * np.sqrt(k):.4f}]:")
print(f"  extremes {eigs.min():.4f} .. {eigs.max():.4f}")
print(f"band edges of -adjacency + (k+1): t- = {t_minus(k):.4f}, t+ = {t_plus(k):.4f}")

th = theta(t)
print("\nparity involution flips the adjacency sign:",
      np.abs(th[:, None] * a * th[None, :] + a).max() == 0.0)

spec = PotentialSpec.radial_exp(0.3 * (1 + 0.5j), 6 * np.log(2))
m = m_tilde(t, spec)
print("\neffective perturbation -d0 + M at the root:", m[0])
e_minus, e_plus = weights(t, spec.delta)
print("exponential weights multiply to the identity:",
      np.abs(e_minus * e_plus - 1).max() < 1e-15)
print("growing weight times the perturbation stays bounded:",
      f"{(np.abs(m) * e_plus**2).max():.4f}")
