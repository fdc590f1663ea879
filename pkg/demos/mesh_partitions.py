"""
Build the two uniform partitions of the unit square and print their
bookkeeping: element/edge counts, mesh size, and the edge orientation
data the weak-space operators rely on.
"""
import numpy as np

from gwgfem import build_uniform_rectangular, build_uniform_triangular

print("triangular meshes (n x n squares, each split along the diagonal)")
print("%6s %10s %10s %10s %12s" % ("n", "elements", "edges", "boundary", "h_max"))
for n in [2, 4, 8, 16]:
    mesh = build_uniform_triangular(n)
    print(
        "%6d %10d %10d %10d %12.6f"
        % (
            n,
            mesh.n_elements,
            mesh.n_edges,
            int(mesh.boundary_edge.sum()),
            mesh.h_max,
        )
    )

print()
print("rectangular meshes (3x2 coarse grid, quartered per level)")
print("%6s %6s %10s %10s %10s %12s" % ("level", "label", "elements", "edges", "boundary", "h_max"))
for level in [0, 1, 2, 3]:
    mesh = build_uniform_rectangular(level)
    print(
        "%6d %6d %10d %10d %10d %12.6f"
        % (
            level,
            4 * 2**level,
            mesh.n_elements,
            mesh.n_edges,
            int(mesh.boundary_edge.sum()),
            mesh.h_max,
        )
    )

# sanity: the element areas tile the unit square exactly
mesh = build_uniform_triangular(8)
areas = mesh.element_areas()
print()
print("triangular n=8: sum of element areas = %.15f" % areas.sum())

# every interior edge is shared by exactly two elements, with opposite
# orientation flags so that traces are matched consistently
counts = np.zeros(mesh.n_edges, dtype=int)
signs = np.zeros(mesh.n_edges)
for e in range(mesh.n_elements):
    for edge, sign in zip(mesh.element_edges[e], mesh.element_edge_signs[e]):
        counts[edge] += 1
        signs[edge] += sign
interior = ~mesh.boundary_edge
print("interior edges seen twice: %s" % bool((counts[interior] == 2).all()))
print("interior orientation flags cancel: %s" % bool((signs[interior] == 0).all()))
print("boundary edges seen once: %s" % bool((counts[mesh.boundary_edge] == 1).all()))
