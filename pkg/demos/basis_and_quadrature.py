"""
Why the element bases are centered and scaled.

Raw monomials x^a y^b on a small element produce mass matrices whose
condition number explodes with the degree and shrinks with the mesh
size; shifting to the centroid and dividing by the element diameter
makes the conditioning mesh-independent.  The second half exercises the
quadrature rules: each rule of requested degree d integrates every
monomial up to degree d exactly.
"""
import numpy as np

from gwgfem.polybasis import (
    ElementBasis,
    dim_pk,
    element_quadrature,
    map_to_element,
    monomial_exponents,
)

verts = np.array([[0.25, 0.5], [0.375, 0.5], [0.25, 0.625]])  # h = 1/8 triangle
centroid = verts.mean(axis=0)
h = 0.125 * np.sqrt(2.0)

print("mass matrix condition numbers on an h=%.3f triangle" % h)
print("%8s %18s %18s" % ("degree", "raw monomials", "scaled/centered"))
for degree in [1, 2, 3, 4]:
    rule = element_quadrature("triangle", 2 * degree)
    pts, w = map_to_element(rule, verts)
    conds = []
    for basis in [ElementBasis(degree, np.zeros(2), 1.0), ElementBasis(degree, centroid, h)]:
        V = basis.eval(pts)
        M = (w[:, None] * V).T @ V
        conds.append(np.linalg.cond(M))
    print("%8d %18.3e %18.3e" % (degree, conds[0], conds[1]))

print()
print("quadrature exactness (worst relative error over all monomials)")
print("%12s %8s %8s %14s" % ("shape", "degree", "points", "worst error"))
square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
triangle = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
for shape, vv in [("triangle", triangle), ("rectangle", square)]:
    for degree in [3, 6, 9]:
        rule = element_quadrature(shape, degree)
        pts, w = map_to_element(rule, vv)
        worst = 0.0
        for a, b in monomial_exponents(degree):
            approx = float(w @ (pts[:, 0] ** a * pts[:, 1] ** b))
            if shape == "triangle":
                # exact integral over the reference triangle
                from math import factorial

                exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            else:
                exact = 1.0 / ((a + 1) * (b + 1))
            worst = max(worst, abs(approx - exact) / exact)
        print("%12s %8d %8d %14.3e" % (shape, degree, len(w), worst))

print()
print("dim P_k on an element: %s" % [dim_pk(k) for k in range(6)])
