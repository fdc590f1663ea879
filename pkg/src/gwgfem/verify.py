"""Manufactured solutions, discrete error norms, and convergence studies.

The error measured is e_h = Qh u - u_h, i.e. the distance to the projection
of the exact solution into the weak space, in three norms:

  * energy:   ( sum_T (a grad_g e, grad_g e)_T + s(e, e) )^(1/2)
  * interior: L2 norm of e0 over the domain
  * edge:     ( sum_T h_T || e_b ||^2_{boundary of T} )^(1/2), interior
              edges counted once per incident element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import SchemeParameters, SingularSystem, assemble, solve
from .mesh import Mesh, build_uniform_rectangular, build_uniform_triangular
from .weakspace import OperatorCache, WeakFunction, WeakSpaceSignature, project_Qh

__all__ = [
    "ManufacturedCase",
    "get_case",
    "lowreg_case",
    "error_function",
    "energy_norm",
    "l2_norm_e0",
    "edge_norm_eb",
    "LevelResult",
    "ErrorReport",
    "run_convergence_study",
]


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution with matching source and boundary data.

    u, f, g are vectorized (n, 2) -> (n,); grad_u is (n, 2) -> (n, 2).
    singular_point/singular_strength describe a point where u behaves like
    r**singular_strength, so that integration can be graded toward it.
    """

    name: str
    u: object
    grad_u: object
    f: object
    g: object
    note: str = ""
    singular_point: object = None
    singular_strength: float | None = None

    @property
    def singularity(self):
        if self.singular_point is None:
            return None
        return (np.asarray(self.singular_point, dtype=float), float(self.singular_strength))


def _cospi_cospi() -> ManufacturedCase:
    def u(p):
        return np.cos(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1])

    def grad_u(p):
        return np.column_stack(
            [
                -np.pi * np.sin(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]),
                -np.pi * np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]),
            ]
        )

    def f(p):
        return 2.0 * np.pi**2 * u(p)

    return ManufacturedCase(
        "cospi_cospi", u, grad_u, f, u, note="u = cos(pi x) cos(pi y), smooth"
    )


def _cospi_sinpi() -> ManufacturedCase:
    def u(p):
        return np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])

    def grad_u(p):
        return np.column_stack(
            [
                -np.pi * np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]),
                np.pi * np.cos(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]),
            ]
        )

    def f(p):
        return 2.0 * np.pi**2 * u(p)

    return ManufacturedCase(
        "cospi_sinpi", u, grad_u, f, u, note="u = cos(pi x) sin(pi y), smooth"
    )


def _x2_cospi() -> ManufacturedCase:
    def u(p):
        return p[:, 0] ** 2 * np.cos(np.pi * p[:, 1])

    def grad_u(p):
        return np.column_stack(
            [
                2.0 * p[:, 0] * np.cos(np.pi * p[:, 1]),
                -np.pi * p[:, 0] ** 2 * np.sin(np.pi * p[:, 1]),
            ]
        )

    def f(p):
        return (np.pi**2 * p[:, 0] ** 2 - 2.0) * np.cos(np.pi * p[:, 1])

    return ManufacturedCase(
        "x2_cospi", u, grad_u, f, u, note="u = x^2 cos(pi y), smooth"
    )


_SMOOTH_CASES = {
    "cospi_cospi": _cospi_cospi,
    "cospi_sinpi": _cospi_sinpi,
    "x2_cospi": _x2_cospi,
}


def lowreg_case(alpha: float) -> ManufacturedCase:
    """u = r^(alpha - 2) x(x-1) y(y-1): in H^(1+alpha-eps) near the origin.

    0 < alpha <= 1.  The solution vanishes on the boundary; the source has
    an r^(alpha-2) singularity at the origin.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"regularity index alpha must lie in (0, 1], got {alpha}")
    beta = (alpha - 2.0) / 2.0  # u = (x^2 + y^2)^beta * P

    def _pieces(p):
        x, y = p[:, 0], p[:, 1]
        r2 = x * x + y * y
        P = x * (x - 1.0) * y * (y - 1.0)
        return x, y, r2, P

    def u(p):
        x, y, r2, P = _pieces(p)
        out = np.zeros(p.shape[0])
        m = r2 > 0.0
        out[m] = r2[m] ** beta * P[m]
        return out

    def grad_u(p):
        x, y, r2, P = _pieces(p)
        out = np.zeros((p.shape[0], 2))
        m = r2 > 0.0
        px = (2.0 * x - 1.0) * y * (y - 1.0)
        py = x * (x - 1.0) * (2.0 * y - 1.0)
        w = r2[m] ** beta
        out[m, 0] = w * (px[m] + 2.0 * beta * P[m] * x[m] / r2[m])
        out[m, 1] = w * (py[m] + 2.0 * beta * P[m] * y[m] / r2[m])
        return out

    def f(p):
        x, y, r2, P = _pieces(p)
        out = np.zeros(p.shape[0])
        m = r2 > 0.0
        lap_P = 2.0 * x * (x - 1.0) + 2.0 * y * (y - 1.0)
        # W = x dP/dx + y dP/dy
        W = x * (2.0 * x - 1.0) * y * (y - 1.0) + y * x * (x - 1.0) * (2.0 * y - 1.0)
        out[m] = -(r2[m] ** beta) * (
            lap_P[m] + (4.0 * beta * W[m] + 4.0 * beta**2 * P[m]) / r2[m]
        )
        return out

    def g(p):
        return np.zeros(p.shape[0])

    return ManufacturedCase(
        "lowreg",
        u,
        grad_u,
        f,
        g,
        note=f"u = r^(alpha-2) x(x-1) y(y-1) with alpha = {alpha}",
        singular_point=(0.0, 0.0),
        singular_strength=alpha,
    )


def get_case(name: str, alpha: float | None = None) -> ManufacturedCase:
    """Look up a manufactured case by name; 'lowreg' additionally needs alpha."""
    if name == "lowreg":
        if alpha is None:
            raise ValueError("case 'lowreg' requires the regularity index alpha")
        return lowreg_case(alpha)
    if name not in _SMOOTH_CASES:
        known = ", ".join(sorted(_SMOOTH_CASES) + ["lowreg"])
        raise ValueError(f"unknown case {name!r}; available: {known}")
    if alpha is not None:
        raise ValueError(f"case {name!r} does not take a regularity index")
    return _SMOOTH_CASES[name]()


# ----------------------------------------------------------------- norms


def error_function(case: ManufacturedCase, u_h: WeakFunction, cache: OperatorCache) -> WeakFunction:
    """e_h = Qh u - u_h on the space of u_h."""
    qhu = project_Qh(case.u, cache.mesh, cache.signature, singularity=case.singularity, cache=cache)
    return qhu - u_h


def energy_norm(wf: WeakFunction, params: SchemeParameters, cache: OperatorCache) -> float:
    """Scheme energy: (sum_T (a grad_g v, grad_g v)_T + s(v, v))^(1/2)."""
    dm = cache.dofmap
    total = 0.0
    for ops, elems in cache.classes():
        vloc = wf.coeffs[dm.element_dof_table[elems]]
        stab = params.rho * ops.h_T**params.gamma * ops.stab_unit
        if params.is_identity or params.coefficient.ndim == 2:
            a = params.tensor()
            K = a[0, 0] * ops.Sxx + a[0, 1] * (ops.Sxy + ops.Sxy.T) + a[1, 1] * ops.Syy + stab
            total += float(np.einsum("ei,ij,ej->", vloc, K, vloc))
        else:
            a = params.coefficient[elems]
            K = (
                a[:, 0, 0, None, None] * ops.Sxx
                + a[:, 0, 1, None, None] * (ops.Sxy + ops.Sxy.T)
                + a[:, 1, 1, None, None] * ops.Syy
                + stab
            )
            total += float(np.einsum("ei,eij,ej->", vloc, K, vloc))
    return math.sqrt(max(total, 0.0))


def l2_norm_e0(wf: WeakFunction, cache: OperatorCache) -> float:
    """L2 norm of the interior component over the domain."""
    dm = cache.dofmap
    n0 = cache.signature.interior_dim
    total = 0.0
    for ops, elems in cache.classes():
        v0 = wf.coeffs[dm.element_dof_table[elems, :n0]]
        total += float(np.einsum("ei,ij,ej->", v0, ops.M0, v0))
    return math.sqrt(max(total, 0.0))


def edge_norm_eb(wf: WeakFunction, cache: OperatorCache) -> float:
    """(sum_T h_T ||v_b||^2 over the element boundary)^(1/2)."""
    mesh, dm = cache.mesh, cache.dofmap
    nb = cache.signature.edge_dim
    total = 0.0
    for ops, elems in cache.classes():
        for side in range(ops.n_sides):
            eidx = mesh.element_edges[elems, side]
            c = wf.coeffs[dm.n_interior + eidx[:, None] * nb + np.arange(nb)]
            total += ops.h_T * float(np.einsum("ei,i,ei->", c, ops.edge_mass[side], c))
    return math.sqrt(max(total, 0.0))


# ------------------------------------------------------------- studies


@dataclass(frozen=True)
class LevelResult:
    """Errors of one refinement level; label is the nominal 1/h."""

    label: int
    h_max: float
    n_dofs: int
    energy_err: float
    l2_err: float
    edge_err: float


@dataclass
class ErrorReport:
    """Per-level errors of a convergence study plus observed rates."""

    case_name: str
    mesh_family: str
    signature: WeakSpaceSignature
    params: SchemeParameters
    rows: list = field(default_factory=list)

    def rates(self):
        """Rate triples (energy, l2, edge); None entries on the first row."""
        out = [(None, None, None)]
        for prev, cur in zip(self.rows, self.rows[1:]):
            ratio = math.log(prev.h_max / cur.h_max)
            out.append(
                tuple(
                    math.log(getattr(prev, k) / getattr(cur, k)) / ratio
                    if getattr(prev, k) > 0 and getattr(cur, k) > 0
                    else math.nan
                    for k in ("energy_err", "l2_err", "edge_err")
                )
            )
        return out[: len(self.rows)]

    def final_rates(self):
        return self.rates()[-1] if len(self.rows) > 1 else (None, None, None)


def _mesh_for(mesh_family: str, label: int) -> Mesh:
    if mesh_family == "tri":
        return build_uniform_triangular(label)
    if mesh_family == "rect":
        if label % 4 != 0:
            raise ValueError(f"rectangular mesh labels are 4*2^L, got {label}")
        ratio = label // 4
        level = int(round(math.log2(ratio)))
        if ratio != 2**level:
            raise ValueError(f"rectangular mesh labels are 4*2^L, got {label}")
        return build_uniform_rectangular(level)
    raise ValueError(f"unknown mesh family {mesh_family!r}; expected 'tri' or 'rect'")


def run_convergence_study(
    case: ManufacturedCase,
    mesh_family: str,
    levels,
    signature: WeakSpaceSignature,
    params: SchemeParameters,
    solver: str = "direct",
) -> ErrorReport:
    """Solve the scheme on a refinement sequence and collect error norms.

    levels are nominal 1/h labels (triangular: subdivisions per side;
    rectangular: 4*2^L), strictly increasing, at least two of them.  If a
    level produces a singular system the raised SingularSystem carries the
    offending label (.level) and the completed rows (.partial).
    """
    labels = [int(v) for v in levels]
    if len(labels) < 2:
        raise ValueError("a convergence study needs at least two refinement levels")
    if any(b <= a for a, b in zip(labels, labels[1:])):
        raise ValueError(f"refinement levels must be strictly increasing, got {labels}")

    report = ErrorReport(case.name, mesh_family, signature, params)
    for label in labels:
        mesh = _mesh_for(mesh_family, label)
        cache = OperatorCache(mesh, signature)
        system = assemble(
            mesh, signature, params, case.f, case.g, cache=cache, singularity=case.singularity
        )
        try:
            u_h = solve(system, method=solver)
        except SingularSystem as err:
            err.level = label
            err.partial = report
            raise
        e_h = error_function(case, u_h, cache)
        report.rows.append(
            LevelResult(
                label=label,
                h_max=mesh.h_max,
                n_dofs=cache.dofmap.total,
                energy_err=energy_norm(e_h, params, cache),
                l2_err=l2_norm_e0(e_h, cache),
                edge_err=edge_norm_eb(e_h, cache),
            )
        )
    return report
