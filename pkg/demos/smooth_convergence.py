"""
-div(grad u) = f on the unit square, u = cos(pi x) cos(pi y).

Convergence study contrasting two lowest-order families on uniform
triangulations, both with the strong penalty weight gamma = 1.  With
piecewise-constant interiors the classical choice P0/P0/[P0]^2 does not
converge at all in the energy or interior norms; enriching only the edge
and gradient degrees to P0/P1/[P1]^2 restores second-order convergence
everywhere without touching the interior space.  A higher-order family
is run last to show the (k, k+1, k+1) orders in the smooth regime.
"""
from gwgfem import SchemeParameters, WeakSpaceSignature, get_case, run_convergence_study

case = get_case("cospi_cospi")


def show(report, title):
    print(title)
    print("%6s %12s %6s %12s %6s %12s %6s" % ("1/h", "energy", "rate", "L2", "rate", "edge", "rate"))
    for row, rates in zip(report.rows, report.rates()):
        cells = ["%6d" % row.label]
        for err, rate in zip((row.energy_err, row.l2_err, row.edge_err), rates):
            cells.append("%12.3E" % err)
            cells.append("  --".rjust(6) if rate is None else "%6.2f" % rate)
        print(" ".join(cells))
    print()


report = run_convergence_study(
    case,
    "tri",
    [8, 16, 32, 64],
    WeakSpaceSignature(0, 0, 0),
    SchemeParameters(rho=1.0, gamma=1.0),
)
show(report, "P0/P0/[P0]^2, gamma=1  (stalls: only the edge error decays)")

report = run_convergence_study(
    case,
    "tri",
    [8, 16, 32, 64],
    WeakSpaceSignature(0, 1, 1),
    SchemeParameters(rho=1.0, gamma=1.0),
)
show(report, "P0/P1/[P1]^2, gamma=1  (same interiors, now second order)")

report = run_convergence_study(
    case,
    "tri",
    [4, 8, 16, 32],
    WeakSpaceSignature(2, 3, 3),
    SchemeParameters(rho=1.0, gamma=-1.0),
)
show(report, "P2/P3/[P3]^2, gamma=-1  (smooth regime: orders 2, 3, 3)")
