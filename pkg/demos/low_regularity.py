"""
A corner singularity: u = (x^2 + y^2)^((alpha - 2) / 2) * x (x - 1) y (y - 1).

Near the origin u behaves like r^alpha, so u sits in H^(1 + alpha) only
and the attainable orders drop to (alpha, 1 + alpha, 1 + alpha) no matter
how high the polynomial degrees are pushed.  The right-hand side is
singular at the origin as well; the study integrates it with a locally
graded rule on the elements touching the corner, so the observed rates
are limited by the regularity of u and not by quadrature error.
"""
from gwgfem import SchemeParameters, WeakSpaceSignature, get_case, run_convergence_study

params = SchemeParameters(rho=1.0, gamma=-1.0)
sig = WeakSpaceSignature(1, 1, 0)

for alpha in [0.5, 0.8]:
    case = get_case("lowreg", alpha=alpha)
    report = run_convergence_study(case, "tri", [8, 16, 32, 64], sig, params)
    print("alpha = %.1f  (expected orders %.1f, %.1f, %.1f)" % (alpha, alpha, 1 + alpha, 1 + alpha))
    print("%6s %12s %6s %12s %6s %12s %6s" % ("1/h", "energy", "rate", "L2", "rate", "edge", "rate"))
    for row, rates in zip(report.rows, report.rates()):
        cells = ["%6d" % row.label]
        for err, rate in zip((row.energy_err, row.l2_err, row.edge_err), rates):
            cells.append("%12.3E" % err)
            cells.append("  --".rjust(6) if rate is None else "%6.2f" % rate)
        print(" ".join(cells))
    print()
