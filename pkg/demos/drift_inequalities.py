"""Foster-Lyapunov drift inequalities, checked on a grid.

Builds the exponential and polynomial weights with their closed-form
coefficients, applies the dual generator, and reports the fitted (C, eps)
pairs.  A negative control with the velocity coefficient B cut by 100
demonstrates that the check actually constrains the weight.
"""

from runtumble import ModelParams, PhaseGrid, TanhPsi
from runtumble.lyapunov import (ExponentialWeight, PolynomialWeight,
                                drift_check, exp_B_formula, poly_B_min)

p = ModelParams(gamma=1.0, chi=0.5, psi=TanhPsi(scale=10.0))
grid = PhaseGrid(x_max=500.0, v_max=20.0, nx=600, nv=60)

a, nu = 0.5, 1e-2
B = exp_B_formula(p, a, nu)
w = ExponentialWeight(a=a, b=0.25, nu=nu, B=B)
w.validate(p)
print(f"exponential weight: a={a} b={w.b} nu={nu} B={B:.4f}")
print(f"  norm-equivalence constants delta1={w.delta1(p):.4g} "
      f"delta2={w.delta2(p):.4g}")
rep = drift_check(w, p, grid)
print(f"  drift check: passed={rep.passed} C={rep.fitted_C:.4g} "
      f"eps={rep.fitted_eps:.4g} (argmax at x={rep.argmax_cell[0]:.1f}, "
      f"v={rep.argmax_cell[1]:.2f})")

bad = ExponentialWeight(a=a, b=0.25, nu=nu, B=B / 100.0)
rep_bad = drift_check(bad, p, grid)
print(f"  negative control B/100: passed={rep_bad.passed}")
for n in rep_bad.notes:
    print(f"    note: {n}")

k = 2.0
Bp = 1.5 * poly_B_min(p, k)
wp = PolynomialWeight(k=k, B=Bp)
wp.validate(p)
print(f"polynomial weight: k={k} B={Bp:.4f} "
      f"(positivity threshold {poly_B_min(p, k):.4f})")
rep_p = drift_check(wp, p, grid)
print(f"  drift check: passed={rep_p.passed} C={rep_p.fitted_C:.4g} "
      f"eps={rep_p.fitted_eps:.4g} R={rep_p.fitted_R:.4g}")
print("  interpretation: the generator pushes the weight down by "
      "eps*(<x>^{k-1}+<v>^{2k}) outside the compact sublevel set {m <= R}")
