"""Laplace integrals: quadrature vs saddle-point leading order.

Prints a table of the ratio quadrature/asymptotic across y for the first
few powers n, the predicted first correction (4n^2-1)/(16 sqrt(y)) that
explains the residual defect, the Watson polynomial sanity cases, and the
sub-exponential convolution bound feeding the decay estimates.
"""

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from runtumble.asymptotics import (ASYMPTOTIC, LaplaceSpec, laplace_integral,
                                   subexp_convolution_check,
                                   watson_partial_sum)

ys = [10.0, 50.0, 100.0, 300.0, 1000.0]
print("ratio quadrature / leading-order asymptotic (gamma = 1):")
print("   y     " + "".join(f"   n={n}    " for n in (0, 1, 2)))
for y in ys:
    row = []
    for n in (0, 1, 2):
        q = laplace_integral(LaplaceSpec(n, 1.0, y))
        a = laplace_integral(LaplaceSpec(n, 1.0, y), mode=ASYMPTOTIC)
        row.append(q / a)
    print(f"{y:7.0f} " + "".join(f" {r:8.5f} " for r in row))

print("\npredicted defect from the first correction, (4n^2-1)/(16 sqrt y):")
for y in (50.0, 300.0):
    vals = ", ".join(f"n={n}: {(4 * n * n - 1) / (16 * np.sqrt(y)):+.4f}"
                     for n in (0, 1, 2))
    print(f"  y={y:5.0f}  {vals}")
print("  so n=2 sits ~13% above leading order at y=50: the saddle-point"
      "\n  prefactor converges, but slowly, and faster for small n")

print("\nWatson partial sums vs direct quadrature:")
for lam, coeffs, X in ((0.5, [1.0], 4.0), (1.5, [2.0, 0.3], 7.0)):
    def g(t):
        return sum(a * t ** (k + lam - 1) for k, a in enumerate(coeffs))
    val, _ = integrate.quad(lambda t: g(t) * np.exp(-X * t), 0, np.inf)
    ws = watson_partial_sum(coeffs, lam, X)
    print(f"  lam={lam} X={X}: partial sum {ws:.12g}, quad {val:.12g}, "
          f"rel diff {abs(ws / val - 1):.2e}")

rep = subexp_convolution_check(0.7, 1.3, 0.5, np.linspace(0, 150, 31))
print(f"\nsub-exponential convolution bound: passed={rep.passed}, "
      f"C={rep.constants['C']:.4f}")
for note in rep.notes:
    print(f"  {note}")
