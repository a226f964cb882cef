"""Laplace-type integrals, their leading-order asymptotics, Watson partial
sums, the Phi kernel, sub-exponential convolution bounds, and the tail
regression utility."""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .reports import CheckReport

QUADRATURE = "quadrature"
ASYMPTOTIC = "asymptotic"
LARGE = "large"
SMALL = "small"


@dataclass(frozen=True)
class LaplaceSpec:
    """Integral int_0^inf u^{n-1} exp(-u^gamma/gamma - y/u) du."""

    n: int
    gamma: float
    y: float

    def __post_init__(self):
        assert self.n >= 0 and self.gamma > 0 and self.y >= 0
        assert self.n >= 1 or self.y > 0, "n=0 requires y>0 for integrability"


def laplace_integral(spec: LaplaceSpec, mode: str = QUADRATURE,
                     regime: str = LARGE) -> float:
    n, g, y = spec.n, spec.gamma, spec.y
    if mode == ASYMPTOTIC:
        if regime == SMALL:
            if n == 0:
                return float(np.abs(np.log(y)))
            return float(g ** (n / g - 1.0) * gamma_fn(n / g))
        # saddle at u = y^{1/(1+gamma)}, leading order only
        ex = (1.0 + g) / g * y ** (g / (1.0 + g))
        power = n / (g + 1.0) - g / (2.0 * (1.0 + g))
        return float(np.sqrt(2.0 * np.pi / (1.0 + g)) * y ** power * np.exp(-ex))
    assert mode == QUADRATURE
    if y == 0.0:
        val, _ = integrate.quad(lambda u: u ** (n - 1) * np.exp(-u ** g / g),
                                0.0, np.inf, limit=200)
        return float(val)
    # substitute u = Y z with Y = y^{1/(1+gamma)}; the phase h(z) = z^g/g + 1/z
    # has its minimum at z = 1, factored out so the integrand is O(1)-scaled
    Y = y ** (1.0 / (1.0 + g))
    Yg = Y ** g
    h1 = (1.0 + g) / g

    def integrand(z):
        return z ** (n - 1) * np.exp(-Yg * (z ** g / g + 1.0 / z - h1))

    # split at the saddle z=1 (scipy cannot mix breakpoints with an
    # infinite limit)
    v1, _ = integrate.quad(integrand, 0.0, 1.0, limit=400,
                           epsabs=1e-300, epsrel=1e-10)
    v2, _ = integrate.quad(integrand, 1.0, np.inf, limit=400,
                           epsabs=1e-300, epsrel=1e-10)
    return float(Y ** n * np.exp(-Yg * h1) * (v1 + v2))


def phi_quadrature(y: float, d: int, gamma: float) -> float:
    """Phi(y) = |y|^{1-d} int_0^inf u^{d-2} exp(-|y|/u - u^gamma/gamma) du."""
    y = abs(float(y))
    assert y > 0, "Phi diverges at y=0"
    return y ** (1 - d) * laplace_integral(LaplaceSpec(d - 1, gamma, y))


def phi_asymptotic(y: float, d: int, gamma: float, regime: str = LARGE) -> float:
    y = abs(float(y))
    g = gamma
    if regime == LARGE:
        ex = (1.0 + g) / g * y ** (g / (1.0 + g))
        power = -(g / (g + 1.0)) * (d - 0.5)
        return float(np.sqrt(2.0 * np.pi / (1.0 + g)) * y ** power * np.exp(-ex))
    if d == 1:
        return float(np.abs(np.log(y)))
    return float(g ** ((d - 1) / g - 1.0) * gamma_fn((d - 1) / g) / y ** (d - 1))


def watson_partial_sum(coeffs, lam: float, X: float) -> float:
    """sum_n a_n Gamma(n + lam) / X^{n + lam} for g(t) ~ sum a_n t^{n + lam - 1}."""
    assert X > 0 and lam > 0
    return float(sum(a * gamma_fn(k + lam) / X ** (k + lam)
                     for k, a in enumerate(coeffs)))


def subexp_convolution_check(b1: float, b2: float, a: float, t_grid) -> CheckReport:
    """Bound int_0^t e^{-b1 s^a} e^{-b2 (t-s)} ds by C e^{-b1 t^a} on a grid,
    and the two-exponential convolution by e^{-min(b1,b2) t}/|b2-b1|."""
    assert b1 > 0 and b2 > 0 and 0 < a < 1 and b1 != b2
    t_grid = np.asarray(t_grid, dtype=float)
    notes = []
    ratios = []
    for t in t_grid[t_grid > 0]:
        val, _ = integrate.quad(
            lambda s: np.exp(-b1 * s ** a + b1 * t ** a - b2 * (t - s)), 0.0, t,
            limit=200)
        ratios.append(val)
    C = float(np.max(ratios)) if ratios else 0.0
    ok_sub = np.all(np.isfinite(ratios))
    # the subexponential always wins eventually: the ratio must stop growing
    if len(ratios) >= 3:
        ok_sub = ok_sub and ratios[-1] <= C * (1.0 + 1e-9)
    # two plain exponentials: closed form (e^{-b1 t} - e^{-b2 t})/(b2 - b1);
    # everything scaled by e^{+min(b1,b2) t} to stay O(1) on long grids
    bmin = min(b1, b2)
    worst = 0.0
    for t in t_grid[t_grid > 0]:
        val, _ = integrate.quad(
            lambda s: np.exp(-b1 * s - b2 * (t - s) + bmin * t), 0.0, t,
            limit=200)
        closed = (np.exp((bmin - b1) * t) - np.exp((bmin - b2) * t)) / (b2 - b1)
        assert abs(val - closed) <= 1e-9 * max(abs(closed), 1e-300)
        worst = max(worst, val * abs(b2 - b1))
    ok_exp = worst <= 1.0 + 1e-9
    notes.append(f"two-exponential ratio to e^(-min(b1,b2)t)/|b2-b1| peaks at {worst:.6g}")
    return CheckReport(
        name="subexp-convolution",
        passed=bool(ok_sub and ok_exp),
        max_violation=max(0.0, worst - 1.0),
        constants={"C": C, "b1": b1, "b2": b2, "a": a},
        notes=notes,
    )


@dataclass
class FitReport:
    c_hat: float
    beta_hat: float
    nu_hat: float
    residual: float
    cond: float


def tail_fit(x, ln_rho, alpha: float) -> FitReport:
    """Least squares of ln rho against {1, ln x, -x^alpha}."""
    x = np.asarray(x, dtype=float)
    ln_rho = np.asarray(ln_rho, dtype=float)
    assert len(x) >= 10 and np.all(np.diff(x) > 0) and np.all(x > 0)
    A = np.column_stack([np.ones_like(x), np.log(x), -x ** alpha])
    coef, res, rank, sv = np.linalg.lstsq(A, ln_rho, rcond=None)
    if rank < 3:
        raise np.linalg.LinAlgError("rank-deficient tail fit (window too narrow)")
    resid = float(np.sqrt(np.sum((A @ coef - ln_rho) ** 2) / len(x)))
    return FitReport(c_hat=float(coef[0]), beta_hat=float(coef[1]),
                     nu_hat=float(coef[2]), residual=resid,
                     cond=float(sv[0] / sv[-1]))
