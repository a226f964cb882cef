"""Kernel objects of the kinetic model.

The velocity equilibrium M, its moment constants c_{k,gamma}, the tumbling
rate Lambda = 1 + chi*psi, the product Psi(z) = z*psi(z), and the averaged
lower bound zeta used by the drift checks.  Everything here is a pure
function of its arguments.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn


class Psi:
    """Odd, bounded, nondecreasing bias profile psi."""

    def __call__(self, z):
        raise NotImplementedError


class SignPsi(Psi):
    """psi(z) = sgn(z) with psi(0) := 0 (odd extension)."""

    smooth = False

    def __call__(self, z):
        return np.sign(z)

    def __repr__(self):
        return "SignPsi()"


class TanhPsi(Psi):
    """psi(z) = tanh(scale*z), the smooth regularization of SignPsi."""

    smooth = True

    def __init__(self, scale=1.0):
        assert scale > 0
        self.scale = float(scale)

    def __call__(self, z):
        return np.tanh(self.scale * np.asarray(z, dtype=float))

    def __repr__(self):
        return f"TanhPsi(scale={self.scale})"


class TablePsi(Psi):
    """psi given by samples on z >= 0, extended oddly and clamped at the ends.

    Linear interpolation between samples; values must be in [0, 1] and
    nondecreasing so the interpolant satisfies the same constraints.
    """

    smooth = True

    def __init__(self, z_samples, values):
        z = np.asarray(z_samples, dtype=float)
        w = np.asarray(values, dtype=float)
        assert z.ndim == 1 and z.shape == w.shape and len(z) >= 2
        assert np.all(np.diff(z) > 0) and z[0] >= 0
        assert np.all(np.diff(w) >= -1e-15), "samples must be nondecreasing"
        assert np.all(w >= -1e-15) and np.all(w <= 1 + 1e-15)
        if z[0] > 0:
            # pin the odd extension through the origin
            z = np.concatenate([[0.0], z])
            w = np.concatenate([[0.0], w])
        self.z = z
        self.w = np.clip(w, 0.0, 1.0)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.interp(np.abs(z), self.z, self.w)
        return np.sign(z) * out

    def __repr__(self):
        return f"TablePsi({len(self.z)} samples)"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: tail exponent gamma, sensitivity chi, bias psi, dimension."""

    gamma: float = 1.0
    chi: float = 0.8
    psi: Psi = field(default_factory=SignPsi)
    dim: int = 1

    def __post_init__(self):
        assert self.gamma > 0
        assert 0 < self.chi < 1
        assert self.dim >= 1


def jbracket(x):
    """Japanese bracket sqrt(1 + |x|^2)."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + x * x)


def moment_constant(k, p: ModelParams):
    """c_{k,gamma} = 2 pi^{d/2} gamma^{(d+k)/gamma - 1} Gamma((d+k)/gamma) / Gamma(d/2).

    Normalization constant of |v|^k exp(-|v|^gamma/gamma) over R^d.  Raises
    OverflowError when the Gamma factor leaves double range.
    """
    assert k >= 0
    d, g = p.dim, p.gamma
    val = 2.0 * np.pi ** (d / 2.0) * g ** ((d + k) / g - 1.0) \
        * gamma_fn((d + k) / g) / gamma_fn(d / 2.0)
    if not np.isfinite(val):
        raise OverflowError(f"moment constant overflows for k={k}, gamma={g}, d={d}")
    return float(val)


def maxwellian(v, p: ModelParams):
    """Equilibrium density c_{0,gamma}^{-1} exp(-|v|^gamma/gamma).

    `v` is a scalar or array of velocity magnitudes' signed values in d=1;
    for d > 1 pass |v| (the density is radial).
    """
    v = np.asarray(v, dtype=float)
    return np.exp(-np.abs(v) ** p.gamma / p.gamma) / moment_constant(0, p)


def tumbling_rate(z, p: ModelParams):
    """Lambda(z) = 1 + chi*psi(z), with z the alignment x.v/jbracket(x)."""
    return 1.0 + p.chi * p.psi(z)


def psi_product(z, p: ModelParams):
    """Psi(z) = z*psi(z) >= 0; equals |z| for the sign profile."""
    z = np.asarray(z, dtype=float)
    return z * p.psi(z)


def velocity_cut(p: ModelParams, tail_mass=1e-12):
    """Speed V with analytic M-tail mass beyond V below `tail_mass` (d=1)."""
    # 2 int_V^inf M dv <= 2 M(V) * V^{1-gamma} * ... ; solve crudely by bisection
    lo, hi = 1.0, 10.0
    while 2.0 * integrate.quad(lambda v: maxwellian(v, p), hi, np.inf)[0] > tail_mass:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("tail mass target unreachable")
    return hi


def zeta_lower_bound(p: ModelParams, x_samples, rtol=1e-6):
    """min over samples with |x| >= 1 of int Psi(x v / jbracket(x)) M(v) dv.

    Grid estimate of the averaged-bias constant (d=1 only); strictly positive
    for any valid psi.  The large-|x| limit is c_{1,gamma}/c_{0,gamma} for
    psi = sign.
    """
    assert p.dim == 1, "averaged bias bound implemented for d=1"
    xs = [x for x in np.atleast_1d(x_samples) if abs(x) >= 1.0]
    assert xs, "need at least one sample with |x| >= 1"
    vcut = velocity_cut(p)
    best = np.inf
    for x in xs:
        s = x / jbracket(x)

        def integrand(v):
            return psi_product(s * v, p) * maxwellian(v, p)

        val, err = integrate.quad(integrand, -vcut, vcut, limit=200,
                                  epsabs=0.0, epsrel=rtol)
        if not (val > 0 and err <= 10 * rtol * val):
            raise RuntimeError(f"bias quadrature did not converge at x={x}")
        best = min(best, val)
    return best
