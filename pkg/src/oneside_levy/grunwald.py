"""Generator weights of the compound-Poisson grid approximation.

The mesh-h chain moves with transition weights G_0..G_J determined by the
power-series expansion

    psi((1 - xi)/h) = sum_j G_j xi^j,   |xi| < 1.

G_0 > 0 is the downward (drift) step rate, G_1 < 0 the total holding rate and
G_j >= 0 (j >= 2) the rate of an upward jump of j-1 grid cells.  Tail sums
T_j = sum_{k>=j} G_k double as boundary-row weights; they are computed exactly
as negated partial sums, which is the same thing whenever the full series sums
to zero.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidMeasureError, OverflowGuardError, QuadratureError
from .symbol import LaplaceExponent

_SIGN_SLACK = 1e-12


@dataclass(frozen=True)
class GrunwaldCoeffs:
    """Weights G_0..G_{j_max} with exact tail sums T_0..T_{j_max+1}."""

    h: float
    g: np.ndarray
    tail: np.ndarray
    j_max: int
    tail_mass_bound: float

    def __post_init__(self):
        scale = abs(self.g[1])
        if not (self.g[0] > 0.0 and self.g[1] < 0.0):
            raise InvalidMeasureError("leading weights violate their sign pattern")
        if np.any(self.g[2:] < -_SIGN_SLACK * scale):
            raise InvalidMeasureError("a jump weight is negative beyond roundoff")

    @property
    def total_rate(self) -> float:
        """Rate of leaving any interior grid point, -G_1."""
        return -float(self.g[1])

    def tail_sum(self, j: int) -> float:
        """T_j = -sum_{k<j} G_k (= sum_{k>=j} G_k when the series sums to 0)."""
        if not 0 <= j <= self.j_max + 1:
            raise IndexError(f"tail index {j} outside 0..{self.j_max + 1}")
        return float(self.tail[j])


def compute_coeffs(exp: LaplaceExponent, h: float, j_max: int) -> GrunwaldCoeffs:
    """Expand psi((1-xi)/h) to order j_max.

    Stable and tempered-stable symbols use the binomial closed form through
    the ratio recurrence w_{j+1} = w_j (j - alpha)/(j + 1); custom symbols get
    G_0 = psi(1/h), G_1 = -psi'(1/h)/h and, for j >= 2, the moment integrals
    G_j = (1/j!) int exp(-y/h) (y/h)^j rho(dy).
    """
    if h <= 0.0:
        raise ValueError(f"mesh h must be > 0, got {h}")
    if j_max < 2:
        raise ValueError(f"j_max must be >= 2, got {j_max}")
    m = exp.measure
    if m.kind in ("stable", "tempered_stable"):
        g = _binomial_weights(m.alpha, m.lam if m.kind == "tempered_stable" else 0.0,
                              h, j_max, exp)
    else:
        g = _moment_weights(exp, h, j_max)
    tail = np.concatenate(([0.0], -np.cumsum(g)))
    return GrunwaldCoeffs(h=h, g=g, tail=tail, j_max=j_max,
                          tail_mass_bound=abs(float(tail[-1])))


def _binomial_weights(alpha: float, lam: float, h: float, j_max: int,
                      exp: LaplaceExponent) -> np.ndarray:
    scale = h ** (-alpha)
    if not math.isfinite(scale):
        raise OverflowGuardError(f"h^-alpha overflows for h={h:g}")
    g = np.empty(j_max + 1)
    if lam == 0.0:
        w = scale  # (-1)^j binom(alpha, j) * h^-alpha, starting at j=0
        for j in range(j_max + 1):
            g[j] = w
            w *= (j - alpha) / (j + 1.0)
    else:
        # Tempering multiplies the j-th binomial weight by (1+lam*h)^(alpha-j)
        # and shifts the two leading coefficients by the linear part of psi.
        u = 1.0 + lam * h
        w = scale * u ** alpha
        for j in range(j_max + 1):
            g[j] = w
            w *= (j - alpha) / ((j + 1.0) * u)
        g[0] = exp.psi(1.0 / h)
        g[1] = -exp.psi_prime(1.0 / h) / h
    return g


def _moment_weights(exp: LaplaceExponent, h: float, j_max: int) -> np.ndarray:
    m = exp.measure
    g = np.empty(j_max + 1)
    g[0] = exp.psi(1.0 / h)
    g[1] = -exp.psi_prime(1.0 / h) / h
    for j in range(2, j_max + 1):
        # log-form Poisson kernel keeps (y/h)^j / j! representable
        def integrand(y, j=j):
            return math.exp(j * math.log(y / h) - y / h - math.lgamma(j + 1)) \
                * m.density(y)

        peak = j * h
        cut = peak + 50.0 * h * math.sqrt(j) + 50.0 * h
        val, err = integrate.quad(integrand, 0.0, cut, points=[peak],
                                  epsabs=0.0, epsrel=1e-11, limit=400)
        if not math.isfinite(val) or (err > 1e-8 * max(abs(val), 1e-300)):
            raise QuadratureError(f"moment integral for weight {j} did not converge")
        g[j] = val
    return g


def tail_sum(c: GrunwaldCoeffs, j: int) -> float:
    return c.tail_sum(j)


def verify_coeffs_cauchy(exp: LaplaceExponent, h: float, j_max: int,
                         radius: float, n_nodes: int | None = None) -> np.ndarray:
    """Independent weight extraction by discrete Fourier inversion.

    Samples xi -> psi((1-xi)/h) on the circle |xi| = radius and reads the
    series coefficients off the FFT.  The radius trades roundoff (small r
    amplifies noise by r^-j) against aliasing from the branch point at xi = 1;
    agreement with :func:`compute_coeffs` is the oracle check.
    """
    if not 0.0 < radius < 1.0:
        raise ValueError(f"radius must lie in (0, 1), got {radius}")
    if n_nodes is None:
        n_nodes = 4 * j_max
    if n_nodes < 4 * j_max:
        warnings.warn(
            f"{n_nodes} circle nodes for {j_max + 1} coefficients invites aliasing",
            stacklevel=2)
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    samples = np.array([_psi_complex(exp, (1.0 - radius * cmath.exp(1j * t)) / h)
                        for t in theta])
    coef = np.fft.fft(samples) / n_nodes
    j = np.arange(j_max + 1)
    # undersampled calls wrap around (that is the aliasing warned about)
    picked = np.take(coef, j, mode="wrap")
    return picked.real * radius ** (-j.astype(float))


def _psi_complex(exp: LaplaceExponent, s: complex) -> complex:
    m = exp.measure
    if m.kind == "stable":
        return s ** m.alpha
    if m.kind == "tempered_stable":
        a, lam = m.alpha, m.lam
        if lam == 0.0:
            return s ** a
        return (s + lam) ** a - lam ** a - a * lam ** (a - 1.0) * s

    def part(fn):
        def compensated(y):
            u = s * y
            if abs(u) < 1e-4:
                w = u * u * (0.5 - u / 6.0 + u * u / 24.0)
            else:
                w = cmath.exp(-u) - 1.0 + u
            return fn(w * m.density(y))

        def near(t):
            y = t ** 4
            return compensated(y) * 4.0 * t ** 3

        v1, _ = integrate.quad(near, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=400)
        cut = exp._tail_cutoff(max(abs(s), 1.0))
        v2, _ = integrate.quad(compensated, 1.0, cut, epsabs=abs(v1) * 1e-14,
                               epsrel=1e-10, limit=400)
        return v1 + v2

    return complex(part(lambda z: z.real), part(lambda z: z.imag))
