"""Scale functions, operator convolution series and exit laws on [0, a].

W is the nondecreasing function whose Laplace transform is 1/psi, extended by
0 to the negative half-line.  Its q-tilted extensions

    W_q = W + sum_n q^n (W*)^n W,    Z_q[g] = g + sum_n q^n (W*)^n g

parameterise resolvent densities and exit laws of the interval-restricted
processes.  For the stable symbol, W(x) = x^(alpha-1)/Gamma(alpha) and the
series collapse to Mittag-Leffler functions, which this module uses as the
primary evaluation route; the iterated-convolution series with
product-integration quadrature is kept as an independent oracle.

Coordinates here are [0, a] for the process with downward jumps and upward
drift; the bridge to the [-1, 1] grid coordinates (x values mirrored, a = 2)
is owned by the experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve

from .errors import NonConvergenceError, RangeExceededError

_ML_RANGE = 100.0


def mittag_leffler(gamma: float, beta: float, x: float) -> float:
    """Two-parameter Mittag-Leffler series sum_n x^n / Gamma(gamma*n + beta).

    Compensated summation in term order; documented validity |x| <= 100 at
    double precision (beyond that the alternating case loses all digits).
    """
    if gamma <= 0.0 or beta <= 0.0:
        raise ValueError("gamma and beta must be positive")
    if abs(x) > _ML_RANGE:
        raise RangeExceededError(f"|x| = {abs(x):g} outside series range {_ML_RANGE}")
    if x == 0.0:
        return 1.0 / math.gamma(beta)
    terms = []
    logax = math.log(abs(x))
    sign = 1.0
    n = 0
    while n < 10_000:
        t = sign * math.exp(n * logax - math.lgamma(gamma * n + beta))
        terms.append(t)
        if n > abs(x) ** (1.0 / gamma) + 4 and abs(t) < 1e-18 * max(1e-300, abs(math.fsum(terms))):
            break
        if x < 0.0:
            sign = -sign
        n += 1
    return math.fsum(terms)


def _ml_array(gamma: float, beta: float, xs: np.ndarray) -> np.ndarray:
    return np.array([mittag_leffler(gamma, beta, float(v)) for v in xs])


def frac_integral_grid(vals: np.ndarray, dx: float, alpha: float,
                       kink: Optional[float] = None) -> np.ndarray:
    """Riemann-Liouville integral of order alpha on a uniform grid.

    Product-trapezoidal rule: the integrand is replaced by its piecewise
    linear interpolant and integrated exactly against the x^(alpha-1) kernel.
    The interior weights are a Toeplitz convolution, evaluated by FFT.

    With kink = p the data is treated as y^p * smooth near 0 and the first
    cell is re-integrated against that power exactly (incomplete Beta), which
    restores second-order accuracy for scale-function inputs.
    """
    n = len(vals) - 1
    j = np.arange(0, n + 2, dtype=float)
    pow1 = j ** (alpha + 1.0)
    c = pow1[2:] + pow1[:-2] - 2.0 * pow1[1:-1]      # c_j, j = 1..n
    conv = fftconvolve(vals[1:], c)[: n]             # sum_{k>=1} c_{i-k} g_k
    out = np.empty(n + 1)
    out[0] = 0.0
    i = np.arange(1, n + 1, dtype=float)
    a0 = (i - 1.0) ** (alpha + 1.0) - pow1[1: n + 1] + (alpha + 1.0) * i ** alpha
    head = a0 * vals[0]
    body = np.concatenate(([0.0], conv))[: n]        # empty for i = 1
    out[1:] = head + body + vals[1:]
    out[1:] *= dx ** alpha / math.gamma(alpha + 2.0)
    if kink is not None:
        out[1:] += _first_cell_power_fix(vals, dx, alpha, kink)
    return out


def _first_cell_power_fix(vals: np.ndarray, dx: float, alpha: float,
                          p: float) -> np.ndarray:
    """Swap the first-cell linear interpolant for the exact power y^p."""
    from scipy.special import betainc

    n = len(vals) - 1
    x = dx * np.arange(1, n + 1, dtype=float)
    xm = x - dx
    # linear part the trapezoid weights already integrated over [0, dx]
    c0 = vals[0]
    c1 = (vals[1] - vals[0]) / dx
    int_const = (x ** alpha - xm ** alpha) / alpha
    int_lin = x * int_const - (x ** (alpha + 1.0) - xm ** (alpha + 1.0)) / (alpha + 1.0)
    pl_part = c0 * int_const + c1 * int_lin
    # exact power y^p scaled to match vals[1] at y = dx
    bfun = math.gamma(p + 1.0) * math.gamma(alpha) / math.gamma(p + 1.0 + alpha)
    power_part = vals[1] * dx ** (-p) * x ** (alpha + p) \
        * betainc(p + 1.0, alpha, dx / x) * bfun
    return (power_part - pl_part) / math.gamma(alpha)


def cumulative_integral(vals: np.ndarray, dx: float,
                        kink: Optional[float] = None) -> np.ndarray:
    """Cumulative integral of grid data, kink-aware.

    Plain cumulative trapezoid by default.  With kink = p the data is treated
    as y^(p-1) * s(y) with s smooth; every cell then integrates the power
    weight exactly against the linear interpolant of s, which keeps second
    order through the y^(p-1) singularity at 0.
    """
    if kink is None:
        return np.concatenate(([0.0],
                               np.cumsum(0.5 * dx * (vals[1:] + vals[:-1]))))
    p = kink - 1.0
    n = len(vals) - 1
    y = dx * np.arange(n + 1, dtype=float)
    s = np.empty(n + 1)
    s[1:] = vals[1:] / y[1:] ** p
    s[0] = 2.0 * s[1] - s[2] if n >= 2 else s[1]
    yl, yr = y[:-1], y[1:]
    P1 = (yr ** (p + 1.0) - yl ** (p + 1.0)) / (p + 1.0)
    P2 = (yr ** (p + 2.0) - yl ** (p + 2.0)) / (p + 2.0)
    slope = (s[1:] - s[:-1]) / dx
    cells = s[:-1] * P1 + slope * (P2 - yl * P1)
    return np.concatenate(([0.0], np.cumsum(cells)))


@dataclass
class ScaleGrid:
    a: float
    m: int
    alpha: float
    q: float = 0.0

    def __post_init__(self):
        if self.m < 16:
            raise ValueError("need at least 16 grid cells")
        if self.a <= 0.0 or self.q < 0.0:
            raise ValueError("need a > 0 and q >= 0")
        if not (1.0 < self.alpha < 2.0):
            raise ValueError("alpha must lie in (1, 2)")

    @property
    def dx(self) -> float:
        return self.a / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.a, self.m + 1)


@dataclass
class ScaleKit:
    """Evaluators for W, W_q, Z_q and the operator series on one grid."""

    grid: ScaleGrid
    n_ser_max: int = 200
    series_tol: float = 1e-12
    last_error_estimate: float = field(default=0.0, init=False)
    last_n_terms: int = field(default=0, init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def _grid_eval(self, name: str) -> np.ndarray:
        if name not in self._cache:
            fn = {"W": self.W, "Wq": self.Wq, "Zq": self.Zq}[name]
            self._cache[name] = fn(self.grid.nodes)
        return self._cache[name]

    # -- closed forms (stable symbol) ---------------------------------------

    def W(self, x):
        a = self.grid.alpha
        xs = np.asarray(x, dtype=float)
        out = np.where(xs > 0.0, np.abs(xs) ** (a - 1.0) / math.gamma(a), 0.0)
        return float(out) if np.isscalar(x) else out

    def Wq(self, x):
        """W_q(x) = x^(alpha-1) E_{alpha,alpha}(q x^alpha), 0 below 0."""
        a, q = self.grid.alpha, self.grid.q
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xs)
        pos = xs > 0.0
        ml = _ml_array(a, a, q * xs[pos] ** a)
        out[pos] = xs[pos] ** (a - 1.0) * ml
        return float(out[0]) if np.isscalar(x) else out.reshape(np.shape(x))

    def Zq(self, x):
        """Z_q(x) = E_{alpha,1}(q x^alpha) for x >= 0 (1 at and below 0)."""
        a, q = self.grid.alpha, self.grid.q
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.ones_like(xs)
        pos = xs > 0.0
        out[pos] = _ml_array(a, 1.0, q * xs[pos] ** a)
        return float(out[0]) if np.isscalar(x) else out.reshape(np.shape(x))

    # -- operator series (quadrature route) ---------------------------------

    def Zq_apply(self, gvals: np.ndarray,
                 g_kink: Optional[float] = None) -> np.ndarray:
        """Operator series Z_q[g] = g + sum_n q^n (W*)^n g on the grid.

        Each convolution power is one fractional integration of the previous
        term.  Truncates when the absolute-convergence remainder bound
        ||g|| (q W(a))^n a^(n-1) / (n-1)! falls below series_tol * ||g||.

        g_kink = p declares that g behaves like y^p * smooth at 0, letting the
        first integration use the exact-power cell fix; later iterands gain
        alpha powers of smoothness each round and need no fix.
        """
        g = self.grid
        gvals = np.asarray(gvals, dtype=float)
        if gvals.shape != (g.m + 1,):
            raise ValueError("g must be sampled on the kit grid")
        norm = float(np.max(np.abs(gvals)))
        acc = gvals.copy()
        if g.q == 0.0 or norm == 0.0:
            self.last_error_estimate = 0.0
            self.last_n_terms = 0
            return acc
        term = gvals
        wa = g.q * self.W(g.a)
        kink = g_kink
        for n in range(1, self.n_ser_max + 1):
            term = g.q * frac_integral_grid(term, g.dx, g.alpha, kink=kink)
            kink = None
            acc += term
            bound = norm * wa ** n * g.a ** (n - 1) / math.gamma(n)
            if bound < self.series_tol * norm:
                self.last_error_estimate = bound
                self.last_n_terms = n
                return acc
        raise NonConvergenceError(
            f"operator series not below tolerance within {self.n_ser_max} terms")

    def Wq_series(self) -> np.ndarray:
        """W_q on the grid through the convolution series (oracle route).

        The first convolution power W*W = x^(2 alpha - 1)/Gamma(2 alpha) is a
        Beta integral and is taken in closed form; product integration starts
        from the second power, where the iterands are mildly singular at
        worst.
        """
        g = self.grid
        x = g.nodes
        a = g.alpha
        acc = self.W(x)
        if g.q == 0.0:
            self.last_error_estimate = 0.0
            self.last_n_terms = 0
            return acc
        term = g.q * x ** (2.0 * a - 1.0) / math.gamma(2.0 * a)
        acc = acc + term
        kink: Optional[float] = 2.0 * a - 1.0
        norm = self.W(g.a)
        wa = g.q * norm
        for n in range(2, self.n_ser_max + 1):
            term = g.q * frac_integral_grid(term, g.dx, a, kink=kink)
            kink = None
            acc += term
            bound = norm * wa ** n * g.a ** (n - 1) / math.gamma(n)
            if bound < self.series_tol * norm:
                self.last_error_estimate = bound
                self.last_n_terms = n
                return acc
        raise NonConvergenceError(
            f"operator series not below tolerance within {self.n_ser_max} terms")

    def Zq_series(self) -> np.ndarray:
        """Z_q = Z_q[1] on the grid through the series (oracle route)."""
        return self.Zq_apply(np.ones(self.grid.m + 1))

    # -- resolvent densities and exit laws ----------------------------------

    def _int_Zq(self) -> float:
        if "int_Zq" not in self._cache:
            zq = self._grid_eval("Zq")
            self._cache["int_Zq"] = float(
                cumulative_integral(zq, self.grid.dx)[-1])
        return self._cache["int_Zq"]

    def _int_Wq_to(self, k: int) -> float:
        if "cum_Wq" not in self._cache:
            wq = self._grid_eval("Wq")
            self._cache["cum_Wq"] = cumulative_integral(
                wq, self.grid.dx, kink=self.grid.alpha)
        return float(self._cache["cum_Wq"][k])

    def _node_index(self, x: float) -> int:
        k = round(x / self.grid.dx)
        if abs(k * self.grid.dx - x) > 1e-9 * max(1.0, self.grid.a):
            raise ValueError(f"x = {x:g} is not a grid node")
        return int(k)

    def _wq_shifted(self, k: int) -> np.ndarray:
        """W_q(x_k - y_j) over grid nodes y_j, zero for y_j >= x_k."""
        wq = self._grid_eval("Wq")
        out = np.zeros(self.grid.m + 1)
        out[:k + 1] = wq[k::-1]
        return out

    def resolvent_density_DN(self, x: float) -> np.ndarray:
        """Density y -> W_q(x)/Z_q(a) Z_q(a-y) - W_q(x-y) on the grid.

        q-potential of the process fast-forwarded at a and killed on exiting
        (0, a].  x must be a grid node.
        """
        g = self.grid
        k = self._node_index(x)
        zq = self._grid_eval("Zq")
        wq = self._grid_eval("Wq")
        dens = wq[k] / zq[-1] * zq[::-1] - self._wq_shifted(k)
        self._check_density(dens)
        return dens

    def resolvent_density_NN(self, x: float) -> np.ndarray:
        """Density of the q-potential with both boundaries fast-forwarded."""
        g = self.grid
        if g.q <= 0.0:
            raise ValueError("the two-sided density needs q > 0")
        k = self._node_index(x)
        zq = self._grid_eval("Zq")
        dens = zq[k] / (g.q * self._int_Zq()) * zq[::-1] - self._wq_shifted(k)
        self._check_density(dens)
        return dens

    def _check_density(self, dens: np.ndarray) -> None:
        scale = max(1.0, float(np.max(np.abs(dens))))
        if float(dens.min()) < -1e-8 * scale:
            raise NonConvergenceError(
                f"resolvent density has negative mass {dens.min():g}")

    def mass_DN(self, x: float) -> float:
        """Total mass of the DN density at a grid node x (quadrature)."""
        g = self.grid
        return float(self.Wq(x) / self.Zq(g.a) * self._int_Zq()
                     - self._int_Wq_to(self._node_index(x)))

    def mass_NN(self, x: float) -> float:
        g = self.grid
        return float(self.Zq(x) / (g.q * self._int_Zq()) * self._int_Zq()
                     - self._int_Wq_to(self._node_index(x)))

    def exit_laplace_DN(self, x: float) -> float:
        """E_x[exp(-q tau)] for the exit of the a-fast-forwarded process at 0."""
        g = self.grid
        if g.q == 0.0:
            return 1.0
        val = self.Zq(x) - g.q * self._int_Zq() / self.Zq(g.a) * self.Wq(x)
        if not -1e-8 <= val <= 1.0 + 1e-8:
            raise RangeExceededError(f"exit transform {val:g} outside [0, 1]")
        return float(min(max(val, 0.0), 1.0))

    def exit_laplace_DN_series(self, x: float) -> float:
        """Same transform through the operator-series route (oracle)."""
        g = self.grid
        if g.q == 0.0:
            return 1.0
        if "Zq_series" not in self._cache:
            self._cache["Zq_series"] = self.Zq_series()
            self._cache["Wq_series"] = self.Wq_series()
        zq = self._cache["Zq_series"]
        wq = self._cache["Wq_series"]
        k = self._node_index(x)
        int_zq = float(cumulative_integral(zq, g.dx)[-1])
        return float(zq[k] - g.q * int_zq / zq[-1] * wq[k])


def mean_exit(kind: str, x: float, a: float, alpha: float) -> float:
    """Closed-form mean exit times of the stable interval restrictions.

    kind "DN":  fast-forward at a, kill at 0:  a W(x) - int_0^x W
    kind "DNstar": reflect at a, kill at 0:    (a/(alpha-1)) W(x) - int_0^x W
    kind "ND":  fast-forward at 0, kill at a:  int_x^a W
    """
    if not (1.0 < alpha < 2.0):
        raise ValueError("alpha must lie in (1, 2)")
    if not 0.0 <= x <= a:
        raise ValueError(f"x = {x:g} outside [0, {a:g}]")
    ga = math.gamma(alpha)
    ga1 = math.gamma(alpha + 1.0)
    if kind == "DN":
        return a * x ** (alpha - 1.0) / ga - x ** alpha / ga1
    if kind == "DNstar":
        return (a / (alpha - 1.0)) * x ** (alpha - 1.0) / ga - x ** alpha / ga1
    if kind == "ND":
        return (a ** alpha - x ** alpha) / ga1
    raise ValueError(f"unknown exit kind {kind!r}")


def gaver_stehfest_W(psi: Callable[[float], float], x: float,
                     order: int = 12, dps: int = 40) -> float:
    """Numerical Laplace inversion of 1/psi (general symbols, opt-in).

    Gaver-Stehfest with even order in mpmath working precision.  The
    inversion is ill-posed; accuracy is limited by the double-precision psi
    evaluations and degrades for symbols far from the stable family, hence
    not used as a default route anywhere.
    """
    import mpmath as mp

    if x <= 0.0:
        return 0.0
    if order % 2:
        raise ValueError("Gaver-Stehfest order must be even")
    with mp.workdps(dps):
        M = order // 2
        ln2x = mp.log(2) / x
        total = mp.mpf(0)
        for k in range(1, order + 1):
            zeta = mp.mpf(0)
            for j in range((k + 1) // 2, min(k, M) + 1):
                zeta += (mp.mpf(j) ** (M + 1)
                         / (mp.factorial(j) * mp.factorial(M - j))
                         * mp.binomial(2 * j, j) * mp.binomial(j, k - j))
            zeta *= (-1) ** (M + k)
            total += zeta / mp.mpf(psi(float(k * ln2x)))
        return float(ln2x * total)
