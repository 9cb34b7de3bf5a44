"""Boundary-modified transition rate matrices on the grid -1 + i*h.

The restricted chain lives on states x_i = -1 + i*h, i = 0..n+1, h = 2/(n+1),
with absorbing end states.  Interior rows carry the free weights G_{j-i+1};
the first and last interior rows are rewritten according to the boundary pair
(kill D, fast-forward N, reflect N*).  The module also provides the
half-line matrix of the chain stopped on its first visit to the upper lattice,
resolvent solves against its transpose, the vanishing-discount limit of those
resolvents, matrix semigroups via uniformization, stationary vectors and mean
absorption times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (GridMismatchError, NonUniqueError, SingularSystemError,
                     TailBoundError)
from .grunwald import GrunwaldCoeffs
from .symbol import LaplaceExponent

ROW_SUM_RTOL = 1e-10
OFFDIAG_SLACK = 1e-12

_LEFT = ("D", "N", "Nstar")
_RIGHT = ("D", "N")
_LABELS = {"DD": ("D", "D"), "DN": ("D", "N"), "ND": ("N", "D"),
           "NN": ("N", "N"), "N*D": ("Nstar", "D"), "N*N": ("Nstar", "N")}


@dataclass(frozen=True)
class BoundaryPair:
    left: str
    right: str

    def __post_init__(self):
        if self.left not in _LEFT or self.right not in _RIGHT:
            raise ValueError(f"no boundary pair ({self.left}, {self.right})")

    @property
    def label(self) -> str:
        l = "N*" if self.left == "Nstar" else self.left
        return l + self.right

    @classmethod
    def from_label(cls, label: str) -> "BoundaryPair":
        try:
            return cls(*_LABELS[label])
        except KeyError:
            raise ValueError(f"unknown boundary label {label!r}") from None


ALL_PAIRS = tuple(BoundaryPair.from_label(s) for s in _LABELS)


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Dense generator with grid metadata.

    For restricted matrices the states are 0..n+1 over [-1, 1].  For stopped
    matrices the states are lattice levels index_lo..index_hi and bc is the
    string "stopped-truncated".
    """

    Q: np.ndarray
    h: float
    bc: object
    n: Optional[int] = None
    grid: Optional[np.ndarray] = None
    index_lo: int = 0
    coeffs: Optional[GrunwaldCoeffs] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.Q.shape[0]

    def state_index(self, level: int) -> int:
        """Row/column of a lattice level (stopped matrices)."""
        return level - self.index_lo


def build_restricted(c: GrunwaldCoeffs, n: int, bc: BoundaryPair) -> RateMatrix:
    """Assemble the (n+2)-state generator for one boundary pair.

    Row 1 uses the left-boundary weights, column n and the last column use
    the right-boundary weights; rows 0 and n+1 are absorbing.  Requires
    c.h = 2/(n+1) and j_max >= n + 2.
    """
    if n < 3:
        raise ValueError(f"need at least 3 interior points, got n={n}")
    h = 2.0 / (n + 1)
    if abs(c.h - h) > 1e-12 * h:
        raise GridMismatchError(f"coeffs mesh {c.h:g} != 2/(n+1) = {h:g}")
    if c.j_max < n + 2:
        raise ValueError(f"j_max={c.j_max} too small for n={n}")

    g = c.g
    T = c.tail
    if bc.left == "D":
        d_l0 = g[0]
        b_l = g[1: n + 1].copy()            # b_l[i-1] = weight into column i
    elif bc.left == "N":
        d_l0 = 0.0
        b_l = T[1: n + 1].copy()
    else:  # Nstar
        d_l0 = 0.0
        b_l = g[1: n + 1].copy()
        b_l[0] = g[0] + g[1]

    Q = np.zeros((n + 2, n + 2))
    for i in range(2, n + 1):
        lo = i - 1
        Q[i, lo: n] = g[0: n - i + 1]
        if bc.right == "D":
            Q[i, n] = g[n - i + 1]
            Q[i, n + 1] = T[n - i + 2]
        else:
            Q[i, n] = T[n - i + 1]

    Q[1, 0] = d_l0
    Q[1, 1: n] = b_l[: n - 1]
    if bc.right == "D":
        Q[1, n] = b_l[n - 1]
        if bc.left == "N":
            Q[1, n + 1] = _tail_of_tails(c, n)
        else:
            Q[1, n + 1] = T[n + 1]
    else:
        Q[1, n] = -(d_l0 + float(np.sum(b_l[: n - 1])))

    # single-division node formula: exact +-1.0 at the end states
    grid = (2.0 * np.arange(n + 2) - (n + 1)) / (n + 1)
    return RateMatrix(Q=Q, h=h, bc=bc, n=n, grid=grid, coeffs=c)


def _tail_of_tails(c: GrunwaldCoeffs, n: int) -> float:
    """sum_{j>n} T_j, the corner entry that routes deep re-entries to killing.

    Exact binomial closed form for (tempered) stable weights; otherwise the
    stored tails are summed and the geometric-ratio remainder must stay below
    the row-sum tolerance.
    """
    # The closed form needs alpha; recover it from the defining ratios, which
    # identify binomial weights exactly: G_2/G_1 = (1-alpha)/2 for lam = 0.
    ratio = c.g[2] / c.g[1]
    alpha = 1.0 - 2.0 * ratio
    scale = c.g[0] * 1.0  # h^-alpha for a pure stable family
    if _is_stable_family(c, alpha):
        m = n - 1
        b = 1.0
        for i in range(1, m + 1):
            b *= (alpha - 2.0 - i + 1.0) / i
        return scale * ((-1.0) ** (n + 1)) * b
    partial = float(np.sum(c.tail[n + 1: c.j_max + 2]))
    budget = ROW_SUM_RTOL * abs(c.g[1])
    t_last, t_prev = abs(c.tail[c.j_max + 1]), abs(c.tail[c.j_max])
    if t_last <= 0.1 * budget or t_prev == 0.0:
        return partial            # tails at the roundoff floor already
    r = t_last / t_prev
    remainder = t_last * r / (1.0 - r) if r < 1.0 else math.inf
    if remainder > budget:
        raise TailBoundError(
            f"tail remainder estimate {remainder:g} exceeds the row-sum budget; "
            "increase j_max")
    return partial


def _is_stable_family(c: GrunwaldCoeffs, alpha: float) -> bool:
    if not (1.0 < alpha < 2.0):
        return False
    w = c.g[0]
    for j in range(min(6, c.j_max)):
        w *= (j - alpha) / (j + 1.0)
        if abs(w - c.g[j + 1]) > 1e-10 * abs(c.g[1]):
            return False
    return True


def build_stopped(c: GrunwaldCoeffs, m_below: int, k_above: int) -> RateMatrix:
    """Generator of the chain stopped on first visit to levels >= 1.

    States are lattice levels -m_below..k_above; rows at levels > 0 vanish,
    rows at levels <= 0 carry G_{j-i+1}.  Entries that would reference levels
    below -m_below are dropped (zero-padding truncation).
    """
    if m_below < 1 or k_above < 1:
        raise ValueError("m_below and k_above must be >= 1")
    size = m_below + k_above + 1
    if c.j_max < size:
        raise ValueError(f"j_max={c.j_max} too small for span {size}")
    Q = np.zeros((size, size))
    g = c.g
    for row in range(m_below + 1):           # levels -m_below..0
        i = row - m_below
        ncols = min(size - row, c.j_max + 1)
        Q[row, row: row + ncols] = g[1: ncols + 1]
        if row >= 1:
            Q[row, row - 1] = g[0]
    return RateMatrix(Q=Q, h=c.h, bc="stopped-truncated", index_lo=-m_below,
                      coeffs=c)


def resolvent_transpose_e(Q: RateMatrix, beta: float, i0: int) -> np.ndarray:
    """Solve (beta*I - Q^T) x = e_{i0}; i0 is a matrix row index."""
    if beta <= 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    size = Q.size
    if not 0 <= i0 < size:
        raise IndexError(f"i0={i0} outside 0..{size - 1}")
    rhs = np.zeros(size)
    rhs[i0] = 1.0
    A = beta * np.eye(size) - Q.Q.T
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("resolvent solve produced non-finite entries")
    return x


def stopped_resolvent_profile(exp: LaplaceExponent, c: GrunwaldCoeffs,
                              beta: float, index_lo: int, index_hi: int) -> np.ndarray:
    """Analytic resolvent of the transposed stopped generator at e_0.

    Entry at level m is exp(h*(m-1)*b)/G_0 for m <= 0 and, above the stopping
    line, (1/(beta*G_0)) sum_{k>=m} G_{k+1} exp(h*(m-1-k)*b), where b solves
    varphi(b) = beta.  Series are summed until terms fall below 1e-18 of the
    head.
    """
    b = exp.varphi_inverse(c.h, beta)
    h = c.h
    g0 = c.g[0]
    out = np.empty(index_hi - index_lo + 1)
    decay = math.exp(-h * b)
    for m in range(index_lo, min(0, index_hi) + 1):
        out[m - index_lo] = math.exp(h * (m - 1) * b) / g0
    for m in range(max(1, index_lo), index_hi + 1):
        acc = 0.0
        w = math.exp(h * (m - 1 - m) * b)    # k = m term weight
        k = m
        while k <= c.j_max - 1:
            term = c.g[k + 1] * w
            acc += term
            if abs(term) < 1e-18 * max(abs(acc), 1e-300) and k > m + 8:
                break
            w *= decay
            k += 1
        out[m - index_lo] = acc / (beta * g0)
    return out


def ergodic_limit_z(Q_stopped: RateMatrix, beta_sequence: Sequence[float],
                    i0_level: int = 0):
    """Vanishing-discount limit of beta * resolvent at the stopping source.

    Solves at each beta in the (decreasing) sequence and extrapolates the
    componentwise polynomial in beta to 0.  Returns (extrapolated, raw at the
    smallest beta).
    """
    betas = sorted(beta_sequence, reverse=True)
    if betas[-1] <= 0.0:
        raise ValueError("betas must be positive")
    row = Q_stopped.state_index(i0_level)
    vals = []
    for b in betas:
        x = resolvent_transpose_e(Q_stopped, b, row)
        vals.append(b * x)
    V = np.array(vals)                       # (n_beta, size)
    bs = np.array(betas)
    # Vandermonde extrapolation to beta = 0; the constant coefficient is the
    # limit.  Scale betas to avoid conditioning trouble.
    s = bs / bs.max()
    M = np.vander(s, increasing=True)
    coef = np.linalg.solve(M, V)
    return coef[0], V[-1]


def landing_law(c: GrunwaldCoeffs, m_below: int, j_cap: int) -> np.ndarray:
    """First-entry law into levels >= 1 for the free walk started at level 0.

    Computed from the truncated stopped dynamics by linear algebra: with B the
    transient block (levels -m_below..0) and w the Green row of level 0,
    the probability of first entering at level j is sum_i w_i G_{j-i+1}.
    Normalised over 1..j_cap (the truncation leak below -m_below is O(1/
    m_below^(alpha-1)) and is folded back proportionally).
    """
    size = m_below + 1
    if c.j_max < j_cap + m_below + 1:
        raise ValueError("j_max too small for the requested landing span")
    B = np.zeros((size, size))
    g = c.g
    for row in range(size):
        ncols = min(size - row, c.j_max + 1)
        B[row, row: row + ncols] = g[1: ncols + 1]
        if row >= 1:
            B[row, row - 1] = g[0]
    rhs = np.zeros(size)
    rhs[-1] = 1.0                            # level 0
    try:
        w = np.linalg.solve(-B.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    # z_j = sum over transient levels of occupation time * rate of jumping
    # straight to level j; level of row i is i - m_below.
    wr = w[::-1]
    z = np.empty(j_cap + 1)
    z[0] = 0.0
    for j in range(1, j_cap + 1):
        z[j] = float(wr @ g[j + 1: j + 1 + size])
    total = z.sum()
    if not 0.5 < total <= 1.0 + 1e-9:
        raise SingularSystemError(f"landing law mass {total:g} implausible")
    # Mass beyond j_cap (plus the small truncation leak) lands "deep"; lump it
    # into the last bucket rather than inflating the head by renormalising.
    z[j_cap] += max(0.0, 1.0 - total)
    return z


def semigroup_row(Q: RateMatrix, t: float, i0: int,
                  tail_tol: float = 1e-12) -> np.ndarray:
    """Row i0 of exp(tQ) by uniformization.

    Poisson weights are accumulated in log space so large rate*t horizons do
    not underflow; iteration stops once the remaining Poisson tail is below
    tail_tol.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    size = Q.size
    v = np.zeros(size)
    v[i0] = 1.0
    if t == 0.0:
        return v
    lam = float(np.max(-np.diag(Q.Q)))
    if lam == 0.0:
        return v
    P = np.eye(size) + Q.Q / lam
    mu = lam * t
    out = np.zeros(size)
    acc = 0.0
    k = 0
    kmax = int(mu + 12.0 * math.sqrt(mu) + 50.0)
    while k <= kmax and acc < 1.0 - tail_tol:
        logw = -mu + k * math.log(mu) - math.lgamma(k + 1) if k > 0 else -mu
        w = math.exp(logw)
        out += w * v
        acc += w
        v = v @ P
        k += 1
    return out / acc


def stationary_interior(Q: RateMatrix) -> np.ndarray:
    """Left null vector of the interior block, normalised to a probability."""
    if not (isinstance(Q.bc, BoundaryPair) and Q.bc.label == "NN"):
        raise ValueError("stationary vector is defined for the NN pair only")
    n = Q.n
    A = Q.Q[1: n + 1, 1: n + 1].T.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NonUniqueError(str(exc)) from exc
    if np.any(pi < -1e-10) or not np.all(np.isfinite(pi)):
        raise NonUniqueError("interior chain looks reducible")
    return pi / pi.sum()


def mean_absorption(Q: RateMatrix, from_index: int) -> float:
    """Expected absorption time of the interior chain started at a grid index."""
    if not (isinstance(Q.bc, BoundaryPair) and "D" in (Q.bc.left, Q.bc.right)):
        raise ValueError("mean absorption needs at least one killing boundary")
    n = Q.n
    if not 1 <= from_index <= n:
        raise IndexError(f"from_index={from_index} is not interior")
    A = Q.Q[1: n + 1, 1: n + 1]
    try:
        m = np.linalg.solve(A, -np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(m)):
        raise SingularSystemError("absorption solve produced non-finite entries")
    return float(m[from_index - 1])


def validity_report(Q: RateMatrix) -> dict:
    """Row sums, sign pattern and boundary holding rates, as check -> result."""
    c = Q.coeffs
    scale = abs(c.g[1])
    rows = Q.Q.sum(axis=1)
    report = {
        "max_abs_row_sum": float(np.max(np.abs(rows))),
        "row_sum_tol": ROW_SUM_RTOL * scale,
        "row_sums_ok": bool(np.max(np.abs(rows)) <= ROW_SUM_RTOL * scale),
    }
    off = Q.Q - np.diag(np.diag(Q.Q))
    report["min_offdiag"] = float(off.min())
    report["offdiag_ok"] = bool(off.min() >= -OFFDIAG_SLACK * scale)
    report["diag_ok"] = bool(np.max(np.diag(Q.Q)) <= 0.0)
    if isinstance(Q.bc, BoundaryPair) and Q.n is not None:
        n = Q.n
        expected_left = {"D": c.g[1], "N": -c.g[0], "Nstar": c.g[0] + c.g[1]}
        expected_right = {"D": c.g[1], "N": -c.g[0]}
        report["left_holding"] = float(Q.Q[1, 1])
        report["left_holding_expected"] = float(expected_left[Q.bc.left])
        report["right_holding"] = float(Q.Q[n, n])
        report["right_holding_expected"] = float(expected_right[Q.bc.right])
        report["holding_ok"] = bool(
            Q.Q[1, 1] == expected_left[Q.bc.left]
            and Q.Q[n, n] == expected_right[Q.bc.right])
        report["absorbing_rows_ok"] = bool(
            not Q.Q[0].any() and not Q.Q[n + 1].any())
    return report
