"""Cadlag step paths and the exact boundary maps acting on them.

A StepPath is piecewise constant and right continuous on [0, T]: an initial
value, strictly increasing jump epochs in (0, T] and the value taken from
each epoch on.  All boundary modifications used by the grid chains are exact
on this class:

* killing absorbs the path at a barrier from its first visit to the barrier's
  closed side;
* reflection is the minimal-pushing barrier map (one- and two-sided), through
  a running-extremum recursion over segments;
* fast-forwarding deletes the closed time blocks spent outside a region and
  splices the remainder, with the additive-functional time change available
  on request.

Epochs may be floats or fractions.Fraction; with fractions every map is exact
in rational arithmetic, which the pathwise-identity tests rely on.

The module also carries path simulators for the free grid walk and for rate
matrices, a two-sided bound algorithm for the time-distortion (J1) path
distance, and value scaling.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import (BarrierError, EmptyRegionError, TailEpsUnreachableError)
from .grunwald import GrunwaldCoeffs
from .ratemat import BoundaryPair, RateMatrix


@dataclass(frozen=True)
class StepPath:
    """Piecewise-constant cadlag path on [0, T]; no null jumps stored."""

    T: object                 # float or Fraction
    initial: float
    epochs: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if len(self.epochs) != len(self.values):
            raise ValueError("epochs and values must pair up")
        last = 0
        prev_val = self.initial
        for e, v in zip(self.epochs, self.values):
            if not last < e <= self.T:
                raise ValueError("epochs must increase strictly within (0, T]")
            if v == prev_val:
                raise ValueError("consecutive values must differ (null jump)")
            last, prev_val = e, v

    @property
    def n_jumps(self) -> int:
        return len(self.epochs)

    def value_at(self, t):
        if not 0 <= t <= self.T:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        k = bisect.bisect_right(self.epochs, t)
        return self.values[k - 1] if k else self.initial

    def segments(self) -> Iterable[Tuple[object, object, float]]:
        """Yield (start, end, value) covering [0, T]; the last may be empty."""
        start = 0
        val = self.initial
        for e, v in zip(self.epochs, self.values):
            yield start, e, val
            start, val = e, v
        yield start, self.T, val

    def all_values(self) -> tuple:
        return (self.initial,) + self.values

    def restrict(self, T) -> "StepPath":
        if T > self.T:
            raise ValueError("cannot extend a path by restriction")
        k = bisect.bisect_right(self.epochs, T)
        return StepPath(T=T, initial=self.initial, epochs=self.epochs[:k],
                        values=self.values[:k])

    def with_exact_times(self) -> "StepPath":
        """Convert all times to fractions for exact map arithmetic."""
        return StepPath(T=Fraction(self.T), initial=self.initial,
                        epochs=tuple(Fraction(e) for e in self.epochs),
                        values=self.values)

    def with_float_times(self) -> "StepPath":
        return StepPath(T=float(self.T), initial=self.initial,
                        epochs=tuple(float(e) for e in self.epochs),
                        values=self.values)


def make_step_path(T, initial, epochs: Sequence, values: Sequence) -> StepPath:
    """Canonicalising constructor: drops null jumps, keeps order checks."""
    es, vs = [], []
    prev = initial
    for e, v in zip(epochs, values):
        if v != prev:
            es.append(e)
            vs.append(v)
            prev = v
    return StepPath(T=T, initial=initial, epochs=tuple(es), values=tuple(vs))


@dataclass(frozen=True)
class TimeChange:
    """Additive functional A (piecewise linear, slopes 0/1) and its inverse."""

    knots_t: tuple
    knots_a: tuple

    def a(self, t):
        k = bisect.bisect_right(self.knots_t, t) - 1
        k = min(max(k, 0), len(self.knots_t) - 2)
        t0, t1 = self.knots_t[k], self.knots_t[k + 1]
        a0, a1 = self.knots_a[k], self.knots_a[k + 1]
        if t >= t1:
            return a1
        slope = 0 if a1 == a0 else 1
        return a0 + slope * (t - t0)

    def a_inverse(self, u):
        """Right-continuous inverse inf{s : A(s) > u}."""
        if u >= self.knots_a[-1]:
            return self.knots_t[-1]
        k = bisect.bisect_right(self.knots_a, u)
        # knots_a[k-1] <= u < knots_a[k]; the block (t_{k-1}, t_k) has slope 1
        # iff its A increases, otherwise move to the next increasing block.
        t0, a0 = self.knots_t[k - 1], self.knots_a[k - 1]
        if self.knots_a[k] > a0:
            return t0 + (u - a0)
        return self.knots_t[k]


# -- killing --------------------------------------------------------------

def kill_left(p: StepPath, barrier: float = -1.0) -> StepPath:
    """Absorb at the barrier from the first time the path is <= barrier."""
    if p.initial <= barrier:
        return StepPath(T=p.T, initial=barrier)
    for k, v in enumerate(p.values):
        if v <= barrier:
            return make_step_path(p.T, p.initial,
                                  p.epochs[: k + 1], p.values[:k] + (barrier,))
    return p


def kill_right(p: StepPath, barrier: float = 1.0) -> StepPath:
    if p.initial >= barrier:
        return StepPath(T=p.T, initial=barrier)
    for k, v in enumerate(p.values):
        if v >= barrier:
            return make_step_path(p.T, p.initial,
                                  p.epochs[: k + 1], p.values[:k] + (barrier,))
    return p


# -- reflection -----------------------------------------------------------

def reflect_left(p: StepPath, a: float, with_pushing: bool = False):
    """Minimal-pushing map keeping the path >= a.

    output(t) = p(t) - min(0, inf_{s<=t}(p(s) - a)); the pushing functional
    is nondecreasing and flat while the output sits strictly above a.
    """
    if p.initial < a:
        raise BarrierError(f"path starts below the barrier {a}")
    run_min = p.initial - a
    push = 0.0
    out_vals, push_vals = [], []
    for v in p.values:
        run_min = min(run_min, v - a)
        push = max(push, -(run_min if run_min < 0.0 else 0.0))
        out_vals.append(v + push)
        push_vals.append(push)
    out = make_step_path(p.T, p.initial, p.epochs, out_vals)
    if not with_pushing:
        return out
    eta = make_step_path(p.T, 0.0, p.epochs, push_vals)
    return out, eta


def reflect_right(p: StepPath, b: float, with_pushing: bool = False):
    """Mirror map keeping the path <= b."""
    if p.initial > b:
        raise BarrierError(f"path starts above the barrier {b}")
    run_max = p.initial - b
    push = 0.0
    out_vals, push_vals = [], []
    for v in p.values:
        run_max = max(run_max, v - b)
        push = max(push, run_max if run_max > 0.0 else 0.0)
        out_vals.append(v - push)
        push_vals.append(push)
    out = make_step_path(p.T, p.initial, p.epochs, out_vals)
    if not with_pushing:
        return out
    eta = make_step_path(p.T, 0.0, p.epochs, push_vals)
    return out, eta


def reflect_two_sided(p: StepPath, a: float, b: float,
                      with_pushing: bool = False):
    """Two-sided minimal-pushing map into [a, b].

    Increment recursion: each original jump is applied to the current
    confined position and the overshoot is absorbed by the matching pushing
    functional; both functionals are minimal and never active together.
    """
    if not a < b:
        raise BarrierError("need a < b")
    if not a <= p.initial <= b:
        raise BarrierError(f"path starts outside [{a}, {b}]")
    eta_a = eta_b = 0.0
    out_vals, pa_vals, pb_vals = [], [], []
    for v in p.values:
        pos = v + eta_a - eta_b    # anchored to the raw value, no drift
        if pos < a:
            eta_a += a - pos
            pos = a
        elif pos > b:
            eta_b += pos - b
            pos = b
        out_vals.append(pos)
        pa_vals.append(eta_a)
        pb_vals.append(eta_b)
    out = make_step_path(p.T, p.initial, p.epochs, out_vals)
    if not with_pushing:
        return out
    eta_a_path = make_step_path(p.T, 0.0, p.epochs, pa_vals)
    eta_b_path = make_step_path(p.T, 0.0, p.epochs, pb_vals)
    return out, eta_a_path, eta_b_path


# -- fast-forwarding -------------------------------------------------------

def above(a: float):
    return ("above", a)


def below(b: float):
    return ("below", b)


def between(a: float, b: float):
    return ("between", a, b)


def _region_pred(region):
    kind = region[0]
    if kind == "above":
        a = region[1]
        return lambda v: v > a
    if kind == "below":
        b = region[1]
        return lambda v: v < b
    if kind == "between":
        a, b = region[1], region[2]
        return lambda v: a < v < b
    raise ValueError(f"unknown region {region!r}")


def fast_forward(p: StepPath, region, with_time_change: bool = False):
    """Delete the time blocks outside the region and splice the rest.

    The output horizon is the Lebesgue time spent in the region (strict
    inequalities; time at the barrier itself is deleted).  Raises
    EmptyRegionError if that time is zero.
    """
    pred = _region_pred(region)
    zero = p.T - p.T          # additive zero of the epoch type
    acc = zero
    out_initial = None
    out_epochs, out_values = [], []
    knots_t, knots_a = [zero], [zero]
    for s, e, v in p.segments():
        if e <= s:
            continue
        keep = pred(v)
        if keep:
            if out_initial is None:
                out_initial = v
            else:
                last = out_values[-1] if out_values else out_initial
                if v != last:
                    out_epochs.append(acc)
                    out_values.append(v)
            acc = acc + (e - s)
        knots_t.append(e)
        knots_a.append(acc)
    if out_initial is None:
        raise EmptyRegionError("the path never enters the region")
    out = StepPath(T=acc, initial=out_initial, epochs=tuple(out_epochs),
                   values=tuple(out_values))
    if not with_time_change:
        return out
    return out, TimeChange(knots_t=tuple(knots_t), knots_a=tuple(knots_a))


# -- boundary-pair composition ----------------------------------------------

def apply_boundary(p: StepPath, bc: BoundaryPair, h: float) -> StepPath:
    """Compose the killing/reflecting/fast-forwarding maps for one pair.

    The discrete reflection barrier sits one cell inside the interval, at
    h - 1, while killing and fast-forwarding use the interval ends.
    """
    label = bc.label
    if label == "DD":
        return kill_right(kill_left(p))
    if label == "DN":
        return kill_left(fast_forward(p, below(1.0)))
    if label == "ND":
        return kill_right(fast_forward(p, above(-1.0)))
    if label == "NN":
        return fast_forward(p, between(-1.0, 1.0))
    if label == "N*D":
        return kill_right(reflect_left(p, h - 1.0))
    if label == "N*N":
        return fast_forward(reflect_left(p, h - 1.0), below(1.0))
    raise ValueError(f"unknown boundary label {label}")


# -- simulation -------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Common Monte Carlo knobs; tail_eps caps the lumped jump-tail mass."""

    seed: int
    paths: int
    x0: float
    T: float
    tail_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.tail_eps <= 1e-3:
            raise ValueError("tail_eps must lie in (0, 1e-3]")
        if self.T <= 0.0 or self.paths < 1:
            raise ValueError("need T > 0 and paths >= 1")


def rng_for_path(seed: int, k: int) -> np.random.Generator:
    """Counter-based stream for path k; identical for any worker layout."""
    return np.random.Generator(np.random.Philox(
        key=np.random.SeedSequence([seed, k]).generate_state(2, np.uint64)))


def jump_table(c: GrunwaldCoeffs, tail_eps: float):
    """Displacement values (in cells) and cumulative probabilities.

    Displacement -1 carries weight G_0, displacement j-1 >= 1 weight G_j.
    Mass beyond j_max is lumped into the last bucket and must stay below
    tail_eps.
    """
    rate = c.total_rate
    tail_mass = float(c.tail[c.j_max + 1]) / rate
    if tail_mass > tail_eps:
        raise TailEpsUnreachableError(
            f"lumped tail mass {tail_mass:g} exceeds tail_eps={tail_eps:g}; "
            "increase j_max")
    disp = np.concatenate(([-1], np.arange(1, c.j_max)))
    probs = np.concatenate((c.g[:1], c.g[2:])) / rate
    probs[-1] += max(tail_mass, 0.0)
    return disp.astype(np.int64), np.cumsum(probs)


def _lattice_params(x0: float, h: float):
    """Return (m, k0) when x0 sits on the grid -1 + k*h with h = 2/m."""
    m = 2.0 / h
    k0 = (x0 + 1.0) / h
    mi, ki = round(m), round(k0)
    if abs(m - mi) < 1e-9 and abs(k0 - ki) < 1e-9 * max(1.0, abs(k0)):
        return mi, ki
    return None, None


def _grid_value(k: int, m: int) -> float:
    # one rounding only, exact at the interval ends
    return (2.0 * k - m) / m


def simulate_cp(c: GrunwaldCoeffs, cfg: SimConfig, path_index: int = 0) -> StepPath:
    """One free compound-Poisson grid path on [0, T].

    Exponential holding times with rate -G_1; displacements drawn from
    jump_table.  Values are emitted through a single-division lattice formula
    so barrier hits are exact floats.
    """
    rng = rng_for_path(cfg.seed, path_index)
    disp, cum = jump_table(c, cfg.tail_eps)
    rate = c.total_rate
    m, k0 = _lattice_params(cfg.x0, c.h)
    epochs, values = [], []
    t = 0.0
    k = 0
    while True:
        t += rng.exponential(1.0 / rate)
        if t > cfg.T:
            break
        k += int(disp[np.searchsorted(cum, rng.random(), side="right")])
        epochs.append(t)
        if m is not None:
            values.append(_grid_value(k0 + k, m))
        else:
            values.append(cfg.x0 + k * c.h)
    return make_step_path(cfg.T, cfg.x0, epochs, values)


def simulate_ctmc(Q: RateMatrix, i0: int, cfg: SimConfig,
                  path_index: int = 0) -> StepPath:
    """Direct jump-chain simulation of a rate matrix; absorbing rows hold."""
    if not 0 <= i0 < Q.size:
        raise IndexError(f"i0={i0} outside the state space")
    rng = rng_for_path(cfg.seed, path_index)
    A = Q.Q
    grid = Q.grid if Q.grid is not None else np.arange(Q.size, dtype=float)
    rates = -np.diag(A)
    rows = {}
    t = 0.0
    state = i0
    epochs, values = [], []
    while True:
        r = rates[state]
        if r <= 0.0:
            break
        t += rng.exponential(1.0 / r)
        if t > cfg.T:
            break
        if state not in rows:
            w = A[state].copy()
            w[state] = 0.0
            rows[state] = np.cumsum(w / w.sum())
        state = int(np.searchsorted(rows[state], rng.random(), side="right"))
        epochs.append(t)
        values.append(float(grid[state]))
    return make_step_path(cfg.T, float(grid[i0]), epochs, values)


# -- value scaling and path distance -----------------------------------------

def scale_path(p: StepPath, c: float) -> StepPath:
    """Multiply all values by c (useful for barrier renormalisation checks)."""
    return make_step_path(p.T, c * p.initial, p.epochs,
                          tuple(c * v for v in p.values))


def j1_distance(p: StepPath, q: StepPath, T: Optional[float] = None):
    """Two-sided bounds for the time-distortion path distance on [0, T].

    Returns (upper, lower).  The upper bound is a bottleneck alignment over
    jump epochs: each jump of p is either matched onto a jump of q (time cost
    = epoch gap) or placed inside a q segment, and every traversed value pair
    contributes its gap; piecewise-linear time changes through the chosen
    placements realise the bound.  The lower bound certifies impossibility:
    if for some t every p-value within the window [t-d, t+d] stays farther
    than d from q(t) (or vice versa), no time change of size d works.  Both
    bounds are exact for identical paths.
    """
    if T is None:
        T = min(p.T, q.T)
    pr, qr = p.restrict(T), q.restrict(T)
    upper = _j1_upper(pr, qr, T)
    lower = _j1_lower(pr, qr, T, upper)
    return upper, lower


def _j1_upper(p: StepPath, q: StepPath, T) -> float:
    pv = [float(v) for v in p.all_values()]
    qv = [float(v) for v in q.all_values()]
    ps = [float(e) for e in p.epochs]
    qs = [float(e) for e in q.epochs]
    m, n = len(ps), len(qs)
    big = math.inf
    D = [[big] * (n + 1) for _ in range(m + 1)]
    D[0][0] = abs(pv[0] - qv[0])
    qgrid = [0.0] + qs + [float(T)]
    for i in range(m + 1):
        for j in range(n + 1):
            d = D[i][j]
            if d == big:
                continue
            # p jump i+1 placed inside q segment j: time cost = distance of
            # s_{i+1} from [t_j, t_{j+1}]
            if i < m:
                tc = max(0.0, qgrid[j] - ps[i], ps[i] - qgrid[j + 1])
                cost = max(d, tc, abs(pv[i + 1] - qv[j]))
                if cost < D[i + 1][j]:
                    D[i + 1][j] = cost
            # q jump j+1 inside the current p segment: free in time
            if j < n:
                cost = max(d, abs(pv[i] - qv[j + 1]))
                if cost < D[i][j + 1]:
                    D[i][j + 1] = cost
            # match the two jumps
            if i < m and j < n:
                cost = max(d, abs(ps[i] - qs[j]), abs(pv[i + 1] - qv[j + 1]))
                if cost < D[i + 1][j + 1]:
                    D[i + 1][j + 1] = cost
    return D[m][n]


def _window_values(p: StepPath, lo, hi):
    """Values taken by p on the closed window [lo, hi] within [0, T]."""
    lo = max(lo, 0.0)
    hi = min(hi, float(p.T))
    vals = []
    for s, e, v in p.segments():
        s, e = float(s), float(e)
        if s <= hi and (e > lo or (e == lo == float(p.T))):
            vals.append(float(v))
        # closed window: a segment starting exactly at hi contributes
        if s > hi:
            break
    # include the value at the right horizon point
    if hi == float(p.T):
        vals.append(float(p.all_values()[-1]))
    return vals


def _refuted(p: StepPath, q: StepPath, T: float, d: float) -> bool:
    """True if no time change of size d can align p and q within d."""
    for a, b in ((p, q), (q, p)):
        cands = {0.0, float(T)}
        for e in b.epochs:
            cands.add(float(e))
            cands.add(max(0.0, float(e) - 1e-12))
        for e in a.epochs:
            for t in (float(e) - d, float(e) + d):
                if 0.0 <= t <= float(T):
                    cands.add(t)
                    cands.add(max(0.0, t - 1e-12))
        for t in cands:
            w = _window_values(a, t - d, t + d)
            bt = float(b.value_at(t))
            if min(abs(bt - v) for v in w) > d + 1e-15:
                return True
    return False


def _j1_lower(p: StepPath, q: StepPath, T, upper: float) -> float:
    T = float(T)
    if upper == 0.0:
        return 0.0
    lo, hi = 0.0, upper
    if not _refuted(p, q, T, 0.0):
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _refuted(p, q, T, mid):
            lo = mid
        else:
            hi = mid
    return lo
