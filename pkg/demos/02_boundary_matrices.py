"""Boundary-modified rate matrices.

Assembles the six interval restrictions of the grid chain (kill D,
fast-forward N, reflect N*), verifies their structural invariants, and uses
them: matrix semigroup rows, the stationary vector of the conservative pair,
mean absorption times, and the stopped half-line resolvent against its
closed-form profile.
"""

import numpy as np

from oneside_levy import (ALL_PAIRS, BoundaryPair, LaplaceExponent,
                          LevyMeasureSpec, build_restricted, build_stopped,
                          compute_coeffs, mean_absorption,
                          resolvent_transpose_e, semigroup_row,
                          stationary_interior, stopped_resolvent_profile,
                          validity_report)

exp = LaplaceExponent(LevyMeasureSpec.stable(1.5))
n = 9
c = compute_coeffs(exp, 2.0 / (n + 1), 4 * (n + 1))

print(f"== six boundary pairs at n = {n} ==")
for bc in ALL_PAIRS:
    Q = build_restricted(c, n, bc)
    v = validity_report(Q)
    print(f"  {bc.label:>3}: max|row sum| {v['max_abs_row_sum']:.1e}, "
          f"holding at the ends ({v['left_holding']:+.3f}, "
          f"{v['right_holding']:+.3f})")

print("\n== semigroup row from the middle state (DD, t = 0.5) ==")
Q = build_restricted(c, n, BoundaryPair.from_label("DD"))
row = semigroup_row(Q, 0.5, 5)
print("  x:", " ".join(f"{x:+.1f}" for x in Q.grid))
print("  p:", " ".join(f"{p:.3f}" for p in row))
print(f"  absorbed mass: left {row[0]:.3f}, right {row[-1]:.3f}")

print("\n== conservative pair NN: flat vector is exactly stationary ==")
Qnn = build_restricted(c, n, BoundaryPair.from_label("NN"))
pi = stationary_interior(Qnn)
print(f"  sup |pi - 1/n| = {np.max(np.abs(pi - 1.0 / n)):.2e}")

print("\n== mean absorption times (interior start) ==")
for lab in ("DD", "DN", "ND"):
    Qk = build_restricted(c, n, BoundaryPair.from_label(lab))
    print(f"  {lab}: from the middle {mean_absorption(Qk, 5):.4f}, "
          f"next to a killing end {mean_absorption(Qk, 1):.4f}")

print("\n== stopped half-line chain: resolvent against the closed profile ==")
h = 0.1
cs = compute_coeffs(exp, h, 700)
Qs = build_stopped(cs, 500, 100)
x = resolvent_transpose_e(Qs, 1.0, Qs.state_index(0))
y = stopped_resolvent_profile(exp, cs, 1.0, -500, 100)
print(f"  sup |solve - profile| = {np.max(np.abs(x - y)):.2e}")
b = exp.varphi_inverse(h, 1.0)
lo = Qs.state_index(-20)
print(f"  geometric decay below the source: ratio {x[lo] / x[lo + 1]:.6f} "
      f"vs exp(-h b) = {np.exp(-h * b):.6f}")
