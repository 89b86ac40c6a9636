"""Harmonic balance against the closed-form quadratic root.

Solves the first-order balance on a few weak-coupling points, compares the
offset with the selected quadratic root, then solves the second-order
problem and reports delta_2 / delta.
"""

from sideband_si import closed_form as cf
from sideband_si import harmonic_balance as hb
from sideband_si.params import OmParams

p = OmParams(1.0, 0.05, 1e-3, coupling=1e-3)
print(f"{'nbar':>8} {'delta_hb':>13} {'|hb - root|':>12} {'residual':>10} {'d2/d':>7}")
for n in (10.0, 100.0, 1000.0, 5000.0):
    sol = hb.hb_solve(p, n, tol=1e-12)
    _, (root, _) = cf.si_quadratic(p, n)
    o2 = hb.hb_solve_order2(p, n)
    print(f"{n:8.0f} {sol.delta:13.6e} {abs(sol.state.delta - root):12.1e} {sol.residual_norm:10.1e} "
          f"{o2.order2_ratio:7.4f}")
