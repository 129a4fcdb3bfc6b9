"""The reduced function over ball centers, its critical points, and
nonexistence obstructions.

For a prescribed weight the reduced function integrates it over the moving
hyperbolic ball; critical centers organize perturbed spheres.  Monotone
weights have uniformly signed derivatives and admit no critical point.
"""

import numpy as np

from cmc_hyp import f_gradient, f_value, find_critical, make_params, monotone_obstruction
from cmc_hyp.melnikov import phi_constant, phi_coordinate, phi_radial_gaussian

params = make_params(2.0)
box = (-0.4, 0.4, -0.4, 0.4, 0.6, 1.6)

print("== constant weight: the value is the ball volume, center-independent ==")
one = phi_constant(1.0)
for q in ((0, 0, 1), (0.3, -0.2, 1.4)):
    print(f"  F(1; q={q}) = {f_value(one, params, q):.12f}")
print(f"  closed form pi(4/3 - ln 3) = "
      f"{np.pi * (4 / 3 - np.log(3)):.12f}")

print("\n== a radial bump has a single stable critical center ==")
bump = phi_radial_gaussian((0, 0, 1))
for res in find_critical(bump, params, box, seeds=8):
    print(f"  q* = ({res.q.p1:+.2e}, {res.q.p2:+.2e}, {res.q.p3:.6f})  "
          f"{res.classification},  F = {res.value:.6f}")
print(f"  gradient there: {np.max(np.abs(f_gradient(bump, params, (0, 0, 1)))):.2e}")

print("\n== monotone weights are obstructed ==")
rep = monotone_obstruction(phi_coordinate(0), params, box)
print(f"  weight p1: obstructed along {rep['obstructed']}, "
      f"margin {rep['directions']['e1']['min']:.3f}")
print(f"  critical points found: "
      f"{find_critical(phi_coordinate(0), params, box, seeds=8)}")
