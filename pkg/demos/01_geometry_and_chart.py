"""Half-space geometry and the sphere chart: a guided tour.

Distances, hyperbolic balls and their Euclidean images, the conformal chart
map with its algebraic identities, and the spectral accuracy of the grid.
Run from the repository root:  python demos/01_geometry_and_chart.py
"""

import numpy as np

from cmc_hyp import (HyperbolicPoint, ball_quadrature, ball_to_euclidean,
                     build_grid, dist, hyperbolic_ball_volume, integrate,
                     omega_mu, translate)

print("== distances in the upper half-space ==")
p, q = HyperbolicPoint(0, 0, 1), HyperbolicPoint(0, 0, 2)
print(f"dist((0,0,1), (0,0,2)) = {dist(p, q):.15f}   (ln 2 = {np.log(2):.15f})")
t = HyperbolicPoint(0.5, -1.0, 3.0)
print(f"after translating both by {t}: "
      f"{dist(translate(p, t), translate(q, t)):.15f}")

print("\n== hyperbolic balls are Euclidean balls ==")
rho = np.arctanh(0.5)
ball = ball_to_euclidean(p, rho)
print(f"ball of radius artanh(1/2) about (0,0,1): center {ball.center}, "
      f"radius {ball.radius:.6f}")
pts, w = ball_quadrature(ball)
vol = np.sum(w * pts[:, 2] ** -3.0)
print(f"quadrature of p3^-3 over it: {vol:.12f}")
print(f"closed form pi(sinh 2rho - 2rho): {hyperbolic_ball_volume(rho):.12f}")

print("\n== the chart map and its identities ==")
g = build_grid(24)
om, mu, dx, dy = omega_mu(g.nodes)
print(f"grid n=24: {g.size} nodes, sum of weights - 4 pi = "
      f"{np.sum(g.weights) - 4 * np.pi:+.2e}")
print(f"max | |omega|^2 - 1 |        = {np.max(np.abs(np.sum(om**2, 1) - 1)):.2e}")
print(f"max | dx_omega . dy_omega |  = "
      f"{np.max(np.abs(np.einsum('ij,ij->i', dx, dy))):.2e}")
print(f"max | dx ^ dy + mu^2 omega | = "
      f"{np.max(np.abs(np.cross(dx, dy) + mu[:, None]**2 * om)):.2e}")

print("\n== spectral quadrature convergence ==")
ref = integrate(1.0 / (1.1 - build_grid(64).omega[:, 2]), build_grid(64))
for n in (8, 12, 16, 24):
    gn = build_grid(n)
    err = abs(integrate(1.0 / (1.1 - gn.omega[:, 2]), gn) - ref)
    print(f"  n = {n:2d}: quadrature error {err:.3e}")
