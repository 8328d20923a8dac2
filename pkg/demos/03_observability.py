"""Observability constants: how expensive is it to see the final state?

C_obs(Lambda, T) is the sharp constant bounding the squared norm of the
state at time T by the velocity observed on the rectangle over (0, T),
within the span of modes below Lambda.  Longer horizons can only help;
shrinking horizons blow the constant up super-polynomially, and more modes
make the worst-case packet harder to see.
"""

import numpy as np

from stokesheat import ObservationRegion, assemble_basis, cost_and_constant_fit, obs_constant

basis = assemble_basis(220.0)
region = ObservationRegion(x1=(0.0, np.pi / 8), x2=(0.47, 0.53))
print(f"basis: {len(basis)} modes; small observation window "
      f"x1 in (0, pi/8), x2 in (0.47, 0.53)\n")

# --- horizon sweep at a fixed cutoff ----------------------------------------
t_list = (0.1, 0.2, 0.4, 0.8)
points = []
print("Lambda = 200, horizon sweep:")
for t in t_list:
    c = obs_constant(basis, 200.0, t, region)
    points.append((t, c.value))
    print(f"  T = {t:4.2f}:  C_obs = {c.value:.4e}")
fit = cost_and_constant_fit(points, sweep="T", gamma=1.5)
print(f"log C_obs against 1/T^1.5: slope = {fit.slope:.4f}, "
      f"R^2 = {fit.r_squared:.4f}  (monotone decreasing in T)\n")

# --- cutoff sweep at a fixed horizon ----------------------------------------
lam_list = (25.0, 50.0, 100.0, 200.0)
points = []
print("T = 0.4, cutoff sweep:")
for lam in lam_list:
    c = obs_constant(basis, lam, 0.4, region)
    points.append((lam, c.value))
    print(f"  Lambda = {lam:5.0f}:  C_obs = {c.value:.4e}")
fit = cost_and_constant_fit(points, sweep="Lambda")
print(f"log C_obs against sqrt(Lambda): slope = {fit.slope:.4f}, "
      f"R^2 = {fit.r_squared:.4f}")

# --- worst-observable packet --------------------------------------------------
c = obs_constant(basis, 200.0, 0.4, region)
worst = c.direction
top = np.argsort(np.abs(worst))[-3:][::-1]
print("\nhardest-to-see unit packet at (Lambda=200, T=0.4) concentrates on:")
for j in top:
    m = basis.modes[j]
    print(f"  mode (k={m.k}, n={m.n}, {m.phase or 'axial'}), "
          f"lambda = {m.lam:8.3f}, weight {worst[j]:+.3f}")
