"""Where does the annealed (replica-symmetric) picture stop being provable?

beta_c is the largest beta for which beta^2 xi(x) <= I(x) on [0, 1]. For the
SK model the binding point is x -> 0; for p >= 3 it is an interior point.
"""

import math

from glasslab import MixtureSpec, beta_c, phi_inverse_beta_c, sweep

# SK: the minimum sits at the boundary, so the limit x -> 0 is what matters
sk = beta_c(MixtureSpec({2: 1.0}))
print(f"SK: beta_c = {sk.beta_c:.6f} ({sk.boundary})")

# pure p-spin through two routes
for p in (3, 4, 6):
    a = beta_c(MixtureSpec.pure(p))
    b = phi_inverse_beta_c(p)
    print(f"p={p}: grid {a.beta_c:.10f} at x*={a.x_star:.4f}, phi^-1 route {b.beta_c:.10f}")

# a mixture is just another xi
mix = beta_c(MixtureSpec({3: 1.0, 4: 0.5}))
print(f"theta = (3: 1, 4: 0.5): beta_c = {mix.beta_c:.6f}")

# large p: beta_c / sqrt(p!) against the two natural constants
print("\n p   beta_c/sqrt(p!)   talagrand/sqrt(p!)")
for r in sweep([3, 5, 10, 20, 30]):
    print(f"{r['p']:2d}   {r['beta_c_scaled']:.6f}          {r['talagrand_scaled']:.6f}")
print(f"sqrt(ln 2) = {math.sqrt(math.log(2)):.6f}, sqrt(2 ln 2) = {math.sqrt(2 * math.log(2)):.6f}")
# with xi = x^p/p! the second-moment value tends to sqrt(ln 2); the Talagrand
# bound (the REM-like constant) sits a factor sqrt(2) higher
