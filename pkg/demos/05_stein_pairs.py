"""The exchangeable pair behind the normal approximation.

Resampling one coupling changes a cluster weight W by (omega' - omega_I) R_I.
Its conditional mean is exactly -lambda W with lambda = k / |E|.
"""

from glasslab import MixtureSpec, SteinConfig, DisorderSample
from glasslab.stein import conditional_variance_diagnostic, linearity_check, third_moment_diagnostic

spec = MixtureSpec({3: 1.0})
cfg = SteinConfig(spec, ("1x3;l=3", "2x3;l=2", "3x3;l=1", "4x3;l=0"), 1.0)
for row in linearity_check(cfg, DisorderSample.draw(spec, 10, seed=2)):
    print(f"{row.structure:10s} W={row.W:+.4f}  E[dW|w]={row.lhs:+.3e}  -lam W={row.rhs:+.3e}  lam={row.lam:.5f}")

cfg = SteinConfig(spec, ("2x3;l=2",), 1.0)
rep = conditional_variance_diagnostic(cfg, (8, 10, 12), 40, seed=1)
print("\nconditional variance pieces (normalised):")
for k, v in rep.values.items():
    print(f"  {k}: " + "  ".join(f"{x:.2e}" for x in v) + f"   slope {rep.exponents[k]:.2f}")
print(f"  status {rep.status} (target for A: {rep.targets['A']})")

rep = third_moment_diagnostic(cfg, (8, 10, 12), 40, seed=1)
print(f"\nthird moment slope {rep.exponents['third']:.2f}, asymptotic target {rep.targets['third']}")
