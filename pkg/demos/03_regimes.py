"""Which clusters drive the fluctuations of log Z_hat under a field h = rho N^-alpha?

Each structure c has a variance exponent X(c, alpha); the dominant ones
maximise it. Sweeping alpha moves the system through the regimes.
"""

from fractions import Fraction

from glasslab import MixtureSpec, alpha_critical, classify
from glasslab.regimes import alpha_crossover
from glasslab.tables import compare_with_table

for theta in ({3: 1.0}, {4: 1.0}, {5: 1.0}, {4: 1.0, 5: 0.5}):
    spec = MixtureSpec(theta)
    print(f"orders {sorted(theta)}: alpha_c = {alpha_critical(spec)}")
    for alpha in ("inf", Fraction(3, 4), Fraction(1, 2), Fraction(3, 8)):
        rep = classify(spec, alpha)
        dom = ", ".join(map(str, rep.dominant))
        print(f"   alpha={str(alpha):>4s}  {rep.regime:16s} gamma={str(rep.gamma):>5s}  {dom}")

# the closed-form alpha_c and the exponent crossover part ways for pe = po + 1, po >= 5
spec = MixtureSpec({6: 1.0, 5: 1.0})
print(f"\n(6,5): formula {alpha_critical(spec)}, crossover {alpha_crossover(spec)}")
for m in compare_with_table((6, 5))[:3]:
    print(f"   alpha={m.alpha}: table {m.table_dominant} gamma {m.table_gamma}, computed {m.dominant} gamma {m.gamma}")
