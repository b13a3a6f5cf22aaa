"""Counting sub-hypergraphs by shape.

A structure like 2x3;l=2 means two 3-edges with exactly two odd-degree
vertices. Closed forms are checked against brute-force enumeration, and the
leading constant u^2 = lim |S_c| / N^t is computed two independent ways.
"""

from glasslab import ClusterStructure, closed_form_count, count_clusters, u_constant, v_constant
from glasslab.census import intersection_profiles, profile_census

S = ClusterStructure.parse

for text in ("1x3;l=3", "2x3;l=2", "3x3;l=1", "4x3;l=0", "3x4;l=0", "1x4,2x5;l=0"):
    c = S(text)
    N = 9
    print(f"{text:12s} t={c.t}  enumerated={count_clusters(N, c, canonical=True):7d}  "
          f"closed form={closed_form_count(N, c):7d}  u^2={u_constant(c).exact}")

# non-canonical members: a vertex of degree 3 is odd too
c = S("3x3;l=1")
print(f"\n3x3;l=1 at N=8: {count_clusters(8, c)} members, {count_clusters(8, c, canonical=True)} canonical")

# how the first edge of a 4-edge even cluster meets the other three
print("\nintersection profiles for p=5 at N=10:")
for prof, n in sorted(profile_census(10, 5).items()):
    print(f"  {prof}: {n}")
print("profiles:", intersection_profiles(5))

# variance constants feed the fluctuation predictions
beta = 1.0
print(f"\nv(4x3;l=0) = {v_constant(S('4x3;l=0'), beta):.6f} = 5/48 at beta=1")
