"""Solvency cones, their duals and the efficient-friction diagnostics."""
from fractions import Fraction

from tclab import ConeSpec, check_ef_conditions, extreme_rays_dual, in_solvency_cone, stress_score

cone = ConeSpec.uniform(2, Fraction(1, 10), exact=True)

# Selling 1 unit of asset-2 money costs 1.1 units of cash: (1.1, -1) is solvent.
ok, cert = in_solvency_cone(cone, [Fraction(11, 10), -1])
print("(1.1, -1) solvent:", ok, "transfers:", cert.a)

# (-1, 1) is not, and the separator is a dual-cone vector pricing it negatively.
ok, cert = in_solvency_cone(cone, [-1, 1])
print("(-1, 1) solvent:", ok, "separator z =", list(cert.z))

print("extreme rays of K':", [tuple(map(str, r)) for r in extreme_rays_dual(cone)])

rep = check_ef_conditions(cone)
for key in ("delta_one", "distance", "k", "alpha"):
    print(f"{key:>10}: {rep[key]}")

# Costs 1 for i < j and 0 otherwise: 1 sits on the dual boundary, and splitting
# (1, 0, 1, 0, ...) into two dual-cone vectors needs ever larger pieces.
for d in (4, 8, 12, 16):
    lam = [[1 if i < j else 0 for j in range(d)] for i in range(d)]
    print(f"d={d:2d}  stress score t(d) = {stress_score(ConeSpec(lam)):g}")
