"""Two small markets: one with an arbitrage of the second kind, one without."""
from pathlib import Path

from tclab import check_condition_b, check_na2, find_cps, is_na2_witness, load_market, validate_witness

DATA = Path(__file__).parent / "data"

growth = load_market(DATA / "growth.json")
binomial = load_market(DATA / "binomial.json")

for name, tree in (("growth", growth), ("binomial", binomial)):
    rep = check_na2(tree)
    lax, strict = find_cps(tree), find_cps(tree, strict=True)
    print(f"{name:>9}: NA2 holds={rep.holds} (methods agree={rep.agree}); "
          f"price system={lax.found}, strict={strict.found}")

# The risky asset rises 50% for sure, more than the squared bid-ask factor 1.21.
# Borrowing one unit of cash to hold one unit of stock is insolvent today and solvent tomorrow.
ok, w = is_na2_witness(growth, growth.root, [-1, 1])
print("eta = (-1, 1) is a witness:", ok, validate_witness(growth, w))

# The primal checker finds its own witness; the LP is free to pick any direction.
w = check_na2(growth, method="primal").witness()
print("primal witness eta =", w.eta.round(4), "trades at root:", w.strategy.xi[0].round(4))

# Condition B fails on the growth market exactly because NA2 fails there.
print("condition B at (-1, 1):", check_condition_b(growth, 0, [-1, 1]))

ps = find_cps(binomial, strict=True).system
print("strict price system on the binomial market:")
for node, z in sorted(ps.Z.items()):
    print(f"  node {node}: Z = {z.round(4)}")
