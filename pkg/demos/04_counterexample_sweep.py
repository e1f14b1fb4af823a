"""The one-period market with d assets whose replication strategies blow up.

At every truncation d the market has no arbitrage of the second kind, yet the
cheapest strategy replicating the cash claim h needs sum_{i<=d} i^(-1/2) units
of risky assets. The norm diverges with d, so the limit claim is not attainable.
"""
from tclab.fatou import CounterexampleConfig, na2_on_counterexample, replication_norm_sweep, verify_interval_cones

for d in range(2, 6):
    rep = na2_on_counterexample(d, mode="exact")
    cones = verify_interval_cones(CounterexampleConfig(d))["match"]
    print(f"d={d}: NA2 holds={rep.holds}, dual cones match the interval description={cones}")

print()
print(f"{'d':>4} {'LP norm':>10} {'partial sum':>12} {'ratio':>7} {'g_n price':>10}")
prev = None
for row in replication_norm_sweep(0.5, [4, 8, 16, 32, 64, 128]):
    ratio = "" if prev is None else f"{row['lp_min_norm'] / prev:7.4f}"
    print(f"{row['d']:4d} {row['lp_min_norm']:10.6f} {row['oracle_partial_sum']:12.6f} {ratio:>7} {row['gn_price']:10.4f}")
    prev = row["lp_min_norm"]
