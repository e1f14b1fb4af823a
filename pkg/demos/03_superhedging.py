"""Superhedging a call on the risky asset as the proportional cost grows."""
from tclab import Claim, market_from_dict, superhedge_price


def binomial(lam):
    return market_from_dict({
        "d": 2, "T": 1, "default_lambda": [[0, lam], [lam, 0]],
        "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1, 1]},
                  {"id": 1, "t": 1, "parent": 0, "p": 0.5, "S": [1, 1.2]},
                  {"id": 2, "t": 1, "parent": 0, "p": 0.5, "S": [1, 0.9]}]})


# Cash-settled call with strike 1: pays 0.2 in the up state.
call = Claim({1: [0.2, 0.0], 2: [0.0, 0.0]})
print(" lambda   price    dual     gap")
for lam in (0.0, 0.01, 0.05, 0.1, 0.2, 0.5):
    res = superhedge_price(binomial(lam), call)
    print(f"{lam:7.2f} {res.price:8.5f} {res.dual_value:8.5f} {res.gap:8.1e}")

# Without costs the price is the expectation under the unique martingale measure q = 1/3.
print("frictionless reference:", 0.2 / 3)

# From lambda = 0.1 on, holding 0.2 in cash beats any trade; below it the hedge buys stock.
res = superhedge_price(binomial(0.05), call)
print("hedge at lambda=0.05, root trade:", res.strategy.xi[0].round(5))
