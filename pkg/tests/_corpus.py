"""Random instance generators shared by the test modules."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from tclab.cones import ConeSpec
from tclab.market import market_from_dict


def closed_costs(rng, d, lo=0.01, hi=1.0, exact=False, zero_prob=0.0):
    """Random cost matrix made consistent by a multiplicative shortest-path closure."""
    if exact:
        lam = [[Fraction(int(rng.integers(round(lo * 1000), round(hi * 1000) + 1)), 1000) for _ in range(d)]
               for _ in range(d)]
        one = Fraction(1)
    else:
        lam = rng.uniform(lo, hi, size=(d, d)).tolist()
        one = 1.0
    for i in range(d):
        for j in range(d):
            if i == j or rng.random() < zero_prob:
                lam[i][j] = 0 * one
    L = [[one + lam[i][j] for j in range(d)] for i in range(d)]
    for k in range(d):
        for i in range(d):
            for j in range(d):
                if L[i][k] * L[k][j] < L[i][j]:
                    L[i][j] = L[i][k] * L[k][j]
    return [[L[i][j] - one for j in range(d)] for i in range(d)]


def random_cone(rng, d, exact=False, lo=0.01, hi=1.0):
    return ConeSpec(closed_costs(rng, d, lo, hi, exact), exact=exact)


def random_market(rng, d=None, T=None, exact=False, max_children=2):
    """Random tree; cost level and price moves vary so both NA2 outcomes occur."""
    d = int(rng.integers(1, 5)) if d is None else d
    T = int(rng.integers(1, 4)) if T is None else T
    level = rng.choice(["zero", "small", "large"], p=[0.2, 0.4, 0.4])
    hi = {"zero": 0.0, "small": 0.05, "large": 0.5}[level]
    spread = float(rng.choice([0.05, 0.2, 0.4]))

    def num(v):
        if exact:
            return Fraction(int(round(v * 100)), 100)
        return float(v)

    def costs():
        if hi == 0.0:
            return [[0] * d for _ in range(d)]
        return closed_costs(rng, d, lo=hi / 10, hi=hi, exact=exact)

    nodes = [{"id": 0, "t": 0, "parent": None, "p": 1, "S": [1] * d, "lambda": costs()}]
    frontier = [(0, [num(1)] * d, Fraction(1) if exact else 1.0)]
    nid = 1
    for t in range(1, T + 1):
        nxt = []
        for parent, S, p in frontier:
            k = int(rng.integers(1, max_children + 1))
            for c in range(k):
                moves = rng.uniform(-spread, spread, size=d)
                S_new = [num(max(0.1, float(s) * (1 + m))) for s, m in zip(S, moves)]
                S_new[0] = num(1)
                pc = p / k
                nodes.append({"id": nid, "t": t, "parent": parent, "p": pc, "S": S_new, "lambda": costs()})
                nxt.append((nid, S_new, pc))
                nid += 1
        frontier = nxt
    if not exact:
        for n in nodes:
            n["p"] = float(n["p"])
    return market_from_dict({"d": d, "T": T, "nodes": nodes}, exact=exact)


def _two_asset(nodes, lam, T):
    return {"d": 2, "T": T, "default_lambda": [[0, lam], [lam, 0]], "nodes": nodes}


def growth_spec(lam=0.1):
    """One period, the risky price rises 50% for sure."""
    return _two_asset([{"id": 0, "t": 0, "p": 1, "S": [1, 1]},
                       {"id": 1, "t": 1, "parent": 0, "p": 1, "S": [1, 1.5]}], lam, 1)


def binomial_spec(lam=0.1, up=1.2, down=0.9):
    return _two_asset([{"id": 0, "t": 0, "p": 1, "S": [1, 1]},
                       {"id": 1, "t": 1, "parent": 0, "p": 0.5, "S": [1, up]},
                       {"id": 2, "t": 1, "parent": 0, "p": 0.5, "S": [1, down]}], lam, 1)


def two_period_spec(lam=0.05, late_down=0.9):
    """Two-period binomial; with ``late_down > 1.1`` the up-node subtree only grows."""
    nodes = [{"id": 0, "t": 0, "p": 1, "S": [1, 1]},
             {"id": 1, "t": 1, "parent": 0, "p": 0.5, "S": [1, 1.1]},
             {"id": 2, "t": 1, "parent": 0, "p": 0.5, "S": [1, 0.9]},
             {"id": 3, "t": 2, "parent": 1, "p": 0.25, "S": [1, 1.3]},
             {"id": 4, "t": 2, "parent": 1, "p": 0.25, "S": [1, late_down]},
             {"id": 5, "t": 2, "parent": 2, "p": 0.25, "S": [1, 1.0]},
             {"id": 6, "t": 2, "parent": 2, "p": 0.25, "S": [1, 0.8]}]
    return _two_asset(nodes, lam, 2)


def crafted_cases(exact=False):
    """``name -> (tree, expected NA2 verdict)``: three that hold, three that fail."""
    from tclab.fatou import CounterexampleConfig, build_counterexample, perturbed_counterexample

    return {
        "binomial": (market_from_dict(binomial_spec(), exact=exact), True),
        "two_period": (market_from_dict(two_period_spec(), exact=exact), True),
        "counterexample_d3": (build_counterexample(CounterexampleConfig(3), exact=exact), True),
        "growth": (market_from_dict(growth_spec(), exact=exact), False),
        "two_period_late_growth": (market_from_dict(two_period_spec(late_down=1.2), exact=exact), False),
        "perturbed_counterexample": (perturbed_counterexample(exact=exact), False),
    }
