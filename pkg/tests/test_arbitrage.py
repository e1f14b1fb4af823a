from fractions import Fraction as F

import numpy as np
import pytest

from _corpus import binomial_spec, growth_spec, random_market
from tclab.arbitrage import (
    Witness,
    check_condition_b,
    check_na2,
    check_na2_dual,
    check_na2_primal,
    is_na2_witness,
    max_terminal_gain,
    validate_witness,
)
from tclab.fatou import na2_on_counterexample
from tclab.market import Strategy, market_from_dict


@pytest.fixture(params=[False, True], ids=["float", "exact"])
def exact(request):
    return request.param


def test_growth_fails_with_witness(exact):
    tree = market_from_dict(growth_spec(), exact=exact)
    for rep in (check_na2_primal(tree), check_na2_dual(tree)):
        assert not rep.holds and not rep.verdict(0) and rep.verdict(1)
        assert validate_witness(tree, rep.witness())["valid"]
    eta = [-1, 1]
    ok, w = is_na2_witness(tree, 0, eta)
    assert ok
    checks = validate_witness(tree, w)
    assert checks == {"eta_outside": True, "admissible": True, "terminal_solvent": True, "valid": True}
    # eta S_1/S_0 = (-1, 1.5) is already solvent: no trade needed
    assert is_na2_witness(tree, 0, [1, 1])[0] is False


def test_counterexample_truncations_hold():
    for d in (2, 3, 4):
        rep = na2_on_counterexample(d, mode="exact")
        assert rep.holds and rep.agree


def _wide_band_market(leaf_prices, lam=10):
    d = len(leaf_prices[0])
    leaves = [{"id": k, "t": 1, "parent": 0, "p": 1 / len(leaf_prices), "S": list(S)}
              for k, S in enumerate(leaf_prices, start=1)]
    return market_from_dict({
        "d": d, "T": 1, "default_lambda": [[0 if i == j else lam for j in range(d)] for i in range(d)],
        "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1.0] * d}] + leaves})


def test_wide_bands_hold_with_martingale_prices():
    # cash numeraire and leaf prices averaging to 1: Z = eta extends every interior anchor
    rng = np.random.default_rng(12)
    for _ in range(10):
        moves = rng.uniform(-0.5, 0.5, size=(3, 2))
        moves -= moves.mean(axis=0)
        prices = [[1.0, *(1 + m)] for m in moves]
        rep = check_na2(_wide_band_market(prices))
        assert rep.holds and rep.agree


def test_wide_bands_alone_do_not_give_na2():
    # asset 2 rises in every state; a position just outside K_0 becomes solvent
    tree = _wide_band_market([[1.0, 1.9, 0.8], [1.0, 1.1, 0.85], [1.0, 1.7, 1.8]])
    rep = check_na2(tree)
    assert rep.agree and not rep.holds
    assert validate_witness(tree, rep.witness())["valid"]


def test_single_asset_holds():
    spec = {"d": 1, "T": 1, "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1]},
                                      {"id": 1, "t": 1, "parent": 0, "p": 1, "S": [3]}]}
    rep = check_na2(market_from_dict(spec))
    assert rep.holds and rep.agree


def test_frictionless_arbitrage_fails_both_methods(exact):
    tree = market_from_dict(growth_spec(lam=0), exact=exact)
    rep = check_na2(tree)
    assert rep.agree and not rep.holds


def test_witnesses_revalidate_on_corpus():
    rng = np.random.default_rng(13)
    failures = 0
    for _ in range(40):
        tree = random_market(rng)
        rep = check_na2(tree)
        assert rep.agree
        for u, (primal, dual) in rep.nodes.items():
            for v in (primal, dual):
                if not v.local:
                    failures += 1
                    assert v.witness is not None
                    assert validate_witness(tree, v.witness)["valid"], (u, v.witness)
    assert failures > 0


def test_monotone_in_costs():
    rng = np.random.default_rng(14)
    for _ in range(40):
        tree = random_market(rng)
        if not check_na2_primal(tree).holds:
            continue
        for factor in (1.5, 4.0):
            assert check_na2_primal(tree.with_costs(factor)).holds


def test_no_free_terminal_gain_under_na2():
    tree = market_from_dict(binomial_spec())
    for c in ([1, 0], [0, 1], [1, 1]):
        assert max_terminal_gain(tree, c) == pytest.approx(0, abs=1e-9)
    assert max_terminal_gain(market_from_dict(growth_spec()), [1, 1]) == np.inf


def test_condition_b_examples(exact):
    tree = market_from_dict(binomial_spec(), exact=exact)
    pos = check_condition_b(tree, 0, [1, 2])
    assert pos["antecedent"] and pos["consequent"] and pos["consistent"]
    lam = F(11, 10) if exact else 1.1
    gen = check_condition_b(tree, 0, [lam, -1])
    assert gen["consequent"] and gen["implication"]
    growth = market_from_dict(growth_spec(), exact=exact)
    b = check_condition_b(growth, 0, [-1, 1])
    assert b["antecedent"] and not b["consequent"]
    assert not b["implication"] and not b["na2"] and b["consistent"]


def test_dual_report_flags_cps_consistency():
    rng = np.random.default_rng(15)
    for _ in range(30):
        rep = check_na2_dual(random_market(rng))
        for v in rep.nodes.values():
            assert v.detail["cps_consistent"]


def test_witness_json_roundtrip():
    tree = market_from_dict(growth_spec())
    w = check_na2_primal(tree).witness()
    back = Witness.from_json(w.to_json())
    assert back.node == w.node
    assert validate_witness(tree, back)["valid"]
    # (-1, -1) held without trading stays insolvent
    assert not validate_witness(tree, Witness(0, np.array([-1.0, -1.0]), Strategy()))["valid"]
    assert validate_witness(tree, Witness(0, np.array([1.0, 1.0]), Strategy()))["eta_outside"] is False
