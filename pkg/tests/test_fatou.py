import math
from fractions import Fraction as F

import pytest

from tclab.arbitrage import check_na2
from tclab.fatou import (
    CounterexampleConfig,
    build_counterexample,
    costs_time0,
    friction_report,
    gn_price,
    martingale_check,
    oracle_norm,
    perturbed_counterexample,
    replication_lp,
    replication_norm_sweep,
    verify_interval_cones,
)
from tclab.market import validate_market
from tclab.numeric import InputError


def test_config_validation():
    for bad in (dict(d=1), dict(d=3, eps=0), dict(d=3, n=0)):
        with pytest.raises(InputError):
            CounterexampleConfig(**bad)


def test_costs_follow_the_asset_index():
    lam = costs_time0(4)
    # asset i (1-based) pays 1/(i-1) to move into any other asset, cash pays nothing
    assert lam[0] == [0, 0, 0, 0]
    assert lam[1][0] == F(1) and lam[2][0] == F(1, 2) and lam[3][1] == F(1, 3)


def test_generator_validates():
    for d in range(2, 8):
        tree = build_counterexample(CounterexampleConfig(d))
        assert validate_market(tree) == []
        assert len(tree.leaves()) == 2 ** (d - 1)


def test_d3_time0_rays():
    rep = verify_interval_cones(CounterexampleConfig(3))
    assert rep["match"]
    assert rep["time0"]["enumerated"] == sorted({(F(1), F(1, 2), F(2, 3)), (F(1), F(1), F(2, 3)),
                                                 (F(1), F(1, 2), F(1)), (F(1), F(1), F(1))})


def test_cones_martingale_friction_up_to_5():
    for d in range(2, 6):
        cfg = CounterexampleConfig(d)
        assert verify_interval_cones(cfg)["match"]
        assert martingale_check(cfg)["martingale"]
        rep = friction_report(cfg)
        assert rep["weak_friction"]
        assert rep["time0"]["min_cost"] == 0


def test_two_asset_norms():
    res = replication_lp(2, 0.5, method="tree")
    assert res.integrand_norm == pytest.approx(2 ** -0.5, abs=1e-9)
    # buy leg at time 0 plus the cash that pays for it
    assert res.transfer_norm == pytest.approx(2 * 2 ** -0.5, abs=1e-9)


def test_tree_and_separable_agree():
    for d in range(2, 7):
        tree = replication_lp(d, 0.5, method="tree")
        sep = replication_lp(d, 0.5, method="separable")
        assert tree.integrand_norm == pytest.approx(sep.integrand_norm, abs=1e-7)
        assert tree.integrand_norm == pytest.approx(oracle_norm(d, 0.5), abs=1e-6)


def test_sweep_growth_rate():
    rows = replication_norm_sweep(0.5, [4, 8, 16, 32], n=10)
    norms = [r["lp_min_norm"] for r in rows]
    for r in rows:
        assert r["lp_min_norm"] == pytest.approx(r["oracle_partial_sum"], abs=1e-6)
        assert r["transfer_norm"] == pytest.approx(2 * r["lp_min_norm"], abs=1e-6)
        assert r["gn_price"] <= 1e-9
    ratios = [b / a for a, b in zip(norms, norms[1:])]
    assert all(r > math.sqrt(2) for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert rows[0]["na2_verdict"] == "holds" and rows[1]["na2_verdict"] is None


def test_gn_price_tree_matches_separable():
    for d in (3, 5):
        assert gn_price(d, 0.5, 4, method="tree") == pytest.approx(gn_price(d, 0.5, 4, method="separable"), abs=1e-7)


def test_perturbed_control_fails():
    for exact in (False, True):
        rep = check_na2(perturbed_counterexample(exact=exact))
        assert rep.agree and not rep.holds


def test_node_budget(monkeypatch):
    monkeypatch.setenv("TCLAB_NODE_BUDGET", "8")
    with pytest.raises(InputError):
        build_counterexample(CounterexampleConfig(5))
    monkeypatch.setenv("TCLAB_NODE_BUDGET", "many")
    with pytest.raises(InputError):
        build_counterexample(CounterexampleConfig(2))


def test_two_asset_leaves_and_time1_rays():
    tree = build_counterexample(CounterexampleConfig(2))
    assert sorted(tree[leaf].S[1] for leaf in tree.leaves()) == [F(1, 2), F(3, 2)]
    rep = verify_interval_cones(CounterexampleConfig(2))
    assert set(rep["time1"]["enumerated"]) == {(F(1, 2), F(1)), (F(1), F(1))}
