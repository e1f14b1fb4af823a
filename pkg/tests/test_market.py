import json
from fractions import Fraction as F

import numpy as np
import pytest

from _corpus import binomial_spec, random_market, two_period_spec
from tclab.fatou import CounterexampleConfig, build_counterexample
from tclab.market import (
    MarketValidationError,
    Strategy,
    is_admissible,
    load_claim,
    load_market,
    market_from_dict,
    portfolio_value,
    validate_market,
)
from tclab.numeric import InputError


def test_minimal_one_node():
    tree = market_from_dict({"d": 1, "T": 0, "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1]}]})
    assert len(tree) == 1 and tree.leaves() == [0]


def test_diagonal_cost_rejected():
    spec = {"d": 1, "T": 0, "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1], "lambda": [[0.1]]}]}
    with pytest.raises(MarketValidationError) as err:
        market_from_dict(spec)
    assert any("diagonal cost nonzero" in v for v in err.value.violations)


@pytest.mark.parametrize("mutate, needle", [
    (lambda s: s["nodes"][1].update(p=-0.5), "p"),
    (lambda s: s["nodes"][1].update(S=[1, 0]), "prices"),
    (lambda s: s["nodes"][1].update(parent=7), "parent"),
    (lambda s: s["nodes"][1].update(S=[1]), "length"),
    (lambda s: s["nodes"][1].update(p=0.7), "probab"),
    (lambda s: s["nodes"][2].update(id=1), "duplicate"),
    (lambda s: s.update(default_lambda=[[0, 1], [0.1, 0]]), None),
])
def test_named_violations(mutate, needle):
    spec = binomial_spec()
    mutate(spec)
    if needle is None:
        market_from_dict(spec)  # asymmetric costs are fine
        return
    with pytest.raises(InputError) as err:
        market_from_dict(spec)
    assert needle in str(err.value)


def test_triangle_violation_named():
    spec = binomial_spec()
    spec["nodes"][0]["lambda"] = [[0, 0, 1], [0, 0, 0], [0, 0, 0]]
    spec["d"] = 3
    for n in spec["nodes"]:
        n["S"] = n["S"] + [1]
    spec.pop("default_lambda")
    with pytest.raises(MarketValidationError, match="triangle"):
        market_from_dict(spec)


def test_counterexample_generator_validates():
    for d in (2, 3, 5):
        tree = build_counterexample(CounterexampleConfig(d))
        assert validate_market(tree) == []
        market_from_dict(json.loads(json.dumps(tree.to_dict())))


def test_load_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(two_period_spec()))
    tree = load_market(path)
    assert tree.T == 2 and len(tree.leaves()) == 4
    exact = load_market(path, exact=True)
    assert exact[3].S[1] == F(13, 10)
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(InputError):
        load_market(tmp_path / "bad.json")
    (tmp_path / "c.json").write_text('{"g": {"1": [0, 1], "2": [0, 1]}}')
    assert load_claim(tmp_path / "c.json").g[1] == [0, 1]


def test_portfolio_value_examples():
    spec = binomial_spec()
    tree = market_from_dict(spec)
    assert list(portfolio_value(tree, Strategy(), 1)) == [0, 0]
    xi = Strategy({0: [-1.1, 1]})
    assert portfolio_value(tree, xi, 1) == pytest.approx([-1.1, 1.2])
    late = Strategy({0: [5, 5], 1: [1, 0]}, t0=1)
    assert list(portfolio_value(tree, late, 0)) == [0, 0]
    assert list(portfolio_value(tree, late, 1)) == [1, 0]


def test_flow_composition():
    rng = np.random.default_rng(3)
    tree = random_market(rng, d=3, T=3)
    xi = Strategy({n: rng.normal(size=3) for n in tree.nodes})
    for n in tree.nodes:
        node = tree[n]
        if node.parent is None:
            continue
        expected = portfolio_value(tree, xi, node.parent) * node.S / tree[node.parent].S + xi.at(tree, n)
        assert portfolio_value(tree, xi, n) == pytest.approx(expected)


def test_admissibility_examples():
    tree = market_from_dict(binomial_spec())
    assert is_admissible(tree, Strategy()) == (True, None)
    assert is_admissible(tree, Strategy({0: [-1.1, 1]}))[0]
    assert is_admissible(tree, Strategy({0: [0.1, 0]})) == (False, 0)


def test_tree_navigation():
    tree = market_from_dict(two_period_spec())
    assert tree.path(4) == [0, 1, 4]
    assert tree.subtree(1) == [1, 3, 4]
    assert tree.leaves_under(2) == [5, 6]
    assert tree.at_time(1) == [1, 2]
    with pytest.raises(Exception):
        tree[99]
