from fractions import Fraction as F

import numpy as np
import pytest

from _corpus import binomial_spec, growth_spec, random_market, two_period_spec
from tclab import lp
from tclab.market import Strategy, market_from_dict
from tclab.numeric import InputError
from tclab.pricing import EPS_STRICT, PriceSystem, find_cps, mix, verify_supermartingale


@pytest.fixture(params=[False, True], ids=["float", "exact"])
def exact(request):
    return request.param


def test_single_asset_always_feasible(exact):
    spec = {"d": 1, "T": 1, "nodes": [{"id": 0, "t": 0, "p": 1, "S": [1]},
                                      {"id": 1, "t": 1, "parent": 0, "p": 0.25, "S": [2]},
                                      {"id": 2, "t": 1, "parent": 0, "p": 0.75, "S": [0.5]}]}
    tree = market_from_dict(spec, exact=exact)
    for strict in (False, True):
        res = find_cps(tree, strict=strict)
        assert res.found and res.system.validate(tree) == []


def test_binomial_strict_system(exact):
    tree = market_from_dict(binomial_spec(), exact=exact)
    res = find_cps(tree, strict=True)
    assert res.found
    ps = res.system
    assert ps.validate(tree) == []
    assert ps.Z[0][0] == 1
    # Z^2 S^2 / Z^1 stays inside the bid-ask band at each node
    for n in tree.nodes:
        ratio = float(ps.Z[n][1] / ps.Z[n][0])
        assert 1 / 1.1 < ratio < 1.1


def test_growth_has_no_price_system(exact):
    tree = market_from_dict(growth_spec(), exact=exact)
    for strict in (False, True):
        res = find_cps(tree, strict=strict)
        assert not res.found
        assert res.certificate is not None
        assert lp.check_farkas(res.problem, res.certificate)


def test_anchor_precondition_and_exactness():
    tree = market_from_dict(binomial_spec(), exact=True)
    with pytest.raises(InputError):
        find_cps(tree, anchor=(0, [1, F(11, 10)]))
    eta = [F(2), F(21, 10)]
    res = find_cps(tree, anchor=(0, eta))
    assert res.found
    assert list(res.system.Z[0]) == eta
    assert res.system.validate(tree, anchor=(0, eta)) == []


def test_subtree_and_t0_selection():
    # both late moves exceed the squared bid-ask factor 1.05**2
    tree = market_from_dict(two_period_spec(late_down=1.4))
    assert not find_cps(tree, t0=1, node=1).found
    assert find_cps(tree, t0=1, node=2).found
    with pytest.raises(InputError):
        find_cps(tree, t0=1)
    with pytest.raises(InputError):
        find_cps(tree, t0=0, node=2)


def test_mixing_gives_strict_system():
    rng = np.random.default_rng(9)
    mixed = 0
    for _ in range(40):
        tree = random_market(rng)
        lax, strict = find_cps(tree), find_cps(tree, strict=True)
        if not (lax.found and strict.found):
            continue
        for alpha in (1e-3, 0.5, 3.0):
            m = mix(lax.system, strict.system, alpha)
            assert m.validate(tree) == []
        mixed += 1
    assert mixed > 5


def test_returned_systems_revalidate():
    rng = np.random.default_rng(10)
    for _ in range(40):
        tree = random_market(rng)
        for strict in (False, True):
            res = find_cps(tree, strict=strict)
            if res.found:
                assert res.system.validate(tree) == []
                assert res.margin > EPS_STRICT
                if strict:
                    assert res.system.strict_margin > 0
                else:
                    assert res.system.margin > 0


def test_validate_catches_broken_systems():
    tree = market_from_dict(binomial_spec())
    ps = find_cps(tree).system
    broken = PriceSystem(dict(ps.Z), 0, 0)
    broken.Z[1] = broken.Z[1] * 2
    assert any("martingale" in v for v in broken.validate(tree))
    broken.Z[1] = np.array([1.0, 5.0])
    assert any("dual cone" in v for v in broken.validate(tree))


def test_supermartingale_examples(exact):
    tree = market_from_dict(binomial_spec(), exact=exact)
    ps = find_cps(tree).system
    rep = verify_supermartingale(tree, Strategy(), ps)
    assert rep.ok
    assert all(middle == right == 0 for _, left, middle, right in rep.rows)
    lam = F(11, 10) if exact else 1.1
    trade = Strategy({0: [-lam, 1]})
    rep = verify_supermartingale(tree, trade, ps, eta=[lam, 0])
    assert rep.ok, (rep.violations, rep.preconditions)
    n, left, middle, _ = rep.rows[0]
    assert n == 0 and left - middle == ps.Z[0].dot(np.array([lam, -1], dtype=object if exact else float))
    assert left - middle >= 0


def test_supermartingale_reports_preconditions():
    tree = market_from_dict(binomial_spec())
    ps = find_cps(tree).system
    rep = verify_supermartingale(tree, Strategy({0: [0.5, 0]}), ps)
    assert not rep.ok and rep.preconditions


def test_json_roundtrip():
    tree = market_from_dict(binomial_spec())
    ps = find_cps(tree, strict=True).system
    back = PriceSystem.from_json(ps.to_json())
    assert back.strict and back.validate(tree) == []
