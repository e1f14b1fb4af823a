"""The truncated one-period counter-example market and its asset-count sweeps.

Assets ``1..d`` (asset 1 is cash). At time 0 all prices are 1; at time 1
``S^1 = 1`` and ``S^i = 1 + 1/i`` or ``1 - 1/i`` according to independent
fair coins ``b^i`` (``i >= 2``). Costs:

* time 0: ``lam^{1i} = 0`` and ``lam^{ij} = 1/(i-1)`` for ``i >= 2``;
* time 1: ``lam^{i1} = 0`` and ``lam^{ij} = 1`` for ``j >= 2``.

The dual cones are the products ``z^i in z^1 [1 - 1/i, 1]`` (time 0) and
``z^i in z^1 [1, 2]`` (time 1). The claim
``h = sum_{i>=2} y^i (2 b^i - 1)`` with ``y^i = i^{-(1+eps)}`` paid in cash
is replicated from zero wealth only by buying ``i^{-eps}`` of each asset at
time 0, so the integrand norm grows like the partial sums of ``i^{-eps}``.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from . import lp
from .arbitrage import check_na2
from .cones import ConeSpec, extreme_rays_dual
from .dd import normalize_ray
from .market import Claim, Node, ScenarioTree
from .numeric import InputError, to_fraction
from .superhedging import superhedge_price

DEFAULT_NODE_BUDGET = 2 ** 16
TREE_LP_MAX_D = 6
NA2_MAX_D = 5


def node_budget() -> int:
    raw = os.environ.get("TCLAB_NODE_BUDGET")
    if raw is None:
        return DEFAULT_NODE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"TCLAB_NODE_BUDGET must be an integer, got {raw!r}") from None
    if value < 1:
        raise InputError("TCLAB_NODE_BUDGET must be positive")
    return value


@dataclass(frozen=True)
class CounterexampleConfig:
    d: int
    eps: object = Fraction(1, 2)
    n: int = 1

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 2:
            raise InputError("d must be an integer >= 2")
        if not self.eps > 0:
            raise InputError("eps must be positive")
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError("n must be an integer >= 1")


def costs_time0(d: int) -> list:
    return [[Fraction(0) if i == j or i == 0 else Fraction(1, i) for j in range(d)] for i in range(d)]


def costs_time1(d: int) -> list:
    return [[Fraction(0) if i == j or j == 0 else Fraction(1) for j in range(d)] for i in range(d)]


def sign_patterns(d: int) -> Iterable[tuple]:
    """Coin outcomes ``(b^2, ..., b^d)`` in leaf order (1 = up)."""
    return itertools.product((1, 0), repeat=d - 1)


def build_counterexample(config: CounterexampleConfig, exact: bool = True) -> ScenarioTree:
    """One-period tree with ``2^(d-1)`` equally likely leaves (ids ``1..``)."""
    d = config.d
    leaves = 2 ** (d - 1)
    if leaves > node_budget():
        raise InputError(f"{leaves} leaves exceed the node budget {node_budget()}")
    conv = (lambda v: v) if exact else float
    cone0 = ConeSpec([[conv(v) for v in row] for row in costs_time0(d)], exact=exact)
    cone1 = ConeSpec([[conv(v) for v in row] for row in costs_time1(d)], exact=exact)
    one = Fraction(1)
    root_S = np.array([conv(one)] * d, dtype=object if exact else float)
    nodes = [Node(0, 0, None, conv(one), root_S, cone0)]
    p = conv(Fraction(1, leaves))
    for k, b in enumerate(sign_patterns(d), start=1):
        S = [one] + [one + Fraction(1, i) if bi else one - Fraction(1, i) for i, bi in zip(range(2, d + 1), b)]
        nodes.append(Node(k, 1, 0, p, np.array([conv(v) for v in S], dtype=object if exact else float), cone1))
    return ScenarioTree(d, 1, nodes, exact)


def leaf_pattern(tree: ScenarioTree, leaf: int) -> tuple:
    S = tree[leaf].S
    return tuple(int(S[i] > 1) for i in range(1, tree.d))


def _corner_rays(d: int, lows, highs) -> set:
    """Corners ``(1, c_2, ..., c_d)`` with ``c_i in {low_i, high_i}``, normalized to max entry 1."""
    return {normalize_ray((Fraction(1),) + c) for c in itertools.product(*zip(lows, highs))}


def verify_interval_cones(config: CounterexampleConfig) -> dict:
    """Compare enumerated extreme rays of both dual cones with the product-interval descriptions."""
    d = config.d
    tree = build_counterexample(config)
    out = {}
    interval = {
        0: _corner_rays(d, [1 - Fraction(1, i) for i in range(2, d + 1)], [Fraction(1)] * (d - 1)),
        1: _corner_rays(d, [Fraction(1)] * (d - 1), [Fraction(2)] * (d - 1)),
    }
    for t, nid in ((0, 0), (1, 1)):
        rays = {tuple(r) for r in extreme_rays_dual(tree[nid].cone)}
        out[f"time{t}"] = {"match": rays == interval[t], "enumerated": sorted(rays), "interval": sorted(interval[t])}
    out["match"] = out["time0"]["match"] and out["time1"]["match"]
    return out


def martingale_check(config: CounterexampleConfig) -> dict:
    """Exact check that every price is a martingale under the uniform leaf weights."""
    tree = build_counterexample(config)
    mean = sum((tree[leaf].p * tree[leaf].S for leaf in tree.leaves()), np.zeros(config.d, dtype=object))
    ok = [mean[i] == tree[0].S[i] for i in range(config.d)]
    return {"martingale": all(ok), "per_asset": ok}


def friction_report(config: CounterexampleConfig) -> dict:
    """Weak friction holds at both times, the uniform cost floor shrinks like ``1/(d-1)``."""
    d = config.d
    out = {}
    for t, lam in ((0, costs_time0(d)), (1, costs_time1(d))):
        pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
        out[f"time{t}"] = {
            "min_cost": min(lam[i][j] for i, j in pairs),
            "min_symmetric_cost": min(lam[i][j] + lam[j][i] for i, j in pairs),
        }
    out["weak_friction"] = all(v["min_symmetric_cost"] > 0 for k, v in out.items() if k.startswith("time"))
    return out


def claim_h(tree: ScenarioTree, eps, shift=0) -> Claim:
    """Cash claim ``h - shift`` at every leaf, ``h = sum y^i (2 b^i - 1)``."""
    y = _weights(tree.d, eps, tree.exact)
    g = {}
    for leaf in tree.leaves():
        b = leaf_pattern(tree, leaf)
        h = sum((y[i] * (2 * bi - 1) for i, bi in zip(range(2, tree.d + 1), b)), 0 * y[2])
        vec = [h - shift] + [0] * (tree.d - 1)
        g[leaf] = vec
    return Claim(g)


def _weights(d: int, eps, exact: bool) -> dict:
    """``y^i = i^{-(1+eps)}``, exact when ``eps`` is an integer, float otherwise."""
    e = to_fraction(eps) if exact else float(eps)
    out = {}
    for i in range(2, d + 1):
        if exact and e.denominator == 1:
            out[i] = Fraction(1, i ** (1 + int(e)))
        else:
            out[i] = float(i) ** (-(1 + float(e)))
    return out


def oracle_norm(d: int, eps) -> float:
    """``sum_{i=2}^d i^{-eps}``: the integrand norm of the unique replicating strategy."""
    return float(sum(float(i) ** (-float(eps)) for i in range(2, d + 1)))


@dataclass
class ReplicationResult:
    d: int
    method: str
    status: str
    xi0: Optional[np.ndarray]
    integrand_norm: Optional[float]
    transfer_norm: Optional[float]


def _replication_tree(d: int, eps) -> ReplicationResult:
    """Min ``|xi_0|_1`` over admissible time-0 trades with ``V_1 - h in K_1`` at every leaf (full tree LP)."""
    from .market import HedgeBlock

    tree = build_counterexample(CounterexampleConfig(d), exact=False)
    claim = claim_h(tree, eps)
    bld = lp.LpBuilder(exact=False)
    hb = HedgeBlock(bld, tree, 0)
    hb.terminal(rhs=lambda leaf: claim.at(tree, leaf))
    # |xi_0|_1 through split variables
    G = tree[0].cone.generators().astype(float)
    absv = bld.add_vars(d, lb=0)
    for i in range(d):
        xi_terms = [(hb.a[0][k], -G[i, k]) for k in np.flatnonzero(G[i] != 0)]
        bld.add_row(xi_terms + [(absv[i], -1)], "<=", 0)
        bld.add_row([(j, -c) for j, c in xi_terms] + [(absv[i], -1)], "<=", 0)
    bld.objective([(v, 1) for v in absv], "min")
    sol = lp.solve(bld.build())
    if sol.status != "optimal":
        return ReplicationResult(d, "tree", sol.status, None, None, None)
    xi = hb.strategy(sol.x).xi[0]
    return ReplicationResult(d, "tree", "optimal", xi, float(np.abs(xi[1:]).sum()), float(np.abs(xi).sum()))


def separable_problem(d: int, eps, shift=0.0, price=False):
    """Compact LP equivalent to the tree LP on this market.

    Time-0 admissibility ``-xi in K_0`` reads
    ``xi^1 + sum_i max((1 - 1/i) xi^i, xi^i) <= 0`` (extreme rays of ``K'_0``);
    leaf solvency ``x in K_1`` reads ``x^1 + sum_i min(x^i, 2 x^i) >= 0``. The
    worst leaf splits asset by asset, so ``2^(d-1)`` leaf rows collapse to one
    row plus two rows per asset. With ``price`` a free cash endowment ``x`` is
    added and minimized; otherwise ``|xi_0|_1`` is minimized.
    """
    y = _weights(d, eps, False)
    bld = lp.LpBuilder(exact=False)
    xi = bld.add_vars(d, lb=None)
    q = bld.add_vars(d, lb=None)  # q_i >= max((1-1/i) xi_i, xi_i)
    r = bld.add_vars(d, lb=None)  # r_i <= worst-case contribution of asset i at time 1
    m_up = bld.add_vars(d, lb=None)
    m_dn = bld.add_vars(d, lb=None)
    x = bld.add_vars(1, lb=None)[0] if price else None
    for i in range(1, d):
        k = i + 1
        bld.add_row([(q[i], 1), (xi[i], -(1 - 1 / k))], ">=", 0)
        bld.add_row([(q[i], 1), (xi[i], -1)], ">=", 0)
        for m, s in ((m_up, 1 + 1 / k), (m_dn, 1 - 1 / k)):
            bld.add_row([(m[i], 1), (xi[i], -s)], "<=", 0)
            bld.add_row([(m[i], 1), (xi[i], -2 * s)], "<=", 0)
        bld.add_row([(r[i], 1), (m_up[i], -1)], "<=", -y[k])
        bld.add_row([(r[i], 1), (m_dn[i], -1)], "<=", y[k])
    bld.add_row([(xi[0], 1)] + [(q[i], 1) for i in range(1, d)], "<=", 0)
    leaf = [(xi[0], 1)] + [(r[i], 1) for i in range(1, d)]
    if price:
        leaf.append((x, 1))
    bld.add_row(leaf, ">=", shift)
    if price:
        bld.objective([(x, 1)], "min")
        return bld, xi, x
    absv = bld.add_vars(d, lb=0)
    for i in range(d):
        bld.add_row([(xi[i], 1), (absv[i], -1)], "<=", 0)
        bld.add_row([(xi[i], -1), (absv[i], -1)], "<=", 0)
    bld.objective([(v, 1) for v in absv], "min")
    return bld, xi, None


def _replication_separable(d: int, eps) -> ReplicationResult:
    bld, xi, _ = separable_problem(d, eps)
    sol = lp.solve(bld.build())
    if sol.status != "optimal":
        return ReplicationResult(d, "separable", sol.status, None, None, None)
    v = np.asarray(sol.x[xi], dtype=float)
    return ReplicationResult(d, "separable", "optimal", v, float(np.abs(v[1:]).sum()), float(np.abs(v).sum()))


def replication_lp(d: int, eps, method: str = "auto") -> ReplicationResult:
    """Minimal-norm replication of ``h`` at truncation ``d`` ("tree", "separable" or "auto")."""
    if method == "auto":
        method = "tree" if d <= TREE_LP_MAX_D else "separable"
    if method == "tree":
        if 2 ** (d - 1) > node_budget():
            raise InputError(f"{2 ** (d - 1)} leaves exceed the node budget {node_budget()}")
        return _replication_tree(d, eps)
    if method == "separable":
        return _replication_separable(d, eps)
    raise InputError(f"unknown method {method!r}")


def gn_price(d: int, eps, n: int, method: str = "auto") -> float:
    """Superhedging price at time 0 of the cash claim ``h - 1/n``."""
    if method == "auto":
        method = "tree" if d <= TREE_LP_MAX_D else "separable"
    if method == "tree":
        tree = build_counterexample(CounterexampleConfig(d, n=n), exact=False)
        res = superhedge_price(tree, claim_h(tree, eps, shift=1.0 / n))
        return float(res.price)
    bld, _, x = separable_problem(d, eps, shift=-1.0 / n, price=True)
    sol = lp.solve(bld.build())
    return float(sol.value)


def na2_on_counterexample(d: int, method: str = "both", mode: str = "exact"):
    if d > NA2_MAX_D:
        raise InputError(f"NA2 check limited to d <= {NA2_MAX_D}")
    tree = build_counterexample(CounterexampleConfig(d), exact=mode == "exact")
    return check_na2(tree, method=method, mode=mode)


def perturbed_counterexample(exact: bool = True) -> ScenarioTree:
    """Negative control: d=2, frictionless time 1 and deterministic growth ``S^2_1 = 3/2``."""
    base = build_counterexample(CounterexampleConfig(2), exact=exact)
    conv = (lambda v: v) if exact else float
    cone1 = ConeSpec([[conv(Fraction(0))] * 2] * 2, exact=exact)
    S = np.array([conv(Fraction(1)), conv(Fraction(3, 2))], dtype=object if exact else float)
    nodes = [base[0], Node(1, 1, 0, conv(Fraction(1)), S, cone1)]
    return ScenarioTree(2, 1, nodes, exact)


def replication_norm_sweep(eps, d_list, n: int = 10) -> list[dict]:
    """Per ``d``: minimal replication norms, the analytic partial sum and the NA2 verdict (``d <= 5``)."""
    rows = []
    for d in d_list:
        res = replication_lp(d, eps)
        row = {
            "d": d,
            "method": res.method,
            "status": res.status,
            "lp_min_norm": res.integrand_norm,
            "transfer_norm": res.transfer_norm,
            "oracle_partial_sum": oracle_norm(d, eps),
            "gn_price": gn_price(d, eps, n),
            "na2_verdict": None,
        }
        if d <= NA2_MAX_D:
            row["na2_verdict"] = "holds" if na2_on_counterexample(d, mode="float").holds else "fails"
        rows.append(row)
    return rows
