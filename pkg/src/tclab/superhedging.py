"""Superhedging prices of terminal claims, primal and dual.

The price at node ``u`` is quoted in asset-1 money at ``u``:

    min x  s.t.  x e_1 S^1_T/S^1_u + V_T - g in K_T at every leaf under u

over admissible strategies on the subtree. The dual LP maximizes
``sum_leaves (p_leaf/p_u) Z_T . g`` over relaxed price systems (``Z`` in the
closed dual cones, martingale) normalized by ``Z_1(u) = 1``. Relaxing
"nonzero" to the closed cone does not change the supremum on a finite tree:
mixing any optimal system with a small multiple of a nonzero one stays
feasible and moves the objective arbitrarily little.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lp
from .market import Claim, HedgeBlock, ScenarioTree, Strategy
from .numeric import EPS_FEAS, jsonable
from .pricing import PriceSystem, dual_cone_rows, dual_system_block, find_cps

EPS_DUAL = 1e-7


@dataclass
class HedgeResult:
    status: str  # "ok" or "arbitrage"
    price: object = None
    strategy: Optional[Strategy] = None
    dual_value: object = None
    dual_system: Optional[PriceSystem] = None
    gap: object = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "price": jsonable(self.price),
            "dual_value": jsonable(self.dual_value),
            "gap": jsonable(self.gap),
            "strategy": self.strategy.to_json() if self.strategy else None,
            "dual_system": self.dual_system.to_json() if self.dual_system else None,
        }


def _mode(tree, mode):
    return mode or ("exact" if tree.exact else "float")


def _start(tree: ScenarioTree, node: Optional[int], t0: Optional[int]) -> int:
    u = tree.root if node is None else node
    if t0 is not None and tree[u].t != t0:
        raise ValueError(f"node {u} is at time {tree[u].t}, not t0={t0}")
    return u


def primal_price(tree: ScenarioTree, claim: Claim, node: Optional[int] = None, mode: Optional[str] = None):
    """``(status, price, strategy)`` of the primal LP."""
    mode = _mode(tree, mode)
    u = _start(tree, node, None)
    bld = lp.LpBuilder(exact=mode == "exact")
    x = bld.add_vars(1, lb=None)[0]
    hb = HedgeBlock(bld, tree, u)
    S1 = tree[u].S[0]
    hb.terminal(extra=lambda leaf: [[(x, tree[leaf].S[0] / S1)]] + [[] for _ in range(tree.d - 1)],
                rhs=lambda leaf: claim.at(tree, leaf))
    bld.objective([(x, 1)], "min")
    sol = lp.solve(bld.build(), mode=mode)
    if sol.status == "unbounded":
        return "arbitrage", -np.inf, None
    if sol.status != "optimal":
        raise lp.LpError(f"superhedging LP returned {sol.status}")
    return "ok", sol.x[x], hb.strategy(sol.x)


def dual_price(tree: ScenarioTree, claim: Claim, node: Optional[int] = None, mode: Optional[str] = None):
    """``(status, value, PriceSystem)`` of the dual LP; status ``"arbitrage"`` if it is infeasible."""
    mode = _mode(tree, mode)
    u = _start(tree, node, None)
    bld = lp.LpBuilder(exact=mode == "exact")
    Z = dual_system_block(bld, tree, u)
    dual_cone_rows(bld, tree, Z)
    bld.add_row([(Z[u][0], 1)], "=", 1)
    pu = tree[u].p
    terms = []
    for leaf in tree.leaves_under(u):
        g = claim.at(tree, leaf)
        w = tree[leaf].p / pu
        terms.extend((Z[leaf][i], w * g[i]) for i in range(tree.d) if g[i])
    bld.objective(terms, "max")
    sol = lp.solve(bld.build(), mode=mode)
    if sol.status == "infeasible":
        return "arbitrage", -np.inf, None
    if sol.status == "unbounded":
        return "unbounded", np.inf, None
    ps = PriceSystem({n: np.asarray(sol.x[idx]) for n, idx in Z.items()}, tree[u].t, u)
    return "ok", sol.value, ps


def superhedge_price(tree: ScenarioTree, claim: Claim, node: Optional[int] = None, t0: Optional[int] = None,
                     mode: Optional[str] = None, dual_only: bool = False) -> HedgeResult:
    """Superhedging price at ``node`` (default: the root) with primal strategy and optimal dual system."""
    u = _start(tree, node, t0)
    d_status, d_value, ps = dual_price(tree, claim, u, mode)
    if dual_only:
        status = "arbitrage" if d_status == "arbitrage" else "ok"
        return HedgeResult(status, dual_value=d_value, dual_system=ps)
    p_status, price, strategy = primal_price(tree, claim, u, mode)
    if p_status == "arbitrage":
        return HedgeResult("arbitrage", price, None, d_value, None)
    return HedgeResult("ok", price, strategy, d_value, ps, price - d_value)


@dataclass
class Attainability:
    attainable: bool
    price: object
    strategy: Optional[Strategy] = None
    dual_system: Optional[PriceSystem] = None
    dual_value: object = None


def attainability(tree: ScenarioTree, claim: Claim, node: Optional[int] = None, t0: Optional[int] = None,
                  mode: Optional[str] = None, eps: float = EPS_FEAS) -> Attainability:
    """Is ``g`` hedgeable from zero endowment?

    Returns the hedging strategy, or a price system with nonzero components
    and positive claim value ``E[Z_T . g]``.
    """
    mode = _mode(tree, mode)
    res = superhedge_price(tree, claim, node, t0, mode)
    if res.status == "arbitrage":
        return Attainability(True, res.price)
    ok = (res.price <= 0) if mode == "exact" else (res.price <= eps)
    if ok:
        return Attainability(True, res.price, strategy=res.strategy)
    ps, value = _nonzero_certificate(tree, claim, res.dual_system, res.dual_value, mode)
    return Attainability(False, res.price, dual_system=ps, dual_value=value)


def _claim_value(tree: ScenarioTree, claim: Claim, ps: PriceSystem):
    pu = tree[ps.root].p
    return sum((tree[leaf].p / pu) * np.asarray(ps.Z[leaf]).dot(claim.at(tree, leaf))
               for leaf in tree.leaves_under(ps.root))


def _nonzero_certificate(tree, claim, ps, value, mode):
    """Push an optimal relaxed system off the boundary by mixing in a little of a lax CPS.

    ``Z + alpha Y`` keeps a positive claim value for ``alpha = value / (2 (|E[Y.g]| + 1))``.
    """
    exact = mode == "exact"
    if all(v > 0 for z in ps.Z.values() for v in z):
        return ps, value
    lax = find_cps(tree, t0=tree[ps.root].t, node=ps.root, mode=mode)
    if not lax.found:
        return ps, value
    y_value = _claim_value(tree, claim, lax.system)
    alpha = value / (2 * (abs(y_value) + 1))
    Z = {n: np.asarray(ps.Z[n]) + alpha * np.asarray(lax.system.Z[n]) for n in ps.Z}
    mixed = PriceSystem(Z, ps.t0, ps.root)
    mixed.margin = min(min(v) for v in Z.values())
    return mixed, _claim_value(tree, claim, mixed) if exact else float(_claim_value(tree, claim, mixed))
