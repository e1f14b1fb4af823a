"""No-arbitrage of the second kind (NA2) on a finite tree, decided two ways.

At a node ``u`` let ``C(u)`` be the set of positions ``eta`` that some
admissible strategy on the subtree of ``u`` drives into the terminal
solvency cones: ``eta S_T/S_u + V_T in K_T`` at every leaf. Immediate
liquidation gives ``K(u) in C(u)``; NA2 at ``u`` is the reverse inclusion.

*Primal method.* ``C(u)`` is a polyhedral cone. Because ``K'(u)`` is pointed
(it lies in the nonnegative orthant), ``C(u) in K(u)`` holds iff every
extreme ray ``z`` of ``K'(u)`` is nonnegative on ``C(u)``; the box
``|eta|_inf <= 1`` meets every direction of ``C(u)``, so the sign of
``min {z.eta : eta in C(u), |eta|_inf <= 1}`` decides it.

*Dual method.* The dual of ``C(u)`` is the set of root values of relaxed
price systems (``Z`` in the closed dual cones, martingale). NA2 at ``u``
holds iff every extreme ray of ``K'(u)`` is such a root value, and then a
consistent price system with nonzero values exists as well.

The verdict reported for a node covers its whole subtree: it holds iff the
local inclusion holds at the node and at all of its descendants.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .cones import ConeCertificate, extreme_rays_dual, in_solvency_cone
from .market import HedgeBlock, ScenarioTree, Strategy, portfolio_value
from .numeric import EPS_FEAS, InputError, as_vector, jsonable
from .pricing import dual_cone_rows, dual_system_block, find_cps, relaxed_anchor_feasible

METHODS = ("primal", "dual", "both")


@dataclass
class Witness:
    node: int
    eta: np.ndarray
    strategy: Strategy

    @classmethod
    def from_json(cls, data: dict) -> "Witness":
        xi = {int(k): np.asarray(v, dtype=float) for k, v in data["strategy"]["xi"].items()}
        return cls(data["node"], np.asarray(data["eta"], dtype=float), Strategy(xi, data["strategy"]["t0"]))

    def to_json(self) -> dict:
        return {"node": self.node, "eta": jsonable(self.eta), "strategy": self.strategy.to_json()}


@dataclass
class NodeVerdict:
    node: int
    t: int
    local: bool  # inclusion at this node only
    holds: bool  # inclusion at this node and every descendant
    witness: Optional[Witness] = None
    detail: dict = field(default_factory=dict)


@dataclass
class Na2Report:
    method: str
    nodes: dict  # node id -> NodeVerdict (or a pair for method "both")
    agree: Optional[bool] = None
    timings: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.verdict(n) for n in self.nodes)

    def verdict(self, node: int) -> bool:
        v = self.nodes[node]
        if isinstance(v, tuple):
            return v[0].holds and v[1].holds
        return v.holds

    def witness(self) -> Optional[Witness]:
        for v in self.nodes.values():
            for item in (v if isinstance(v, tuple) else (v,)):
                if item.witness is not None:
                    return item.witness
        return None

    def to_json(self) -> dict:
        def one(v: NodeVerdict):
            return {"t": v.t, "local": v.local, "holds": v.holds,
                    "witness": v.witness.to_json() if v.witness else None,
                    "detail": jsonable(v.detail)}

        out = {}
        for n, v in sorted(self.nodes.items()):
            if isinstance(v, tuple):
                out[str(n)] = {"primal": one(v[0]), "dual": one(v[1])}
            else:
                out[str(n)] = one(v)
        w = self.witness()
        return {"method": self.method, "holds": self.holds, "agree": self.agree,
                "witness": w.to_json() if w else None, "nodes": out}


def _mode(tree, mode):
    return mode or ("exact" if tree.exact else "float")


def _rays(tree: ScenarioTree, u: int, exact: bool):
    return extreme_rays_dual(tree[u].cone, as_float=not exact)


def _subtree_verdicts(tree: ScenarioTree, local: dict) -> dict:
    """``holds(u) = local(u) and holds(children)``, evaluated from the leaves up."""
    holds = {}
    for n in sorted(tree.nodes, key=lambda k: -tree[k].t):
        holds[n] = local[n] and all(holds[c] for c in tree.children(n))
    return holds


def attainable_block(tree: ScenarioTree, u: int, exact: bool):
    """LP with ``eta`` in ``[-1, 1]^d`` and an admissible strategy making ``eta`` terminally solvent."""
    bld = lp.LpBuilder(exact=exact)
    eta = bld.add_vars(tree.d, lb=-1, ub=1)
    hb = HedgeBlock(bld, tree, u)
    S_u = tree[u].S
    hb.terminal(extra=lambda leaf: [[(eta[i], tree[leaf].S[i] / S_u[i])] for i in range(tree.d)])
    return bld, eta, hb


def _primal_local(tree: ScenarioTree, u: int, mode: str, eps: float):
    exact = mode == "exact"
    if tree.is_leaf(u):
        return True, None, {"min_value": 0}
    worst = None
    for z in _rays(tree, u, exact):
        bld, eta, hb = attainable_block(tree, u, exact)
        bld.objective([(eta[i], z[i]) for i in range(tree.d)], "min")
        sol = lp.solve(bld.build(), mode=mode)
        if sol.status != "optimal":
            raise lp.LpError(f"attainable-set LP at node {u} returned {sol.status}")
        if worst is None or sol.value < worst[0]:
            worst = (sol.value, sol.x, hb, eta, z)
        if (sol.value < 0) if exact else (sol.value < -eps):
            break
    value, x, hb, eta, z = worst
    fails = (value < 0) if exact else (value < -eps)
    detail = {"min_value": value, "ray": z}
    if not fails:
        return True, None, detail
    w = Witness(u, np.asarray(x[eta]), hb.strategy(x))
    return False, w, detail


def check_na2_primal(tree: ScenarioTree, mode: Optional[str] = None, eps: float = EPS_FEAS) -> Na2Report:
    """Decide NA2 at every node from the attainable-position cones."""
    mode = _mode(tree, mode)
    start = time.perf_counter()
    local, info = {}, {}
    for u in sorted(tree.nodes, key=lambda k: -tree[k].t):
        ok, w, detail = _primal_local(tree, u, mode, eps)
        local[u], info[u] = ok, (w, detail)
    holds = _subtree_verdicts(tree, local)
    nodes = {u: NodeVerdict(u, tree[u].t, local[u], holds[u], info[u][0], info[u][1]) for u in sorted(tree.nodes)}
    return Na2Report("primal", nodes, timings={"primal": time.perf_counter() - start})


def _dual_witness(tree: ScenarioTree, u: int, z, mode: str) -> Optional[Witness]:
    """Recover an arbitrage from an infeasible anchored dual system.

    The Farkas multipliers of the anchor rows give a direction ``eta`` with
    ``z.eta < 0`` that lies in ``C(u)``; a feasibility LP supplies the strategy.
    """
    exact = mode == "exact"
    sol = relaxed_anchor_feasible(tree, u, z, mode=mode)
    if sol.dual is None:
        return None
    y = np.asarray(sol.dual)
    nrows = _anchor_row_offset(tree, u)
    alpha = y[nrows: nrows + tree.d]
    direction = -alpha
    scale = max(abs(v) for v in direction)
    if not scale:
        return None
    direction = direction / scale
    bld = lp.LpBuilder(exact=exact)
    hb = HedgeBlock(bld, tree, u)
    S_u = tree[u].S
    hb.terminal(rhs=lambda leaf: -direction * (tree[leaf].S / S_u))
    res = lp.solve(bld.build(), mode=mode)
    if res.status != "optimal":
        return None
    return Witness(u, direction, hb.strategy(res.x))


def _anchor_row_offset(tree: ScenarioTree, u: int) -> int:
    """Number of rows preceding the anchor rows in :func:`relaxed_anchor_feasible`."""
    nodes = tree.subtree(u)
    mart = sum(tree.d for n in nodes if tree.children(n))
    cone = sum(len(tree[n].cone.pairs()) for n in nodes)
    return mart + cone


def check_na2_dual(tree: ScenarioTree, mode: Optional[str] = None, eps: float = EPS_FEAS) -> Na2Report:
    """Decide NA2 at every node from anchored price systems."""
    mode = _mode(tree, mode)
    start = time.perf_counter()
    local, info = {}, {}
    for u in sorted(tree.nodes, key=lambda k: -tree[k].t):
        bad_ray = None
        if not tree.is_leaf(u):
            for z in _rays(tree, u, mode == "exact"):
                if relaxed_anchor_feasible(tree, u, z, mode=mode).status != "optimal":
                    bad_ray = z
                    break
        cps = find_cps(tree, t0=tree[u].t, node=u, mode=mode)
        local[u] = bad_ray is None
        witness = _dual_witness(tree, u, bad_ray, mode) if bad_ray is not None else None
        info[u] = (witness, {"cps_exists": cps.found, "cps_margin": cps.margin,
                             "unreachable_ray": bad_ray})
    holds = _subtree_verdicts(tree, local)
    nodes = {}
    for u in sorted(tree.nodes):
        w, detail = info[u]
        # a subtree free of arbitrage must also carry a consistent price system
        verdict = holds[u] and detail["cps_exists"]
        detail["cps_consistent"] = (not holds[u]) or detail["cps_exists"]
        nodes[u] = NodeVerdict(u, tree[u].t, local[u], verdict, w, detail)
    return Na2Report("dual", nodes, timings={"dual": time.perf_counter() - start})


def check_na2(tree: ScenarioTree, method: str = "both", mode: Optional[str] = None,
              eps: float = EPS_FEAS) -> Na2Report:
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "primal":
        return check_na2_primal(tree, mode, eps)
    if method == "dual":
        return check_na2_dual(tree, mode, eps)
    p = check_na2_primal(tree, mode, eps)
    d = check_na2_dual(tree, mode, eps)
    nodes = {u: (p.nodes[u], d.nodes[u]) for u in p.nodes}
    agree = all(p.nodes[u].holds == d.nodes[u].holds and p.nodes[u].local == d.nodes[u].local
                for u in p.nodes)
    return Na2Report("both", nodes, agree, {**p.timings, **d.timings})


def terminal_positions(tree: ScenarioTree, u: int, eta, strategy: Strategy) -> dict:
    """``eta S_T/S_u + V_T`` at every leaf under ``u`` (strategy restricted to the subtree)."""
    eta = as_vector(eta, tree.exact)
    before = set(tree.path(u)[:-1])
    local = Strategy({k: v for k, v in strategy.xi.items() if k not in before}, t0=tree[u].t)
    return {leaf: eta * tree.growth(u, leaf) + portfolio_value(tree, local, leaf)
            for leaf in tree.leaves_under(u)}


def validate_witness(tree: ScenarioTree, w: Witness, tol: float = 1e-7) -> dict:
    """Re-check a witness by membership tests alone: ``eta`` outside ``K(u)``,
    strategy admissible, terminal positions solvent."""
    cone = tree[w.node].cone
    eta_in = _member_by_rays(cone, w.eta, tol)
    admissible = all(
        _member_by_rays(tree[n].cone, -np.asarray(w.strategy.at(tree, n)), tol)
        for n in tree.subtree(w.node))
    terminal = all(_member_by_rays(tree[leaf].cone, v, tol)
                   for leaf, v in terminal_positions(tree, w.node, w.eta, w.strategy).items())
    return {"eta_outside": not eta_in, "admissible": admissible, "terminal_solvent": terminal,
            "valid": (not eta_in) and admissible and terminal}


def _member_by_rays(cone, x, tol):
    x = np.asarray(x)
    if x.dtype == object and cone.exact:
        return all(np.dot(r, x) >= 0 for r in extreme_rays_dual(cone))
    xf = x.astype(float)
    scale = 1.0 + float(np.abs(xf).max(initial=0.0))
    return all(float(np.dot(r, xf)) >= -tol * scale for r in extreme_rays_dual(cone, as_float=True))


def is_na2_witness(tree: ScenarioTree, u: int, eta, mode: Optional[str] = None):
    """Does some admissible strategy make ``eta`` (outside ``K(u)``) terminally solvent?

    Returns ``(bool, Witness or None)``; the strategy comes from a feasibility LP.
    """
    mode = _mode(tree, mode)
    exact = mode == "exact"
    eta = as_vector(eta, exact)
    if in_solvency_cone(tree[u].cone, eta, mode=mode)[0]:
        return False, None
    bld = lp.LpBuilder(exact=exact)
    hb = HedgeBlock(bld, tree, u)
    S_u = tree[u].S
    hb.terminal(rhs=lambda leaf: -eta * (tree[leaf].S / S_u))
    sol = lp.solve(bld.build(), mode=mode)
    if sol.status != "optimal":
        return False, None
    return True, Witness(u, eta, hb.strategy(sol.x))


def attainable_anchor_min(tree: ScenarioTree, u: int, xi, mode: Optional[str] = None):
    """``min {z.xi : z a relaxed price-system root value at u, |z|_inf <= 1}``."""
    mode = _mode(tree, mode)
    exact = mode == "exact"
    xi = as_vector(xi, exact)
    bld = lp.LpBuilder(exact=exact)
    Z = dual_system_block(bld, tree, u)
    dual_cone_rows(bld, tree, Z)
    for i in range(tree.d):
        bld.set_bounds(int(Z[u][i]), 0, 1)
    bld.objective([(Z[u][i], xi[i]) for i in range(tree.d)], "min")
    sol = lp.solve(bld.build(), mode=mode)
    return sol.value, np.asarray(sol.x[Z[u]])


def check_condition_b(tree: ScenarioTree, u: int, xi, na2_holds: Optional[bool] = None,
                      mode: Optional[str] = None, eps: float = EPS_FEAS) -> dict:
    """Evaluate the implication "nonnegative on all price-system anchors => solvent" at ``u``."""
    mode = _mode(tree, mode)
    if na2_holds is None:
        na2_holds = check_na2_primal(tree, mode, eps).verdict(u)
    m, z = attainable_anchor_min(tree, u, xi, mode)
    antecedent = (m >= 0) if mode == "exact" else (m >= -eps)
    consequent, _ = in_solvency_cone(tree[u].cone, xi, mode=mode)
    implication = (not antecedent) or consequent
    return {"min_value": m, "minimizer": z, "antecedent": bool(antecedent), "consequent": bool(consequent),
            "implication": bool(implication), "na2": bool(na2_holds),
            "consistent": bool(implication or not na2_holds)}


def max_terminal_gain(tree: ScenarioTree, c, mode: Optional[str] = None):
    """``sup sum_leaves c.V_T`` over admissible strategies from the root with ``V_T`` solvent.

    Returns ``inf`` when unbounded (an arbitrage of the first kind).
    """
    mode = _mode(tree, mode)
    exact = mode == "exact"
    c = as_vector(c, exact)
    bld = lp.LpBuilder(exact=exact)
    hb = HedgeBlock(bld, tree, tree.root, leaf_trades=True)
    hb.terminal()
    terms = []
    for leaf in hb.leaves:
        G = tree[leaf].cone.generators()
        for k, j in enumerate(hb.w[leaf]):
            coef = sum(c[i] * G[i, k] for i in range(tree.d))
            if coef:
                terms.append((j, coef))
    bld.objective(terms, "max")
    sol = lp.solve(bld.build(), mode=mode)
    if sol.status == "unbounded":
        return float("inf")
    return sol.value


__all__ = [
    "ConeCertificate", "Na2Report", "NodeVerdict", "Witness", "check_na2", "check_na2_primal",
    "check_na2_dual", "check_condition_b", "is_na2_witness", "max_terminal_gain", "validate_witness",
    "terminal_positions", "attainable_anchor_min",
]
