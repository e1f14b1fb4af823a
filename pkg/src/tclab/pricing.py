"""Consistent price systems on a scenario tree.

A consistent price system (CPS) on the subtree of ``u`` is an adapted ``Z``
with ``Z(n)`` in the dual cone ``K'(n)`` and the martingale property
``p_n Z(n) S(n) = sum_c p_c Z(c) S(c)`` (componentwise, over children ``c``).
It is *lax* when every ``Z(n)`` is nonzero, which inside ``K'`` means every
component is positive, and *strict* when every ``Z(n)`` is interior.

Both strict inequalities are encoded by a margin ``m`` that the LP
maximizes; a system counts as found when ``m > EPS_STRICT``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .cones import in_dual_cone, in_solvency_cone, interior_margin
from .market import ScenarioTree, Strategy, portfolio_value
from .numeric import EPS_FEAS, InputError, as_vector, jsonable

EPS_STRICT = 1e-7


@dataclass
class PriceSystem:
    Z: dict
    t0: int
    root: int
    margin: object = None  # min over nodes of min_i Z_i
    strict_margin: object = None  # min over nodes of the interior margin
    strict: bool = False

    def validate(self, tree: ScenarioTree, eps: float = EPS_FEAS, anchor=None) -> list[str]:
        """Re-check every invariant directly (no LP); returns the violations found."""
        out = []
        nodes = tree.subtree(self.root)
        missing = [n for n in nodes if n not in self.Z]
        if missing:
            return [f"Z undefined at nodes {missing}"]
        exact = tree.exact and all(np.asarray(v).dtype == object for v in self.Z.values())
        for n in nodes:
            z = as_vector(self.Z[n], exact)
            cone = tree[n].cone.converted(exact)
            if not in_dual_cone(cone, z, eps=eps):
                out.append(f"node {n}: Z not in the dual cone")
            if self.strict:
                if not _positive(interior_margin(cone, z), exact, eps):
                    out.append(f"node {n}: Z not interior to the dual cone")
            elif not all(_positive(v, exact, eps) for v in z):
                out.append(f"node {n}: Z has a zero component")
        for n in nodes:
            kids = tree.children(n)
            if not kids:
                continue
            node = tree[n]
            lhs = as_vector(self.Z[n], exact) * as_vector(node.S, exact) * as_vector([node.p], exact)[0]
            rhs = sum(as_vector(self.Z[c], exact) * as_vector(tree[c].S, exact) * as_vector([tree[c].p], exact)[0]
                      for c in kids)
            gap = lhs - rhs
            scale = 1.0 + float(np.abs(lhs.astype(float)).max())
            if exact and any(gap):
                out.append(f"node {n}: martingale property violated")
            elif not exact and float(np.abs(gap.astype(float)).max()) > eps * scale:
                out.append(f"node {n}: martingale property violated")
        if anchor is not None:
            node_id, eta = anchor
            diff = as_vector(self.Z[node_id], exact) - as_vector(eta, exact)
            if exact and any(diff):
                out.append(f"node {node_id}: anchor not matched")
            elif not exact and float(np.abs(diff.astype(float)).max()) > eps:
                out.append(f"node {node_id}: anchor not matched")
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PriceSystem":
        Z = {int(k): np.asarray(v, dtype=float) for k, v in data["Z"].items()}
        return cls(Z, data["t0"], data["root"], data.get("margin"), data.get("strict_margin"),
                   data.get("strict", False))

    def to_json(self) -> dict:
        return {
            "t0": self.t0,
            "root": self.root,
            "strict": self.strict,
            "margin": jsonable(self.margin),
            "strict_margin": jsonable(self.strict_margin),
            "Z": {str(k): jsonable(v) for k, v in sorted(self.Z.items())},
        }


def _positive(v, exact, eps):
    return v > 0 if exact else float(v) > eps


@dataclass
class CpsResult:
    found: bool
    system: Optional[PriceSystem] = None
    margin: object = None  # optimal LP margin (None when the relaxed system is infeasible)
    certificate: Optional[np.ndarray] = None  # Farkas ray when not found
    problem: Optional[lp.LpProblem] = field(default=None, repr=False)


def dual_system_block(bld: lp.LpBuilder, tree: ScenarioTree, u: int) -> dict:
    """Variables ``Z(n) >= 0`` on the subtree of ``u`` with the martingale equalities."""
    Z = {n: bld.add_vars(tree.d, lb=0) for n in tree.subtree(u)}
    for n in Z:
        kids = tree.children(n)
        if not kids:
            continue
        node = tree[n]
        for i in range(tree.d):
            terms = [(Z[n][i], node.p * node.S[i])]
            terms += [(Z[c][i], -tree[c].p * tree[c].S[i]) for c in kids]
            bld.add_row(terms, "=", 0)
    return Z


def dual_cone_rows(bld: lp.LpBuilder, tree: ScenarioTree, Z: dict, margin_var=None, strict=False):
    """``Lam_ij Z_i - Z_j >= 0`` at every node; with a margin variable, ``>= m`` (strict)
    or ``Z_i >= m`` (lax)."""
    for n, z in Z.items():
        cone = tree[n].cone
        L = cone.Lam
        for i, j in cone.pairs():
            terms = [(z[i], L[i, j]), (z[j], -1)]
            if margin_var is not None and strict:
                terms.append((margin_var, -1))
            bld.add_row(terms, ">=", 0)
        if margin_var is not None and (not strict or cone.d == 1):
            for i in range(tree.d):
                bld.add_row([(z[i], 1), (margin_var, -1)], ">=", 0)


def _mode(tree, mode):
    return mode or ("exact" if tree.exact else "float")


def find_cps(tree: ScenarioTree, t0: int = 0, strict: bool = False, anchor=None,
             node: Optional[int] = None, mode: Optional[str] = None) -> CpsResult:
    """Search a (strictly) consistent price system on the subtree of one time-``t0`` node.

    The subtree root is the anchor node, else ``node``, else the unique node
    at time ``t0``. Without an anchor ``Z_1 = 1`` at the root; with an anchor
    ``(node, eta)`` the root value is ``eta`` (which must be interior).
    """
    mode = _mode(tree, mode)
    exact = mode == "exact"
    if anchor is not None:
        u, eta = anchor
        eta = as_vector(eta, exact)
        if interior_margin(tree[u].cone, eta) <= 0:
            raise InputError("anchor is not an interior point of the dual cone")
        scale = max(abs(v) for v in eta)
        eta_n = eta / scale
    else:
        u = node
        if u is None:
            roots = tree.at_time(t0)
            if len(roots) != 1:
                raise InputError(f"{len(roots)} nodes at time {t0}; pass node= to choose a subtree")
            u = roots[0]
        scale = 1
    if tree[u].t != t0:
        raise InputError(f"node {u} is at time {tree[u].t}, not t0={t0}")

    def build(lower):
        bld = lp.LpBuilder(exact=exact)
        Z = dual_system_block(bld, tree, u)
        m = bld.add_vars(1, lb=lower, ub=1)[0]
        dual_cone_rows(bld, tree, Z, margin_var=m, strict=strict)
        if anchor is not None:
            for i in range(tree.d):
                bld.add_row([(Z[u][i], 1)], "=", eta_n[i])
        else:
            bld.add_row([(Z[u][0], 1)], "=", 1)
        bld.objective([(m, 1)], "max")
        return bld.build(), Z

    problem, Z = build(None)
    sol = lp.solve(problem, mode=mode)
    if sol.status != "optimal":
        return CpsResult(False, certificate=sol.dual, problem=problem)
    margin = sol.value
    if margin <= EPS_STRICT:
        # certify: the system with margin >= EPS_STRICT is infeasible
        cert_problem, _ = build(EPS_STRICT)
        cert = lp.solve(cert_problem, mode=mode)
        return CpsResult(False, margin=margin, certificate=cert.dual, problem=cert_problem)
    values = {n: np.asarray(sol.x[idx]) * scale for n, idx in Z.items()}
    if anchor is not None:
        values[u] = as_vector(anchor[1], exact)
    system = PriceSystem(values, t0, u, strict=strict)
    system.margin = min(min(v) for v in values.values())
    system.strict_margin = min(interior_margin(tree[n].cone, v) for n, v in values.items())
    return CpsResult(True, system, margin * scale, problem=problem)


def relaxed_anchor_feasible(tree: ScenarioTree, u: int, z, mode: Optional[str] = None):
    """Is there ``Z`` on the subtree of ``u`` with ``Z(u) = z``, ``Z`` in ``K'`` and the martingale property?

    Returns the :class:`~tclab.lp.LpSolution` of the feasibility LP.
    """
    mode = _mode(tree, mode)
    bld = lp.LpBuilder(exact=mode == "exact")
    Z = dual_system_block(bld, tree, u)
    dual_cone_rows(bld, tree, Z)
    for i in range(tree.d):
        bld.add_row([(Z[u][i], 1)], "=", z[i])
    sol = lp.solve(bld.build(), mode=mode)
    sol.info["Z"] = Z
    return sol


def mix(lax: PriceSystem, strict_ps: PriceSystem, alpha) -> PriceSystem:
    """``lax + alpha * strict``: the mixture is again a strict system (for ``alpha > 0``)."""
    Z = {n: np.asarray(lax.Z[n]) + alpha * np.asarray(strict_ps.Z[n]) for n in lax.Z}
    return PriceSystem(Z, lax.t0, lax.root, strict=True)


@dataclass
class SupermartingaleReport:
    ok: bool
    violations: list
    preconditions: list
    min_slack: float
    rows: list  # per node: (node, left, middle, right)

    @property
    def chain_ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "chain_ok": self.chain_ok, "violations": self.violations, "preconditions": self.preconditions,
                "min_slack": self.min_slack,
                "rows": [{"node": n, "left": jsonable(a), "middle": jsonable(b), "right": jsonable(c)}
                         for n, a, b, c in self.rows]}


def verify_supermartingale(tree: ScenarioTree, strategy: Strategy, ps: PriceSystem, eta=None,
                           tol: float = 1e-9) -> SupermartingaleReport:
    """Check ``Z_s . W_{s-1} S_s/S_{s-1} >= Z_s . W_s >= E[Z_{s+1} . W_{s+1} | F_s]`` on the subtree.

    ``W = eta S/S_t0 + V`` is the wealth started with endowment ``eta`` at the
    subtree root (at the root the left term uses ``eta``). At the leaves the
    right term is ``0`` (terminal solvency gives ``Z_T . W_T >= 0``).
    Preconditions (admissibility, terminal solvency) are checked and reported.
    """
    u = ps.root
    d = tree.d
    eta = as_vector([0] * d if eta is None else eta, tree.exact)
    nodes = tree.subtree(u)
    root_S = tree[u].S
    pre_path = set(tree.path(u)[:-1])
    local = Strategy({k: v for k, v in strategy.xi.items() if k not in pre_path}, t0=tree[u].t)

    def wealth(n):
        return eta * (tree[n].S / root_S) + portfolio_value(tree, local, n)

    preconditions = []
    for n in nodes:
        xi = local.at(tree, n)
        if any(xi) and not in_solvency_cone(tree[n].cone, -xi)[0]:
            preconditions.append(f"node {n}: strategy not admissible")
    for leaf in tree.leaves_under(u):
        if not in_solvency_cone(tree[leaf].cone, wealth(leaf))[0]:
            preconditions.append(f"leaf {leaf}: terminal wealth not solvent")

    W = {n: wealth(n) for n in nodes}
    Zv = {n: as_vector(ps.Z[n], tree.exact) for n in nodes}
    rows, violations = [], []
    min_slack = float("inf")
    for n in nodes:
        node = tree[n]
        prev = eta if n == u else W[node.parent] * (node.S / tree[node.parent].S)
        left = Zv[n].dot(prev)
        middle = Zv[n].dot(W[n])
        kids = tree.children(n)
        right = sum((tree[c].p / node.p) * Zv[c].dot(W[c]) for c in kids) if kids else 0 * middle
        rows.append((n, left, middle, right))
        scale = 1.0 + max(abs(float(left)), abs(float(middle)), abs(float(right)))
        for name, s in (("left>=middle", left - middle), ("middle>=right", middle - right)):
            s = float(s)
            min_slack = min(min_slack, s)
            if s < -tol * scale:
                violations.append(f"node {n}: {name} violated by {-s:.3e}")
    return SupermartingaleReport(not violations and not preconditions, violations, preconditions,
                                 min_slack, rows)
