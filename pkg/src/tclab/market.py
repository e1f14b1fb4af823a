"""Finite scenario trees with adapted prices and cost matrices.

A market is an event tree: each node carries a time index, an absolute
probability, a strictly positive price vector ``S`` and the cost matrix of
that node (a :class:`~tclab.cones.ConeSpec`). Adapted processes are plain
maps from node id to vector, so measurability holds by construction.

Amounts are money amounts: ``x_i`` units of asset-i money at node ``n`` are
worth ``x_i * S_m,i / S_n,i`` at a descendant ``m``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import lp
from .cones import ConeError, ConeSpec, in_solvency_cone
from .numeric import InputError, as_vector, jsonable


class MarketValidationError(InputError):
    """A market spec violates one or more invariants; ``violations`` names each."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Node:
    id: int
    t: int
    parent: Optional[int]
    p: object
    S: np.ndarray
    cone: ConeSpec


class ScenarioTree:
    """Immutable event tree. Nodes are kept in ascending id order."""

    def __init__(self, d: int, T: int, nodes: Iterable[Node], exact: bool = False):
        self.d = d
        self.T = T
        self.exact = exact
        self.nodes = {n.id: n for n in sorted(nodes, key=lambda n: n.id)}
        self._children: dict[int, list[int]] = {i: [] for i in self.nodes}
        for n in self.nodes.values():
            if n.parent is not None and n.parent in self._children:
                self._children[n.parent].append(n.id)
        roots = [n.id for n in self.nodes.values() if n.parent is None]
        self.root = roots[0] if roots else None

    def __getitem__(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise InputError(f"unknown node {node_id}") from None

    def __iter__(self):
        return iter(self.nodes.values())

    def __len__(self):
        return len(self.nodes)

    def children(self, node_id: int) -> list[int]:
        return self._children[self[node_id].id]

    def is_leaf(self, node_id: int) -> bool:
        return not self.children(node_id)

    def path(self, node_id: int) -> list[int]:
        """Ancestors from the root down to ``node_id`` inclusive."""
        out = []
        cur: Optional[int] = node_id
        while cur is not None:
            out.append(cur)
            cur = self[cur].parent
        return out[::-1]

    def subtree(self, node_id: int) -> list[int]:
        """``node_id`` and all its descendants, in ascending id order."""
        out, stack = [], [node_id]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(self.children(n))
        return sorted(out)

    def leaves(self) -> list[int]:
        return [i for i in self.nodes if self.is_leaf(i)]

    def leaves_under(self, node_id: int) -> list[int]:
        return [i for i in self.subtree(node_id) if self.is_leaf(i)]

    def at_time(self, t: int) -> list[int]:
        return [n.id for n in self.nodes.values() if n.t == t]

    def growth(self, frm: int, to: int) -> np.ndarray:
        """Componentwise ``S_to / S_frm``."""
        return self[to].S / self[frm].S

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes.values():
            rec = {"id": n.id, "t": n.t, "parent": n.parent, "p": jsonable(n.p),
                   "S": jsonable(n.S), "lambda": n.cone.to_list()}
            nodes.append(rec)
        return {"d": self.d, "T": self.T, "nodes": nodes}

    def with_costs(self, factor) -> "ScenarioTree":
        """Same tree with every cost matrix scaled by ``factor``."""
        nodes = [Node(n.id, n.t, n.parent, n.p, n.S,
                      ConeSpec(n.cone.lam * factor, exact=self.exact, check=False))
                 for n in self.nodes.values()]
        return ScenarioTree(self.d, self.T, nodes, self.exact)

    def __repr__(self):
        return f"ScenarioTree(d={self.d}, T={self.T}, nodes={len(self.nodes)})"


# ---------------------------------------------------------------- ingestion

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def market_from_dict(spec: dict, exact: bool = False) -> ScenarioTree:
    """Build and validate a tree from the market-spec mapping.

    Raises :class:`MarketValidationError` listing every violated invariant.
    """
    problems: list[str] = []
    if not isinstance(spec, dict):
        raise MarketValidationError(["market spec must be a JSON object"])
    d, T = spec.get("d"), spec.get("T")
    if not _is_int(d) or d < 1:
        problems.append("'d' must be a positive integer")
    if not _is_int(T) or T < 0:
        problems.append("'T' must be a nonnegative integer")
    raw_nodes = spec.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        problems.append("'nodes' must be a nonempty list")
    if problems:
        raise MarketValidationError(problems)

    default_lam = spec.get("default_lambda")
    nodes: list[Node] = []
    seen: set = set()
    for k, rec in enumerate(raw_nodes):
        tag = f"node #{k}"
        if not isinstance(rec, dict):
            problems.append(f"{tag}: record must be an object")
            continue
        nid = rec.get("id")
        if not _is_int(nid):
            problems.append(f"{tag}: 'id' must be an integer")
            continue
        tag = f"node {nid}"
        if nid in seen:
            problems.append(f"{tag}: duplicate id")
            continue
        seen.add(nid)
        t, parent = rec.get("t"), rec.get("parent")
        if not _is_int(t) or not 0 <= t <= T:
            problems.append(f"{tag}: time must be an integer in [0, {T}]")
            continue
        if parent is not None and not _is_int(parent):
            problems.append(f"{tag}: parent must be an integer or null")
            continue
        try:
            p = as_vector([rec.get("p")], exact)[0]
            S = as_vector(rec.get("S", []), exact)
        except (InputError, TypeError, ValueError) as exc:
            problems.append(f"{tag}: {exc}")
            continue
        if S.shape[0] != d:
            problems.append(f"{tag}: S has length {S.shape[0]}, expected {d}")
            continue
        if p <= 0:
            problems.append(f"{tag}: probability must be positive")
        if any(v <= 0 for v in S):
            problems.append(f"{tag}: prices must be strictly positive")
        lam = rec.get("lambda", default_lam)
        if lam is None:
            lam = [[0] * d for _ in range(d)]
        try:
            cone = ConeSpec(lam, exact=exact, check=False)
        except (ConeError, InputError, TypeError, ValueError) as exc:
            problems.append(f"{tag}: bad cost matrix: {exc}")
            continue
        if cone.d != d:
            problems.append(f"{tag}: cost matrix has dimension {cone.d}, expected {d}")
            continue
        problems.extend(f"{tag}: {msg}" for msg in cone.violations())
        S.setflags(write=False)
        nodes.append(Node(nid, t, parent, p, S, cone))
    if problems:
        raise MarketValidationError(problems)
    tree = ScenarioTree(d, T, nodes, exact)
    problems = validate_market(tree)
    if problems:
        raise MarketValidationError(problems)
    return tree


def validate_market(tree: ScenarioTree, rtol: float = 1e-9) -> list[str]:
    """Structural invariants: single root, parent times, leaves at ``T``, probability flow."""
    out = []
    roots = [n for n in tree if n.parent is None]
    if len(roots) != 1 or roots[0].t != 0:
        out.append("exactly one root at t=0 is required")
    for n in tree:
        if n.parent is None:
            if n.t != 0:
                out.append(f"node {n.id}: parentless node at time {n.t}")
            continue
        par = tree.nodes.get(n.parent)
        if par is None:
            out.append(f"node {n.id}: unknown parent {n.parent}")
        elif par.t != n.t - 1:
            out.append(f"node {n.id}: parent {n.parent} is at time {par.t}, expected {n.t - 1}")
    if out:
        return out
    root = roots[0]
    if not _close(root.p, 1, tree.exact, rtol):
        out.append(f"root probability is {root.p}, expected 1")
    for n in tree:
        kids = tree.children(n.id)
        if not kids:
            if n.t != tree.T:
                out.append(f"node {n.id}: leaf at time {n.t} before horizon T={tree.T}")
            continue
        total = sum((tree[c].p for c in kids), 0 * n.p)
        if not _close(total, n.p, tree.exact, rtol):
            out.append(f"node {n.id}: children probabilities sum to {total}, parent has {n.p}")
    return out


def _close(a, b, exact, rtol):
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= rtol * max(1.0, abs(float(b)))


def load_market(path, exact: bool = False) -> ScenarioTree:
    """Read a market-spec JSON file. In exact mode decimals are parsed as Fractions."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        spec = json.loads(text, parse_float=Fraction if exact else float)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    return market_from_dict(spec, exact=exact)


# ---------------------------------------------------------------- strategies and claims

@dataclass
class Strategy:
    """Adapted transfers ``xi`` (node id -> vector), zero before ``t0`` and off the map."""

    xi: dict = field(default_factory=dict)
    t0: int = 0

    def at(self, tree: ScenarioTree, node_id: int) -> np.ndarray:
        n = tree[node_id]
        v = self.xi.get(node_id)
        if v is None or n.t < self.t0:
            return as_vector([0] * tree.d, tree.exact)
        v = as_vector(v, tree.exact)
        if v.shape[0] != tree.d:
            raise InputError(f"strategy vector at node {node_id} has length {v.shape[0]}")
        return v

    def to_json(self) -> dict:
        return {"t0": self.t0, "xi": {str(k): jsonable(v) for k, v in sorted(self.xi.items())}}


@dataclass
class Claim:
    """Terminal payoff ``g`` (leaf id -> vector of money amounts)."""

    g: dict

    def at(self, tree: ScenarioTree, leaf: int) -> np.ndarray:
        if leaf not in self.g:
            raise InputError(f"claim undefined at leaf {leaf}")
        v = as_vector(self.g[leaf], tree.exact)
        if v.shape[0] != tree.d:
            raise InputError(f"claim at leaf {leaf} has length {v.shape[0]}, expected {tree.d}")
        return v

    def scaled(self, c) -> "Claim":
        return Claim({k: np.asarray(v) * c for k, v in self.g.items()})


def claim_from_dict(spec: dict) -> Claim:
    g = spec.get("g") if isinstance(spec, dict) else None
    if not isinstance(g, dict):
        raise InputError("claim spec must be an object with a 'g' mapping")
    try:
        return Claim({int(k): list(v) for k, v in g.items()})
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad claim spec: {exc}") from None


def load_claim(path, exact: bool = False) -> Claim:
    text = Path(path).read_text(encoding="utf-8")
    try:
        spec = json.loads(text, parse_float=Fraction if exact else float)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    return claim_from_dict(spec)


def portfolio_value(tree: ScenarioTree, strategy: Strategy, node_id: int) -> np.ndarray:
    """``V_t = sum_{s <= t} xi_s * S_t / S_s`` along the path to ``node_id``."""
    S = tree[node_id].S
    V = as_vector([0] * tree.d, tree.exact)
    for a in tree.path(node_id):
        V = V + strategy.at(tree, a) * (S / tree[a].S)
    return V


def is_admissible(tree: ScenarioTree, strategy: Strategy, nodes=None, mode=None):
    """``(True, None)`` if ``-xi`` lies in K at every node, else ``(False, first bad node)``."""
    for nid in (tree.nodes if nodes is None else nodes):
        xi = strategy.at(tree, nid)
        if not any(xi):
            continue
        ok, _ = in_solvency_cone(tree[nid].cone, -xi, mode=mode)
        if not ok:
            return False, nid
    return True, None


# ---------------------------------------------------------------- LP block shared by hedging problems

class HedgeBlock:
    """Admissible strategies on the subtree of ``u`` inside an :class:`~tclab.lp.LpBuilder`.

    Each non-leaf node ``n`` gets generator weights ``a_n >= 0`` with
    ``xi_n = -G_n a_n``; each leaf gets ``w >= 0`` certifying that the
    terminal position lies in ``K_T``. Trades at the leaves themselves are
    redundant for terminal solvency (``K + K = K``) and are only created when
    ``leaf_trades`` is set. Terminal rows are added by :meth:`terminal`.
    """

    def __init__(self, bld: lp.LpBuilder, tree: ScenarioTree, u: int, leaf_trades: bool = False):
        self.bld = bld
        self.tree = tree
        self.u = u
        self.nodes = tree.subtree(u)
        self.leaves = [n for n in self.nodes if tree.is_leaf(n)]
        self.a = {}
        for n in self.nodes:
            if not tree.is_leaf(n) or leaf_trades:
                self.a[n] = bld.add_vars(tree[n].cone.generators().shape[1], lb=0)
        self.w = {leaf: bld.add_vars(tree[leaf].cone.generators().shape[1], lb=0) for leaf in self.leaves}

    def xi_terms(self, n: int, scale=None) -> list[list]:
        """Per component ``i``, the terms of ``xi_n,i * scale_i``."""
        G = self.tree[n].cone.generators()
        d = self.tree.d
        out = [[] for _ in range(d)]
        if n not in self.a:
            return out
        for i in range(d):
            s = 1 if scale is None else scale[i]
            for k in np.flatnonzero(G[i] != 0):
                out[i].append((self.a[n][k], -G[i, k] * s))
        return out

    def value_terms(self, leaf: int) -> list[list]:
        """Terms of the pre-disposal terminal value ``V_T(leaf)``."""
        d = self.tree.d
        rows = [[] for _ in range(d)]
        path = self.tree.path(leaf)
        for n in path[path.index(self.u):]:
            g = self.tree.growth(n, leaf)
            for i, terms in enumerate(self.xi_terms(n, g)):
                rows[i].extend(terms)
        return rows

    def terminal(self, extra=None, rhs=None):
        """Add ``V_T + extra(leaf) - rhs(leaf) = G_leaf w_leaf`` at every leaf.

        ``extra(leaf)`` returns per-component term lists, ``rhs(leaf)`` a vector.
        """
        d = self.tree.d
        for leaf in self.leaves:
            rows = self.value_terms(leaf)
            if extra is not None:
                for i, terms in enumerate(extra(leaf)):
                    rows[i].extend(terms)
            G = self.tree[leaf].cone.generators()
            b = rhs(leaf) if rhs is not None else [0] * d
            for i in range(d):
                terms = list(rows[i])
                terms.extend((self.w[leaf][k], -G[i, k]) for k in np.flatnonzero(G[i] != 0))
                self.bld.add_row(terms, "=", b[i])

    def strategy(self, x) -> Strategy:
        """Read the transfers off an LP solution vector (in the solution's arithmetic)."""
        x = np.asarray(x)
        xi = {}
        for n, idx in self.a.items():
            G = self.tree[n].cone.generators()
            if x.dtype == object:
                xi[n] = -np.array([sum((G[i, k] * x[j] for k, j in enumerate(idx) if G[i, k]), Fraction(0))
                                   for i in range(self.tree.d)], dtype=object)
            else:
                xi[n] = -(G.astype(float) @ x[idx].astype(float))
        return Strategy(xi, t0=self.tree[self.u].t)
