"""Solvency cone K and its dual K' at a single node.

With cost matrix ``lam`` and ``Lam = 1 + lam``, the solvency cone K is
generated by ``Lam[i, j] e_i - e_j`` (i != j) and the unit vectors ``e_i``;
its dual is ``K' = {z : 0 <= z_j <= z_i Lam[i, j]}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import lp
from .dd import extreme_rays
from .numeric import EPS_FEAS, InputError, as_matrix, as_vector, to_fraction

RAY_DIM_CAP = 8


class ConeError(ValueError):
    """Invalid cost matrix or a violated precondition on a cone operation."""


class ConeSpec:
    """Cost matrix of one node, in float or exact (Fraction) arithmetic."""

    def __init__(self, lam, *, exact: bool = False, check: bool = True):
        self.exact = exact
        self.lam = as_matrix(lam, exact)
        if self.lam.shape[0] != self.lam.shape[1] or self.lam.shape[0] < 1:
            raise ConeError(f"cost matrix must be square with d >= 1, got shape {self.lam.shape}")
        self.lam.setflags(write=False)
        if check:
            problems = self.violations()
            if problems:
                raise ConeError("; ".join(problems))
        self._rays = None
        self._gens = None

    @classmethod
    def uniform(cls, d: int, value, exact: bool = False) -> "ConeSpec":
        lam = [[0 if i == j else value for j in range(d)] for i in range(d)]
        return cls(lam, exact=exact)

    @property
    def d(self) -> int:
        return self.lam.shape[0]

    @property
    def Lam(self) -> np.ndarray:
        return self.lam + 1

    def violations(self, rtol: float = 1e-12) -> list[str]:
        lam = self.lam
        d = self.d
        out = []
        for i in range(d):
            if lam[i, i] != 0:
                out.append(f"diagonal cost nonzero at ({i + 1},{i + 1})")
        if any(lam[i, j] < 0 for i in range(d) for j in range(d)):
            out.append("negative cost coefficient")
        if not self.exact and not np.isfinite(lam.astype(float)).all():
            out.append("non-finite cost coefficient")
        if out:
            return out
        L = self.Lam
        slack = 0 if self.exact else rtol
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    if L[i, j] * L[j, k] < L[i, k] * (1 - slack):
                        out.append(f"triangle inequality violated for ({i + 1},{j + 1},{k + 1})")
                        return out
        return out

    def converted(self, exact: bool) -> "ConeSpec":
        """The same cone in the requested arithmetic."""
        if exact == self.exact:
            return self
        return ConeSpec(self.lam, exact=exact, check=False)

    def pairs(self):
        d = self.d
        return [(i, j) for i in range(d) for j in range(d) if i != j]

    def generators(self) -> np.ndarray:
        """Matrix whose columns generate K: ``Lam_ij e_i - e_j`` for each pair, then ``e_i``."""
        if self._gens is None:
            d = self.d
            pairs = self.pairs()
            G = np.zeros((d, len(pairs) + d), dtype=object if self.exact else float)
            if self.exact:
                G[:] = Fraction(0)
            L = self.Lam
            for k, (i, j) in enumerate(pairs):
                G[i, k] = L[i, j]
                G[j, k] = -1
            for i in range(d):
                G[i, len(pairs) + i] = 1
            G.setflags(write=False)
            self._gens = G
        return self._gens

    def dual_inequalities(self) -> list[list[Fraction]]:
        """Rows ``A`` (exact) with ``K' = {z : A z >= 0}``."""
        d = self.d
        L = [[to_fraction(v) if self.exact else Fraction(float(v)) for v in row] for row in self.Lam]
        rows = [[Fraction(int(k == i)) for k in range(d)] for i in range(d)]
        for i, j in self.pairs():
            row = [Fraction(0)] * d
            row[i] = L[i][j]
            row[j] = Fraction(-1)
            rows.append(row)
        return rows

    def to_list(self):
        return [[float(v) for v in row] for row in self.lam]

    def __eq__(self, other):
        return isinstance(other, ConeSpec) and self.exact == other.exact and np.array_equal(self.lam, other.lam)

    def __hash__(self):
        return hash((self.exact, tuple(map(float, self.lam.ravel()))))

    def __repr__(self):
        return f"ConeSpec(d={self.d}, exact={self.exact})"


@dataclass
class ConeCertificate:
    kind: str  # "membership-decomposition" or "separating-functional"
    a: Optional[dict] = None  # (i, j) -> amount transferred
    b: Optional[np.ndarray] = None  # disposal
    z: Optional[np.ndarray] = None  # separator in K'

    def reconstruct(self, cone: ConeSpec) -> np.ndarray:
        L = cone.Lam
        x = np.array(self.b, dtype=object if cone.exact else float)
        for (i, j), v in self.a.items():
            x[i] += v * L[i, j]
            x[j] -= v
        return x


def _check_dim(cone: ConeSpec, v, name="vector"):
    arr = as_vector(v, cone.exact)
    if arr.shape[0] != cone.d:
        raise InputError(f"{name} has length {arr.shape[0]}, cone dimension is {cone.d}")
    return arr


def _mode(cone: ConeSpec, mode):
    return mode or ("exact" if cone.exact else "float")


def in_solvency_cone(cone: ConeSpec, x, mode: Optional[str] = None):
    """Decide ``x in K`` by LP over the generator weights.

    Returns ``(True, decomposition)`` or ``(False, separator z in K' with z.x < 0)``.
    """
    mode = _mode(cone, mode)
    exact = mode == "exact"
    c = cone if exact == cone.exact else ConeSpec(cone.lam, exact=exact, check=False)
    x = _check_dim(c, x)
    G = c.generators()
    bld = lp.LpBuilder(exact=exact)
    w = bld.add_vars(G.shape[1], lb=0)
    for i in range(c.d):
        nz = np.flatnonzero(G[i] != 0)
        bld.add_row(((w[k], G[i, k]) for k in nz), "=", x[i])
    sol = lp.solve(bld.build(), mode=mode)
    pairs = c.pairs()
    if sol.status == "optimal":
        a = {p: sol.x[k] for k, p in enumerate(pairs) if sol.x[k] != 0}
        b = np.array(sol.x[len(pairs):])
        return True, ConeCertificate("membership-decomposition", a=a, b=b)
    # Farkas ray: the equality multipliers give -z with z in K' and z.x < 0
    z = -np.asarray(sol.dual[: c.d])
    if not exact:
        z = z.astype(float)
        z[np.abs(z) < 1e-15] = 0.0
    z = z / max(abs(v) for v in z)
    return False, ConeCertificate("separating-functional", z=z)


def in_solvency_cone_by_rays(cone: ConeSpec, x, eps: float = EPS_FEAS) -> bool:
    """Membership through the dual description: ``min over rays z of z.x >= 0``."""
    x = _check_dim(cone, x)
    rays = extreme_rays_dual(cone, as_float=not cone.exact)
    vals = [np.dot(np.asarray(r), x) for r in rays]
    if cone.exact:
        return min(vals) >= 0
    return min(vals) >= -eps * (1 + float(np.abs(x).max()))


def in_dual_cone(cone: ConeSpec, z, eps: float = EPS_FEAS) -> bool:
    """Direct scan of ``0 <= z_j <= z_i Lam_ij``."""
    z = _check_dim(cone, z)
    L = cone.Lam
    slack = 0 if cone.exact else eps * (1 + float(np.abs(z.astype(float)).max()))
    if any(v < -slack for v in z):
        return False
    return all(z[j] <= z[i] * L[i, j] + slack for i, j in cone.pairs())


def interior_margin(cone: ConeSpec, u):
    """``min_{i != j} (u_i Lam_ij - u_j)``; for ``d = 1`` the margin is ``u_1``."""
    u = _check_dim(cone, u)
    if cone.d == 1:
        return u[0]
    L = cone.Lam
    return min(u[i] * L[i, j] - u[j] for i, j in cone.pairs())


def classify(cone: ConeSpec, u, eps: float = EPS_FEAS) -> str:
    """``"interior"``, ``"boundary"`` or ``"exterior"`` of K' (band ``eps (1 + |u|)`` in float mode)."""
    u = _check_dim(cone, u)
    delta = interior_margin(cone, u)
    band = 0 if cone.exact else eps * (1 + float(np.abs(u.astype(float)).max()))
    if delta > band:
        return "interior"
    if delta < -band:
        return "exterior"
    return "boundary"


def interior_witness(cone: ConeSpec, witness=None):
    """Return an interior point of K': the supplied witness, else 1, else an LP search. ``None`` if empty."""
    if witness is not None:
        w = _check_dim(cone, witness)
        return w if interior_margin(cone, w) > 0 else None
    ones = as_vector([1] * cone.d, cone.exact)
    if interior_margin(cone, ones) > 0:
        return ones
    exact = cone.exact
    bld = lp.LpBuilder(exact=exact)
    u = bld.add_vars(cone.d, lb=0, ub=1)
    m = bld.add_vars(1, lb=None, ub=1)[0]
    L = cone.Lam
    for i, j in cone.pairs():
        bld.add_row([(u[i], L[i, j]), (u[j], -1), (m, -1)], ">=", 0)
    bld.objective([(m, 1)], "max")
    sol = lp.solve(bld.build(), mode="exact" if exact else "float")
    if sol.status != "optimal" or sol.value <= (0 if exact else 1e-9):
        return None
    return np.asarray(sol.x[: cone.d])


def _require_interior(cone: ConeSpec, witness=None):
    if interior_witness(cone, witness) is None:
        raise ConeError("dual cone has empty interior")


def dual_boundary_distance(cone: ConeSpec, u, witness=None):
    """Sup-norm distance from ``u`` to the boundary of K'.

    ``|min_{i != j} (u_i Lam_ij - u_j) / (1 + Lam_ij)|``; requires int K' nonempty.
    """
    _require_interior(cone, witness)
    u = _check_dim(cone, u)
    if cone.d == 1:
        return abs(u[0])
    L = cone.Lam
    return abs(min((u[i] * L[i, j] - u[j]) / (1 + L[i, j]) for i, j in cone.pairs()))


def _sup_norm(v):
    return max(abs(x) for x in v)


def normal_cone_constant(cone: ConeSpec, f0):
    """``k = 4 |f0|_inf / dist(f0, boundary K')``, so ``|x|_1 <= k |x + y|_1`` on K."""
    f0 = _check_dim(cone, f0)
    if interior_margin(cone, f0) <= 0:
        raise ConeError("f0 is not an interior point of the dual cone")
    return 4 * _sup_norm(f0) / dual_boundary_distance(cone, f0, witness=f0)


def liquidation_bound_alpha(cone: ConeSpec, theta):
    """``alpha = 8 |theta|_inf / dist(theta, boundary K')**2``.

    For ``xi in -K`` and ``eta in K`` with ``xi + eta in K``: ``|xi|_1 <= alpha |eta|_1``.
    """
    theta = _check_dim(cone, theta)
    if interior_margin(cone, theta) <= 0:
        raise ConeError("theta is not an interior point of the dual cone")
    dist = dual_boundary_distance(cone, theta, witness=theta)
    return 8 * _sup_norm(theta) / dist ** 2


def friction_constant(cone: ConeSpec):
    """``(2 + c) / eps`` with ``c = max lam``, ``eps = min lam`` over i != j (l1 normality constant)."""
    if cone.d == 1:
        return 1
    vals = [cone.lam[i, j] for i, j in cone.pairs()]
    lo = min(vals)
    if lo <= 0:
        raise ConeError("minimal cost is zero; no uniform friction constant")
    return (2 + max(vals)) / lo


def extreme_rays_dual(cone: ConeSpec, cap: int = RAY_DIM_CAP, as_float: bool = False):
    """Extreme rays of K' by double description (exact; rays scaled to max entry 1)."""
    if cone.d > cap:
        raise ConeError(f"dimension {cone.d} exceeds the ray-enumeration cap {cap}")
    if cone._rays is None:
        cone._rays = extreme_rays(cone.dual_inequalities())
    if as_float:
        return [np.array([float(v) for v in r]) for r in cone._rays]
    return [np.array(r, dtype=object) for r in cone._rays]


def stress_score(cone: ConeSpec, x=None, mode: Optional[str] = None):
    """Minimal ``t`` with ``x = y1 - y2``, ``y1, y2 in K'`` and ``|y1|_inf <= t``.

    ``x`` defaults to ``(1, 0, 1, 0, ...)``. Returns ``inf`` if no decomposition exists.
    """
    mode = _mode(cone, mode)
    exact = mode == "exact"
    d = cone.d
    if x is None:
        x = [1 if i % 2 == 0 else 0 for i in range(d)]
    x = as_vector(x, exact)
    L = as_matrix(cone.Lam, exact)
    bld = lp.LpBuilder(exact=exact)
    y1 = bld.add_vars(d, lb=0)
    y2 = bld.add_vars(d, lb=0)
    t = bld.add_vars(1, lb=0)[0]
    for y in (y1, y2):
        for i in range(d):
            for j in range(d):
                if i != j:
                    bld.add_row([(y[i], L[i, j]), (y[j], -1)], ">=", 0)
    for i in range(d):
        bld.add_row([(y1[i], 1), (y2[i], -1)], "=", x[i])
        bld.add_row([(t, 1), (y1[i], -1)], ">=", 0)
    bld.objective([(t, 1)], "min")
    sol = lp.solve(bld.build(), mode=mode)
    if sol.status != "optimal":
        return math.inf
    return sol.value


def check_ef_conditions(cone: ConeSpec, witness=None, mode: Optional[str] = None) -> dict:
    """Efficient-friction diagnostics for one cone.

    Condition 1: uniform cost floor (``min lam > 0``); condition 2: ``1`` interior to K'
    (``delta_1 > 0``); condition 5: ``min (lam_ij + lam_ji) > 0``. Also reports the
    generating-property stress score and, when an interior point exists, the
    boundary distance, normal-cone constant ``k`` and liquidation bound ``alpha``.
    """
    d = cone.d
    ones = as_vector([1] * d, cone.exact)
    pairs = cone.pairs()
    if pairs:
        eps = min(cone.lam[i, j] for i, j in pairs)
        sym = min(cone.lam[i, j] + cone.lam[j, i] for i, j in pairs)
    else:
        eps = sym = None
    delta_one = interior_margin(cone, ones)
    theta = interior_witness(cone, witness)
    report = {
        "d": d,
        "eps": eps,
        "condition_1": bool(eps is None or eps > 0),
        "delta_one": delta_one,
        "condition_2": bool(delta_one > 0),
        "condition_5": bool(sym is None or sym > 0),
        "min_symmetric_cost": sym,
        "interior_nonempty": theta is not None,
        "stress_score": stress_score(cone, mode=mode),
    }
    if theta is not None:
        report["theta"] = theta
        report["distance"] = dual_boundary_distance(cone, theta, witness=theta)
        report["k"] = normal_cone_constant(cone, theta)
        report["alpha"] = liquidation_bound_alpha(cone, theta)
    else:
        report["theta"] = report["distance"] = report["k"] = report["alpha"] = None
    return report
