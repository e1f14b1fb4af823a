"""Dense linear-programming kernel.

Every LP in the package goes through :func:`solve`. Two arithmetic routes:

* ``mode="float"`` (default): HiGHS through :func:`scipy.optimize.linprog`.
* ``mode="exact"``: a rational two-phase simplex (:mod:`tclab._simplex`).

Certificates use one convention. The problem is first put in *normalized
form*: minimize ``c.x`` (``c`` negated for ``sense="max"``) subject to rows
``g.x >= h`` or ``g.x = h``. Constraint rows come first (``<=`` rows are
negated), then one row ``x_j >= l_j`` per finite lower bound, then one row
``-x_j >= -u_j`` per finite upper bound.

* optimal: ``dual`` is ``y`` with ``G^T y = c``, ``y >= 0`` on inequality rows
  and ``h.y`` equal to the (minimization) objective.
* infeasible: ``dual`` is a Farkas ray ``y`` with ``G^T y = 0``, ``y >= 0`` on
  inequality rows and ``h.y = 1 > 0``.
"""
from __future__ import annotations

import contextlib
import contextvars
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import _simplex
from .numeric import EPS_FEAS, InputError, to_fraction, to_float

RELATIONS = ("<=", "=", ">=")
_REL_ALIASES = {"<=": "<=", "≤": "<=", "le": "<=", "=": "=", "==": "=", "eq": "=", ">=": ">=", "≥": ">=", "ge": ">="}

_dump_target: contextvars.ContextVar = contextvars.ContextVar("tclab_lp_dump", default=None)


class LpError(RuntimeError):
    """The backend failed to classify a problem (iteration limit, numerical trouble)."""


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    rel: tuple
    b: np.ndarray
    lower: tuple
    upper: tuple
    sense: str = "min"

    def __post_init__(self):
        n = len(self.c)
        A = self.A
        if A.ndim != 2 or (A.shape[0] and A.shape[1] != n):
            raise InputError(f"constraint matrix shape {A.shape} does not match {n} variables")
        if len(self.rel) != A.shape[0] or len(self.b) != A.shape[0]:
            raise InputError("relations/right-hand sides do not match the number of rows")
        bad = [r for r in self.rel if r not in RELATIONS]
        if bad:
            raise InputError(f"unknown relation(s) {bad}")
        if len(self.lower) != n or len(self.upper) != n:
            raise InputError("bounds do not match the number of variables")
        for j, (lo, up) in enumerate(zip(self.lower, self.upper)):
            if lo is not None and up is not None and lo > up:
                raise InputError(f"variable {j}: lower bound {lo} exceeds upper bound {up}")
        if self.sense not in ("min", "max"):
            raise InputError(f"sense must be 'min' or 'max', got {self.sense!r}")

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def exact(self) -> bool:
        return self.c.dtype == object

    def normalized(self):
        """Return ``(G, h, is_eq, c_min)`` of the normalized form (dense)."""
        rows, rhs, eq = [], [], []
        for i in range(self.m):
            sign = -1 if self.rel[i] == "<=" else 1
            rows.append(sign * self.A[i])
            rhs.append(sign * self.b[i])
            eq.append(self.rel[i] == "=")
        dtype = object if self.exact else float
        for j, lo in enumerate(self.lower):
            if lo is not None:
                e = np.zeros(self.n, dtype=dtype)
                e[j] = 1
                rows.append(e)
                rhs.append(lo)
                eq.append(False)
        for j, up in enumerate(self.upper):
            if up is not None:
                e = np.zeros(self.n, dtype=dtype)
                e[j] = -1
                rows.append(e)
                rhs.append(-up)
                eq.append(False)
        G = np.array(rows, dtype=dtype).reshape(len(rows), self.n)
        c_min = -self.c if self.sense == "max" else self.c
        return G, np.array(rhs, dtype=dtype), np.array(eq, dtype=bool), c_min

    def violation(self, x) -> float:
        """Largest constraint or bound violation of ``x`` (0 when feasible)."""
        x = np.asarray(x)
        worst = 0.0
        if self.m:
            ax = self.A.dot(x)
            for i, r in enumerate(self.rel):
                d = float(ax[i] - self.b[i])
                v = max(d, 0.0) if r == "<=" else (max(-d, 0.0) if r == ">=" else abs(d))
                worst = max(worst, v)
        for j in range(self.n):
            if self.lower[j] is not None:
                worst = max(worst, float(self.lower[j] - x[j]))
            if self.upper[j] is not None:
                worst = max(worst, float(x[j] - self.upper[j]))
        return worst

    def to_text(self) -> str:
        """Plain-text inequality dump, one constraint per line."""

        def term(coef, j):
            # Fraction has no "+" format spec before Python 3.12
            return f"{'-' if coef < 0 else '+'}{abs(coef)} x{j}"

        lines = [f"{self.sense}: " + " ".join(term(v, j) for j, v in enumerate(self.c) if v != 0)]
        lines.append("subject to")
        for i in range(self.m):
            lhs = " ".join(term(v, j) for j, v in enumerate(self.A[i]) if v != 0) or "0"
            lines.append(f"  {lhs} {self.rel[i]} {self.b[i]}")
        lines.append("bounds")
        for j in range(self.n):
            lo = "-inf" if self.lower[j] is None else self.lower[j]
            up = "+inf" if self.upper[j] is None else self.upper[j]
            lines.append(f"  {lo} <= x{j} <= {up}")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    value: object = None
    dual: Optional[np.ndarray] = None
    mode: str = "float"
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def make_problem(c, constraints=(), bounds=None, sense="min", mode="float") -> LpProblem:
    """Build an :class:`LpProblem` from ``(coefficients, relation, rhs)`` triples.

    ``bounds`` is a list of ``(lower, upper)`` pairs (``None`` for unbounded);
    it defaults to ``x >= 0``.
    """
    exact = mode == "exact"
    conv = to_fraction if exact else to_float
    dtype = object if exact else float
    c_arr = np.array([conv(v) for v in c], dtype=dtype)
    n = len(c_arr)
    rows, rel, rhs = [], [], []
    for coefs, r, b in constraints:
        coefs = list(coefs)
        if len(coefs) != n:
            raise InputError(f"constraint row of length {len(coefs)} for {n} variables")
        if r not in _REL_ALIASES:
            raise InputError(f"unknown relation {r!r}")
        rows.append([conv(v) for v in coefs])
        rel.append(_REL_ALIASES[r])
        rhs.append(conv(b))
    A = np.array(rows, dtype=dtype).reshape(len(rows), n)
    if bounds is None:
        bounds = [(0, None)] * n
    if len(bounds) != n:
        raise InputError(f"{len(bounds)} bounds for {n} variables")
    lower = tuple(None if lo is None else conv(lo) for lo, _ in bounds)
    upper = tuple(None if up is None else conv(up) for _, up in bounds)
    return LpProblem(c_arr, A, tuple(rel), np.array(rhs, dtype=dtype), lower, upper, sense)


class LpBuilder:
    """Incremental construction of an LP with sparse row specification."""

    def __init__(self, exact: bool = False):
        self.exact = exact
        self._conv = to_fraction if exact else to_float
        self._lower: list = []
        self._upper: list = []
        self._rows: list = []
        self._obj: dict = {}
        self.sense = "min"

    @property
    def n(self) -> int:
        return len(self._lower)

    def add_vars(self, count: int, lb=0, ub=None) -> np.ndarray:
        start = self.n
        lo = None if lb is None else self._conv(lb)
        up = None if ub is None else self._conv(ub)
        self._lower.extend([lo] * count)
        self._upper.extend([up] * count)
        return np.arange(start, start + count)

    def set_bounds(self, j: int, lb=None, ub=None):
        self._lower[j] = None if lb is None else self._conv(lb)
        self._upper[j] = None if ub is None else self._conv(ub)

    def add_row(self, terms, rel: str, rhs):
        """``terms`` is an iterable of ``(index, coefficient)``; repeated indices add up."""
        row: dict = {}
        for j, v in terms:
            v = self._conv(v)
            if v:
                row[int(j)] = row.get(int(j), 0) + v
        self._rows.append((row, _REL_ALIASES[rel], self._conv(rhs)))

    def objective(self, terms, sense: str = "min"):
        self._obj = {}
        for j, v in terms:
            self._obj[int(j)] = self._obj.get(int(j), 0) + self._conv(v)
        self.sense = sense

    def build(self) -> LpProblem:
        dtype = object if self.exact else float
        n = self.n
        c = np.zeros(n, dtype=dtype)
        if self.exact:
            c[:] = Fraction(0)
        for j, v in self._obj.items():
            c[j] = v
        A = np.zeros((len(self._rows), n), dtype=dtype)
        if self.exact:
            A[:] = Fraction(0)
        for i, (row, _, _) in enumerate(self._rows):
            for j, v in row.items():
                A[i, j] = v
        rel = tuple(r for _, r, _ in self._rows)
        b = np.array([rhs for _, _, rhs in self._rows], dtype=dtype)
        return LpProblem(c, A, rel, b, tuple(self._lower), tuple(self._upper), self.sense)


@contextlib.contextmanager
def dump_lps(path):
    """Append a text dump of every LP solved inside the block to ``path``."""
    token = _dump_target.set(str(path))
    try:
        yield
    finally:
        _dump_target.reset(token)


def _maybe_dump(problem: LpProblem, mode: str):
    target = _dump_target.get()
    if target:
        with open(target, "a", encoding="utf-8") as fh:
            fh.write(f"# LP ({mode}) {problem.n} vars, {problem.m} rows\n")
            fh.write(problem.to_text())
            fh.write("\n")


def solve(problem: LpProblem, mode: str = "float", eps_feas: float = EPS_FEAS) -> LpSolution:
    """Solve ``problem`` and attach a certificate (dual multipliers or Farkas ray)."""
    if mode not in ("float", "exact"):
        raise InputError(f"unknown arithmetic mode {mode!r}")
    if mode == "exact" and not problem.exact:
        problem = _to_exact(problem)
    _maybe_dump(problem, mode)
    if problem.n == 0:
        zero = Fraction(0) if mode == "exact" else 0.0
        infeasible = any(_empty_row_violated(r, b, mode, eps_feas) for r, b in zip(problem.rel, problem.b))
        if infeasible:
            return _with_farkas(problem, mode, eps_feas)
        return LpSolution("optimal", np.zeros(0), zero, None, mode)
    if mode == "exact":
        return _solve_exact(problem)
    return _solve_float(problem, eps_feas)


def feasible_point(problem: LpProblem, mode: str = "float", eps_feas: float = EPS_FEAS) -> LpSolution:
    """Solve the feasibility version of ``problem`` (zero objective)."""
    zero = np.zeros(problem.n, dtype=object if problem.exact else float)
    if problem.exact:
        zero[:] = Fraction(0)
    p = LpProblem(zero, problem.A, problem.rel, problem.b, problem.lower, problem.upper, "min")
    return solve(p, mode=mode, eps_feas=eps_feas)


def _empty_row_violated(rel, b, mode, eps):
    slack = 0 if mode == "exact" else eps
    if rel == "<=":
        return b < -slack
    if rel == ">=":
        return b > slack
    return abs(b) > slack


def _to_exact(problem: LpProblem) -> LpProblem:
    conv = np.vectorize(to_fraction, otypes=[object])
    c = conv(problem.c) if problem.n else np.zeros(0, dtype=object)
    A = conv(problem.A) if problem.A.size else np.zeros(problem.A.shape, dtype=object)
    b = conv(problem.b) if problem.m else np.zeros(0, dtype=object)
    lower = tuple(None if v is None else to_fraction(v) for v in problem.lower)
    upper = tuple(None if v is None else to_fraction(v) for v in problem.upper)
    return LpProblem(c, A, problem.rel, b, lower, upper, problem.sense)


# ---------------------------------------------------------------- exact route

def _solve_exact(problem: LpProblem) -> LpSolution:
    Z = Fraction(0)
    n, m = problem.n, problem.m
    c_min = [(-v if problem.sense == "max" else v) for v in problem.c]

    # x_j = off_j + sum(coef * std_var)
    offsets = [Z] * n
    expand: list[list[tuple[int, int]]] = []
    kind = []
    nstd = 0
    for j in range(n):
        lo, up = problem.lower[j], problem.upper[j]
        if lo is not None:
            offsets[j] = lo
            expand.append([(nstd, 1)])
            kind.append("lower")
            nstd += 1
        elif up is not None:
            offsets[j] = up
            expand.append([(nstd, -1)])
            kind.append("upper")
            nstd += 1
        else:
            expand.append([(nstd, 1), (nstd + 1, -1)])
            kind.append("free")
            nstd += 2

    rows: list[dict] = []
    rhs: list[Fraction] = []
    slack_of_row: list = []
    for i in range(m):
        row: dict = {}
        shift = Z
        Ai = problem.A[i]
        for j in np.flatnonzero(Ai != 0):
            a = Ai[j]
            if a:
                shift += a * offsets[j]
                for k, s in expand[j]:
                    row[k] = row.get(k, Z) + s * a
        rows.append(row)
        rhs.append(problem.b[i] - shift)
        slack_of_row.append(problem.rel[i])
    ub_rows = {}
    for j in range(n):
        if kind[j] == "lower" and problem.upper[j] is not None:
            ub_rows[j] = len(rows)
            rows.append({expand[j][0][0]: Fraction(1)})
            rhs.append(problem.upper[j] - problem.lower[j])
            slack_of_row.append("<=")

    # slack columns
    slack_col = []
    ncols = nstd
    for r in slack_of_row:
        if r == "=":
            slack_col.append(None)
        else:
            slack_col.append(ncols)
            ncols += 1
    flips = []
    A_std, b_std = [], []
    for i, row in enumerate(rows):
        sparse = {k: v for k, v in row.items() if v}
        if slack_col[i] is not None:
            sparse[slack_col[i]] = Fraction(1) if slack_of_row[i] == "<=" else Fraction(-1)
        # zero-rhs ">=" rows are flipped too so their slack can start in the basis
        f = -1 if rhs[i] < 0 or (rhs[i] == 0 and slack_of_row[i] == ">=") else 1
        flips.append(f)
        A_std.append({k: -v for k, v in sparse.items()} if f < 0 else sparse)
        b_std.append(f * rhs[i])
    c_std = [Z] * ncols
    for j in range(n):
        for k, s in expand[j]:
            c_std[k] += s * c_min[j]

    unit = [
        slack_col[i] if slack_col[i] is not None and A_std[i][slack_col[i]] == 1 else None
        for i in range(len(A_std))
    ]
    res = _simplex.solve_standard(c_std, A_std, b_std, unit)
    if res.status == "infeasible":
        return _with_farkas(problem, "exact", 0)
    if res.status == "unbounded":
        return LpSolution("unbounded", mode="exact")

    xs = res.x
    x = np.array([offsets[j] + sum((s * xs[k] for k, s in expand[j]), Z) for j in range(n)], dtype=object)
    value = sum((cj * xj for cj, xj in zip(problem.c, x)), Z)

    y_std = res.y
    # reduced costs of the structural std columns
    red = list(c_std[:nstd])
    for i, yi in enumerate(y_std):
        if yi:
            for k, v in A_std[i].items():
                if k < nstd:
                    red[k] -= yi * v
    duals = []
    for i in range(m):
        yv = flips[i] * y_std[i]
        duals.append(-yv if problem.rel[i] == "<=" else yv)
    for j in range(n):
        if problem.lower[j] is not None:
            duals.append(red[expand[j][0][0]])
    for j in range(n):
        if problem.upper[j] is not None:
            if kind[j] == "lower":
                duals.append(-flips[ub_rows[j]] * y_std[ub_rows[j]])
            else:
                duals.append(red[expand[j][0][0]])
    return LpSolution("optimal", x, value, np.array(duals, dtype=object), "exact")


# ---------------------------------------------------------------- float route

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


def _split_rows(problem: LpProblem):
    A = sp.csr_matrix(problem.A.astype(float)) if problem.m else None
    rel = np.array(problem.rel)
    b = problem.b.astype(float)
    ub_mask = rel != "="
    eq_mask = rel == "="
    A_ub = b_ub = A_eq = b_eq = None
    if A is not None and ub_mask.any():
        sign = np.where(rel[ub_mask] == "<=", 1.0, -1.0)
        A_ub = sp.diags(sign) @ A[np.flatnonzero(ub_mask)]
        b_ub = sign * b[ub_mask]
    if A is not None and eq_mask.any():
        A_eq = A[np.flatnonzero(eq_mask)]
        b_eq = b[eq_mask]
    return A_ub, b_ub, A_eq, b_eq, ub_mask, eq_mask


def _run_highs(c, A_ub, b_ub, A_eq, b_eq, bounds):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                       method="highs", options=_HIGHS_OPTIONS)


def _solve_float(problem: LpProblem, eps_feas: float) -> LpSolution:
    c = problem.c.astype(float)
    c_min = -c if problem.sense == "max" else c
    A_ub, b_ub, A_eq, b_eq, ub_mask, eq_mask = _split_rows(problem)
    bounds = [(None if lo is None else float(lo), None if up is None else float(up))
              for lo, up in zip(problem.lower, problem.upper)]
    res = _run_highs(c_min, A_ub, b_ub, A_eq, b_eq, bounds)

    if res.status == 3:
        # HiGHS may report "unbounded" for problems that are in fact infeasible
        probe = _run_highs(np.zeros_like(c_min), A_ub, b_ub, A_eq, b_eq, bounds)
        if probe.status == 2:
            return _with_farkas(problem, "float", eps_feas)
        return LpSolution("unbounded", mode="float", info={"message": res.message})
    if res.status == 2:
        return _with_farkas(problem, "float", eps_feas)
    if res.status != 0:
        raise LpError(f"HiGHS failed: status {res.status}: {res.message}")

    x = np.asarray(res.x, dtype=float)
    value = float(c.dot(x))
    duals = []
    ineq_marg = iter(res.ineqlin.marginals if A_ub is not None else [])
    eq_marg = iter(res.eqlin.marginals if A_eq is not None else [])
    for r in problem.rel:
        if r == "=":
            duals.append(float(next(eq_marg)))
        else:
            duals.append(-float(next(ineq_marg)))
    for j, lo in enumerate(problem.lower):
        if lo is not None:
            duals.append(float(res.lower.marginals[j]))
    for j, up in enumerate(problem.upper):
        if up is not None:
            duals.append(-float(res.upper.marginals[j]))
    return LpSolution("optimal", x, value, np.array(duals), "float",
                      info={"violation": problem.violation(x)})


# ---------------------------------------------------------------- Farkas rays

def farkas_problem(problem: LpProblem) -> LpProblem:
    """LP whose optimal points are Farkas rays of ``problem`` (normalized convention).

    ``max h.y`` subject to ``G^T y = 0``, ``0 <= y_ineq <= 1`` and
    ``-1 <= y_eq <= 1``. It is always feasible and bounded; a positive
    optimum certifies infeasibility of ``problem``.
    """
    exact = problem.exact
    G, h, is_eq, _ = problem.normalized()
    k = G.shape[0]
    bld = LpBuilder(exact=exact)
    y = bld.add_vars(k, lb=0, ub=1)
    for i in np.flatnonzero(is_eq):
        bld.set_bounds(int(y[i]), -1, 1)
    for j in range(problem.n):
        col = G[:, j]
        nz = np.flatnonzero(col != 0)
        bld.add_row(((y[i], col[i]) for i in nz), "=", 0)
    bld.objective(((y[i], h[i]) for i in np.flatnonzero(h != 0)), "max")
    return bld.build()


def _with_farkas(problem: LpProblem, mode: str, eps_feas: float) -> LpSolution:
    fp = farkas_problem(problem)
    cert = None
    if fp.n:
        sub = _solve_exact(fp) if mode == "exact" else _solve_float(fp, eps_feas)
        positive = sub.value > 0 if mode == "exact" else sub.value > eps_feas
        if sub.status == "optimal" and positive:
            cert = sub.x
    return LpSolution("infeasible", None, None, cert, mode)


def check_farkas(problem: LpProblem, y: Sequence, eps: float = 1e-7) -> bool:
    """Independent verification of a Farkas ray for ``problem``."""
    G, h, is_eq, _ = problem.normalized()
    y = np.asarray(y)
    if problem.exact:
        return bool(all(v >= 0 for v in y[~is_eq]) and all(v == 0 for v in G.T.dot(y)) and h.dot(y) > 0)
    y = y.astype(float)
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    return bool((y[~is_eq] >= -eps * scale).all()
                and np.abs(G.astype(float).T @ y).max(initial=0.0) <= eps * scale
                and float(h.astype(float) @ y) > eps)


def check_optimality(problem: LpProblem, sol: LpSolution, eps: float = 1e-7) -> bool:
    """Verify primal feasibility, dual feasibility and zero duality gap of ``sol``."""
    G, h, is_eq, c_min = problem.normalized()
    x, y = sol.x, sol.dual
    if problem.exact:
        primal = all((gx == hh) if e else (gx >= hh) for gx, hh, e in zip(G.dot(x), h, is_eq))
        dual = all(v >= 0 for v in y[~is_eq]) and all(v == 0 for v in (G.T.dot(y) - c_min))
        return bool(primal and dual and h.dot(y) == c_min.dot(x))
    G = G.astype(float)
    h = h.astype(float)
    y = y.astype(float)
    x = x.astype(float)
    gx = G @ x
    primal = (np.abs(gx - h)[is_eq] <= eps).all() and (gx - h >= -eps)[~is_eq].all()
    dual = (y[~is_eq] >= -eps).all() and np.abs(G.T @ y - c_min.astype(float)).max(initial=0.0) <= eps
    gap = abs(float(h @ y) - float(c_min.astype(float) @ x))
    return bool(primal and dual and gap <= eps * (1 + abs(float(c_min.astype(float) @ x))))
