"""Two-phase tableau simplex over rationals with Bland's rule.

Works on the standard form ``min c.x  s.t.  A x = b, x >= 0`` with ``b >= 0``.
Bland's rule makes the method terminate on degenerate problems; exact
arithmetic makes every status classification exact. The tableau runs on
``gmpy2.mpq`` when gmpy2 is importable and on :class:`fractions.Fraction`
otherwise; results are always returned as Fractions.
"""
from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

ZERO = _Q(0)
ONE = _Q(1)


def _q(v):
    if isinstance(v, Fraction):
        return _Q(v.numerator, v.denominator)
    return _Q(v)


def _frac(v):
    return Fraction(int(v.numerator), int(v.denominator))


class StdResult:
    __slots__ = ("status", "x", "value", "y")

    def __init__(self, status, x=None, value=None, y=None):
        self.status = status
        self.x = x
        self.value = value
        self.y = y


def _pivot(T, obj, basis, r, col):
    row = T[r]
    piv = row[col]
    if piv != ONE:
        row = [v / piv for v in row]
        T[r] = row
    nz = [k for k, v in enumerate(row) if v]
    for i, other in enumerate(T):
        if i != r:
            f = other[col]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
    f = obj[col]
    if f:
        for k in nz:
            obj[k] -= f * row[k]
    basis[r] = col


def _iterate(T, obj, basis, allowed):
    """Bland-rule pivots; ``obj`` holds reduced costs with -value in the last slot."""
    while True:
        col = next((j for j in allowed if obj[j] < 0), None)
        if col is None:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            a = row[col]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, obj, basis, best[1], col)


def solve_standard(c, A, b, unit_cols=None) -> StdResult:
    """Solve ``min c.x, A x = b, x >= 0`` exactly; requires ``b >= 0``.

    Rows of ``A`` are dense sequences or sparse ``{column: value}`` dicts.

    ``unit_cols[i]``, when not ``None``, names a column equal to the unit
    vector ``e_i``; it starts in the basis instead of an artificial variable.
    """
    m = len(A)
    n = len(c)
    if m == 0:
        if any(cj < 0 for cj in c):
            return StdResult("unbounded")
        return StdResult("optimal", [Fraction(0)] * n, Fraction(0), [])
    if unit_cols is None:
        unit_cols = [None] * m

    art_rows = [i for i in range(m) if unit_cols[i] is None]
    art_col = {i: n + k for k, i in enumerate(art_rows)}
    width = n + len(art_rows)
    T = []
    for i in range(m):
        row = [ZERO] * (width + 1)
        items = A[i].items() if isinstance(A[i], dict) else enumerate(A[i])
        for k, v in items:
            if v:
                row[k] = _q(v)
        row[-1] = _q(b[i])
        if i in art_col:
            row[art_col[i]] = ONE
        T.append(row)
    basis = [art_col.get(i, unit_cols[i]) for i in range(m)]
    ident = [art_col.get(i, unit_cols[i]) for i in range(m)]

    if art_rows:
        obj = [ZERO] * (width + 1)
        for i in art_rows:
            row = T[i]
            for k in range(n):
                if row[k]:
                    obj[k] -= row[k]
            obj[-1] -= row[-1]
        _iterate(T, obj, basis, range(n))
        if -obj[-1] > 0:
            return StdResult("infeasible")

        # drive remaining artificials out; rows with no structural entry are redundant
        keep = []
        for i in range(m):
            if basis[i] >= n:
                col = next((j for j in range(n) if T[i][j] != 0), None)
                if col is None:
                    continue
                _pivot(T, obj, basis, i, col)
            keep.append(i)
        T = [T[i] for i in keep]
        basis = [basis[i] for i in keep]

    cost = [_q(v) for v in c] + [ZERO] * len(art_rows)
    obj = cost + [ZERO]
    for i, row in enumerate(T):
        cb = cost[basis[i]]
        if cb:
            for k, v in enumerate(row):
                if v:
                    obj[k] -= cb * v
    status = _iterate(T, obj, basis, range(n))
    if status == "unbounded":
        return StdResult("unbounded")

    x = [ZERO] * n
    for i, bi in enumerate(basis):
        x[bi] = T[i][-1]
    value = sum((_q(cj) * xj for cj, xj in zip(c, x)), ZERO)
    # the starting identity columns carry the row-combination matrix B^-1
    y = [ZERO] * m
    for i, bi in enumerate(basis):
        cb = cost[bi]
        if cb:
            row = T[i]
            for k in range(m):
                v = row[ident[k]]
                if v:
                    y[k] += cb * v
    return StdResult("optimal", [_frac(v) for v in x], _frac(value), [_frac(v) for v in y])
