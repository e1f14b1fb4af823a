"""Double-description enumeration of extreme rays of ``{z : A z >= 0}`` in exact arithmetic."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .numeric import InputError


def _rank(rows: Sequence[Sequence[Fraction]]) -> int:
    M = [list(r) for r in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][col]
        for i in range(len(M)):
            if i != rank and M[i][col] != 0:
                f = M[i][col] / p
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def _inverse(M):
    n = len(M)
    aug = [list(M[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def normalize_ray(r):
    """Scale a ray so its largest absolute entry is 1."""
    m = max(abs(v) for v in r)
    return tuple(v / m for v in r)


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def extreme_rays(A: Sequence[Sequence]) -> list[tuple[Fraction, ...]]:
    """Extreme rays of the pointed polyhedral cone ``{z : A z >= 0}``.

    Rays are returned normalized (max-abs entry 1) and sorted. Raises
    :class:`InputError` when the cone is not pointed (``rank A < dim``).
    """
    A = [tuple(Fraction(v) for v in row) for row in A]
    if not A:
        raise InputError("empty constraint system describes a non-pointed cone")
    d = len(A[0])
    # initial simplicial cone from d independent rows
    chosen: list[int] = []
    for i, row in enumerate(A):
        if _rank([A[k] for k in chosen] + [row]) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise InputError("cone is not pointed: constraint matrix has rank < dimension")
    inv = _inverse([A[i] for i in chosen])
    rays = [tuple(inv[r][k] for r in range(d)) for k in range(d)]
    processed = list(chosen)

    def zero_set(r):
        return frozenset(i for i in processed if _dot(A[i], r) == 0)

    zsets = [zero_set(r) for r in rays]
    for i, row in enumerate(A):
        if i in chosen:
            continue
        vals = [_dot(row, r) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zer = [k for k, v in enumerate(vals) if v == 0]
        new_rays = [rays[k] for k in pos + zer]
        new_z = [zsets[k] for k in pos] + [zsets[k] | {i} for k in zer]
        for p in pos:
            for q in neg:
                common = zsets[p] & zsets[q]
                if len(common) < d - 2:
                    continue
                if any(k not in (p, q) and common <= zsets[k] for k in range(len(rays))):
                    continue
                vp, vq = vals[p], vals[q]
                r = tuple(vp * b - vq * a for a, b in zip(rays[p], rays[q]))
                new_rays.append(r)
                new_z.append(common | {i})
        processed.append(i)
        rays, zsets = new_rays, new_z
    out = sorted({normalize_ray(r) for r in rays}, reverse=True)
    return out
