"""Small exact (Fraction) and floating linear algebra helpers."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    M = [[Fraction(x) for x in r] for r in rows]
    if not M:
        return M, []
    ncol = len(M[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncol):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def rank_exact(rows) -> int:
    return len(rref(rows)[1])


def nullspace_exact(rows, ncol: int) -> list[list[Fraction]]:
    """Basis of {v : rows v = 0}, each vector with a 1 in a free position."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncol)] for j in range(ncol)]
    R, piv = rref(rows)
    free = [c for c in range(ncol) if c not in piv]
    out = []
    for f in free:
        v = [Fraction(0)] * ncol
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -R[i][f]
        out.append(v)
    return out


def rank_float(M, tol: float = 1e-9) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def nullspace_float(M, ncol: int, tol: float = 1e-9) -> np.ndarray:
    M = np.asarray(M, dtype=float).reshape(-1, ncol)
    if M.size == 0:
        return np.eye(ncol)
    _, s, vt = np.linalg.svd(M)
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return vt[r:]
