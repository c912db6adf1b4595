"""Linear systems with expression coefficients.

Pivots are chosen numerically at a sample point (preferring exact constants)
and elimination is carried out exactly on rational forms.  Rows that were not
used as pivots are checked afterwards with the zero test, so an inconsistent
system is reported instead of silently solved in the least-squares sense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .nodes import Expr
from .normal import (RF_ZERO, RationalForm, from_rational, rf_div, rf_mul, rf_sub,
                     to_rational)
from .numeric import SamplingPolicy, ZeroResult, combine, evaluate, is_zero


class SingularSystem(ValueError):
    pass


@dataclass(frozen=True)
class Solution:
    values: tuple[Expr, ...]
    residual: ZeroResult
    pivot_rows: tuple[int, ...]


def _numeric(rows, env) -> np.ndarray:
    out = np.zeros((len(rows), len(rows[0]) if rows else 0))
    for i, row in enumerate(rows):
        for j, rf in enumerate(row):
            if not rf.is_zero:
                v = np.abs(evaluate(from_rational(rf), env))
                out[i, j] = float(np.min(v)) if np.all(np.isfinite(v)) else 0.0
    return out


def solve(A: Sequence[Sequence[Expr]], b: Sequence[Expr], env: Mapping[str, np.ndarray],
          policy: SamplingPolicy | None = None, check: bool = True) -> Solution:
    """Solve ``A c = b`` for a tall matrix of full column rank.

    ``env`` holds a few admissible sample points used only to decide which
    entries are generically nonzero.
    """
    m = len(A)
    r = len(A[0]) if m else 0
    M = [[to_rational(a) for a in row] + [to_rational(bi)] for row, bi in zip(A, b)]
    num = _numeric([row[:r] for row in M], env) if r else np.zeros((m, 0))
    scale = max(1.0, float(np.max(np.abs(num)))) if num.size else 1.0
    used: list[int] = []
    pivots: list[tuple[int, int]] = []
    for col in range(r):
        best, best_key = None, None
        for i in range(m):
            if i in used or M[i][col].is_zero:
                continue
            v = abs(num[i, col])
            if v <= 1e-9 * scale:
                continue
            key = (M[i][col].constant() is not None, -len(M[i][col].num), v)
            if best_key is None or key > best_key:
                best, best_key = i, key
        if best is None:
            raise SingularSystem(f"no usable pivot in column {col}")
        used.append(best)
        pivots.append((best, col))
        piv = M[best][col]
        for i in range(m):
            if i == best or M[i][col].is_zero:
                continue
            f = rf_div(M[i][col], piv)
            M[i] = [rf_sub(x, rf_mul(f, y)) if not y.is_zero else x for x, y in zip(M[i], M[best])]
            M[i][col] = RF_ZERO
        num = _numeric([row[:r] for row in M], env)
    values: list[RationalForm] = [RF_ZERO] * r
    for row, col in pivots:
        values[col] = rf_div(M[row][r], M[row][col])
    rest = [i for i in range(m) if i not in used]
    if check and rest:
        residual = combine(is_zero(from_rational(M[i][r]), policy) for i in rest)
    else:
        residual = combine([])
    return Solution(tuple(from_rational(v) for v in values), residual, tuple(used))
