"""Compile expression lists into plain Python functions for inner loops."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .nodes import Expr
from .printer import to_python

_SCALAR = {"_exp": math.exp, "_ln": math.log, "_sin": math.sin, "_cos": math.cos, "_sqrt": math.sqrt}
_ARRAY = {"_exp": np.exp, "_ln": np.log, "_sin": np.sin, "_cos": np.cos, "_sqrt": np.sqrt}


def compile_exprs(exprs: Sequence[Expr], names: Sequence[str], vectorized: bool = False) -> Callable:
    """``f(values)`` returning the expressions evaluated at ``values``.

    ``values`` is ordered like ``names``.  Scalar mode takes a 1-d sequence
    and returns a float array; vectorized mode takes shape (len(names), m)
    and returns (len(exprs), m).  Domain errors surface as ``ValueError`` or
    ``ZeroDivisionError`` in scalar mode and as non-finite values otherwise.
    """
    local = {n: f"_v{i}" for i, n in enumerate(names)}
    body = [to_python(e, local) for e in exprs]
    lines = ["def _compiled(_x):"]
    lines += [f"    _v{i} = _x[{i}]" for i in range(len(names))]
    if vectorized:
        lines.append("    _one = _np.ones(_np.shape(_x)[1:])")
        lines.append("    return _np.stack([" + ", ".join(f"({b}) * _one" for b in body) + "])"
                     if body else "    return _np.zeros((0,) + _np.shape(_x)[1:])")
    else:
        lines.append("    return _np.array([" + ", ".join(body) + "], dtype=float)")
    ns = dict(_ARRAY if vectorized else _SCALAR)
    ns["_np"] = np
    exec("\n".join(lines), ns)
    return ns["_compiled"]
