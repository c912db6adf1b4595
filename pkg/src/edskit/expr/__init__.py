"""Symbolic scalar expressions: parsing, normalization, calculus, zero tests."""

from .calculus import differentiate, free_symbols, substitute
from .linsolve import SingularSystem, Solution, solve
from .nodes import (Add, Const, Div, Expr, Func, Mul, Neg, ONE, Pow, Sub, Sym, ZERO, as_expr, cos,
                    exp, ln, sin, sqrt, symbols)
from .normal import RationalForm, from_rational, normalize, to_rational
from .numeric import (SamplingPolicy, SingularEvaluation, Verdict, ZeroResult, combine, eval_at,
                      evaluate, guards, is_zero, sample_points)
from .parser import ExprError, ExprSyntaxError, SymbolTable, UndeclaredSymbol, parse_expr, parse_vector_field
from .printer import to_python, to_text

__all__ = [
    "Add", "Const", "Div", "Expr", "Func", "Mul", "Neg", "ONE", "Pow", "Sub", "Sym", "ZERO",
    "as_expr", "cos", "exp", "ln", "sin", "sqrt", "symbols",
    "differentiate", "free_symbols", "substitute",
    "SingularSystem", "Solution", "solve",
    "RationalForm", "from_rational", "normalize", "to_rational",
    "SamplingPolicy", "SingularEvaluation", "Verdict", "ZeroResult", "combine", "eval_at",
    "evaluate", "guards", "is_zero", "sample_points",
    "ExprError", "ExprSyntaxError", "SymbolTable", "UndeclaredSymbol", "parse_expr",
    "parse_vector_field", "to_python", "to_text",
]
