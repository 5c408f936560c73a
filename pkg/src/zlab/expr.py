"""Holomorphic expression language: parsing, evaluation, exact differentiation.

Expressions are ASTs over complex literals, the symbols i/pi/e, variables
z1..zn, a positive-integer family parameter ``n``, arithmetic (+ - * / ^ with
integer exponents), and the functions exp, cos, sin, sqrt, log (principal
branches).  Evaluation is double-precision and vectorizes over point batches;
derivatives come from a single dual-number pass per variable and are exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, EvalError, ExprSyntaxError

__all__ = [
    "Expression", "Lit", "Var", "Param", "Neg", "Add", "Sub", "Mul", "Div",
    "Pow", "Call", "DualComplex", "HolomorphicFamily", "parse", "to_source",
    "family_from_sources", "eval_family", "eval_family_grid", "jacobian",
    "jacobian_grid", "eval_point_mp", "jacobian_point_mp", "parse_complex",
]

FUNCTIONS = ("exp", "cos", "sin", "sqrt", "log")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Lit:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Param:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Add:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sub:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Mul:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Div:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Lit | Var | Param | Neg | Add | Sub | Mul | Div | Pow | Call


def contains_var(node: Expression) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Lit, Param)):
        return False
    if isinstance(node, Neg):
        return contains_var(node.arg)
    if isinstance(node, Call):
        return contains_var(node.arg)
    if isinstance(node, Pow):
        return contains_var(node.base) or contains_var(node.exponent)
    return contains_var(node.left) or contains_var(node.right)


def max_var_index(node: Expression) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, (Lit, Param)):
        return 0
    if isinstance(node, Neg):
        return max_var_index(node.arg)
    if isinstance(node, Call):
        return max_var_index(node.arg)
    if isinstance(node, Pow):
        return max(max_var_index(node.base), max_var_index(node.exponent))
    return max(max_var_index(node.left), max_var_index(node.right))


# ---------------------------------------------------------------------------
# Tokenizer / recursive-descent parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}",
                                  len(source) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


_VAR_RE = re.compile(r"z(\d+)$")


class _Parser:
    def __init__(self, tokens, ambient_dim: int):
        self.tokens = tokens
        self.k = 0
        self.dim = ambient_dim

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.advance()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)

    def parse_expr(self) -> Expression:
        node = self.parse_term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.parse_term()
                node = _fold(Add(node, rhs) if text == "+" else Sub(node, rhs))
            else:
                return node

    def parse_term(self) -> Expression:
        node = self.parse_factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.parse_factor()
                node = _fold(Mul(node, rhs) if text == "*" else Div(node, rhs))
            else:
                return node

    def parse_factor(self) -> Expression:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return _fold(Neg(self.parse_factor()))
        return self.parse_power()

    def parse_power(self) -> Expression:
        base = self.parse_atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.parse_factor()  # right-assoc, allows z^-2
            return _fold(Pow(base, exponent))
        return base

    def parse_atom(self) -> Expression:
        kind, text, pos = self.advance()
        if kind == "num":
            return Lit(complex(float(text)))
        if kind == "name":
            if text == "i":
                return Lit(1j)
            if text == "pi":
                return Lit(complex(math.pi))
            if text == "e":
                return Lit(complex(math.e))
            if text == "n":
                return Param()
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(text, arg)
            m = _VAR_RE.match(text)
            if m:
                index = int(m.group(1))
                if index < 1 or index > self.dim:
                    raise DimensionError(
                        f"variable z{index} exceeds ambient dimension {self.dim}")
                return Var(index)
            raise ExprSyntaxError(f"unknown symbol {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"unexpected token {text!r}" if text else "unexpected end of input", pos)


def _fold(node: Expression) -> Expression:
    """Fold constant arithmetic so printed literals reparse to the same AST."""
    if isinstance(node, Neg) and isinstance(node.arg, Lit):
        return Lit(-node.arg.value)
    if isinstance(node, Add) and isinstance(node.left, Lit) and isinstance(node.right, Lit):
        return Lit(node.left.value + node.right.value)
    if isinstance(node, Sub) and isinstance(node.left, Lit) and isinstance(node.right, Lit):
        return Lit(node.left.value - node.right.value)
    if isinstance(node, Mul) and isinstance(node.left, Lit) and isinstance(node.right, Lit):
        return Lit(node.left.value * node.right.value)
    if isinstance(node, Div) and isinstance(node.left, Lit) and isinstance(node.right, Lit) \
            and node.right.value != 0:
        return Lit(node.left.value / node.right.value)
    if isinstance(node, Pow) and isinstance(node.base, Lit) and isinstance(node.exponent, Lit):
        ev = node.exponent.value
        if ev.imag == 0 and float(ev.real).is_integer() and not (node.base.value == 0 and ev.real < 0):
            return Lit(node.base.value ** int(ev.real))
    return node


def parse(source: str, ambient_dim: int) -> Expression:
    """Parse an expression over z1..z<ambient_dim>, the parameter n, and constants."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    parser = _Parser(_tokenize(source), ambient_dim)
    node = parser.parse_expr()
    kind, text, pos = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {text!r}", pos)
    return node


def parse_complex(source: str) -> complex:
    """Parse a constant expression (no variables, no parameter) to a complex number."""
    node = parse(source, ambient_dim=0)
    if contains_var(node) or _contains_param(node):
        raise ExprSyntaxError("expected a constant expression", 0)
    return complex(_eval_node(node, (), 1, _NP_OPS))


def _contains_param(node: Expression) -> bool:
    if isinstance(node, Param):
        return True
    if isinstance(node, (Lit, Var)):
        return False
    if isinstance(node, Neg):
        return _contains_param(node.arg)
    if isinstance(node, Call):
        return _contains_param(node.arg)
    if isinstance(node, Pow):
        return _contains_param(node.base) or _contains_param(node.exponent)
    return _contains_param(node.left) or _contains_param(node.right)


# ---------------------------------------------------------------------------
# Printer (minimal parentheses; fixed by the round-trip test)

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_real(x: float) -> str:
    return repr(float(x))


def _lit_repr(value: complex) -> tuple[str, int]:
    re_, im = value.real, value.imag
    if im == 0.0:
        if re_ < 0 or (re_ == 0 and math.copysign(1.0, re_) < 0):
            return _fmt_real(re_), _PREC_NEG
        return _fmt_real(re_), _PREC_ATOM
    if re_ == 0.0 and im == 1.0:
        return "i", _PREC_ATOM
    # composite literals reparse via constant folding only when parenthesized
    if re_ == 0.0:
        return f"({_fmt_real(im)}*i)", _PREC_ATOM
    sign = "+" if im >= 0 else "-"
    return f"({_fmt_real(re_)}{sign}{_fmt_real(abs(im))}*i)", _PREC_ATOM


def _prec(node: Expression) -> int:
    if isinstance(node, Lit):
        return _lit_repr(node.value)[1]
    if isinstance(node, (Var, Param, Call)):
        return _PREC_ATOM
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_POW


def to_source(node: Expression) -> str:
    """Render an AST to source with minimal parentheses (parse . to_source = id)."""
    if isinstance(node, Lit):
        return _lit_repr(node.value)[0]
    if isinstance(node, Var):
        return f"z{node.index}"
    if isinstance(node, Param):
        return "n"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        if _prec(node.arg) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        base = to_source(node.base)
        if _prec(node.base) <= _PREC_POW:
            base = f"({base})"
        exponent = to_source(node.exponent)
        if _prec(node.exponent) < _PREC_POW:
            exponent = f"({exponent})"
        return f"{base}^{exponent}"
    op, prec = {Add: ("+", _PREC_ADD), Sub: ("-", _PREC_ADD),
                Mul: ("*", _PREC_MUL), Div: ("/", _PREC_MUL)}[type(node)]
    left = to_source(node.left)
    if _prec(node.left) < prec:
        left = f"({left})"
    right = to_source(node.right)
    if _prec(node.right) <= prec:
        right = f"({right})"
    return f"{left}{op}{right}"


# ---------------------------------------------------------------------------
# Dual numbers over C (nilpotent part carries the derivative exactly)


class DualComplex:
    """a + eps*a' with eps^2 = 0; arithmetic implements the product rule exactly."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv):
        self.value = value
        self.deriv = deriv

    def __add__(self, other):
        if isinstance(other, DualComplex):
            return DualComplex(self.value + other.value, self.deriv + other.deriv)
        return DualComplex(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DualComplex):
            return DualComplex(self.value - other.value, self.deriv - other.deriv)
        return DualComplex(self.value - other, self.deriv)

    def __rsub__(self, other):
        return DualComplex(other - self.value, -self.deriv)

    def __neg__(self):
        return DualComplex(-self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, DualComplex):
            return DualComplex(self.value * other.value,
                               self.value * other.deriv + self.deriv * other.value)
        return DualComplex(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualComplex):
            v = self.value / other.value
            return DualComplex(v, (self.deriv - v * other.deriv) / other.value)
        return DualComplex(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        v = other / self.value
        return DualComplex(v, -v * self.deriv / self.value)


def _val(x):
    return x.value if isinstance(x, DualComplex) else x


# ---------------------------------------------------------------------------
# Evaluation backends (vectorized numpy; scalar mpmath for overflow rescue)


class _NumpyOps:
    name = "numpy"

    @staticmethod
    def any_true(mask) -> bool:
        return bool(np.any(mask))

    @staticmethod
    def is_zero(x):
        return _val(x) == 0

    @staticmethod
    def on_cut(x):
        v = _val(x)
        return (np.real(v) < 0) & (np.imag(v) == 0)

    exp = staticmethod(np.exp)
    cos = staticmethod(np.cos)
    sin = staticmethod(np.sin)
    sqrt = staticmethod(np.sqrt)
    log = staticmethod(np.log)


class _MpOps:
    name = "mpmath"

    @staticmethod
    def any_true(mask) -> bool:
        return bool(mask)

    @staticmethod
    def is_zero(x):
        return _val(x) == 0

    @staticmethod
    def on_cut(x):
        v = _val(x)
        return v.real < 0 and v.imag == 0

    # bound lazily so importing zlab does not pull mpmath unless needed
    @staticmethod
    def exp(x):
        import mpmath
        return mpmath.exp(x)

    @staticmethod
    def cos(x):
        import mpmath
        return mpmath.cos(x)

    @staticmethod
    def sin(x):
        import mpmath
        return mpmath.sin(x)

    @staticmethod
    def sqrt(x):
        import mpmath
        return mpmath.sqrt(x)

    @staticmethod
    def log(x):
        import mpmath
        return mpmath.log(x)


_NP_OPS = _NumpyOps()
_MP_OPS = _MpOps()

_FN_DERIV = {
    "exp": lambda ops, v, fv: fv,
    "cos": lambda ops, v, fv: -ops.sin(v),
    "sin": lambda ops, v, fv: ops.cos(v),
    "sqrt": lambda ops, v, fv: 0.5 / fv,
    "log": lambda ops, v, fv: 1.0 / v,
}


def _apply_call(func: str, x, ops):
    v = _val(x)
    if func in ("log", "sqrt"):
        if ops.any_true(ops.is_zero(v)) and func == "log":
            raise EvalError("log(0)")
        if ops.any_true(ops.on_cut(v)):
            raise EvalError(f"{func} evaluated on its branch cut")
    fv = getattr(ops, func)(v)
    if isinstance(x, DualComplex):
        return DualComplex(fv, x.deriv * _FN_DERIV[func](ops, v, fv))
    return fv


def _int_pow(base, m: int):
    """Binary exponentiation; exact for dual numbers, branch-free for any integer."""
    if m == 0:
        return 1.0 + 0j
    negative = m < 0
    m = -m if negative else m
    acc = None
    cur = base
    while True:
        if m & 1:
            acc = cur if acc is None else acc * cur
        m >>= 1
        if not m:
            break
        cur = cur * cur
    if negative:
        vals = _val(acc)
        if isinstance(vals, np.ndarray):
            if np.any(vals == 0):
                raise EvalError("division by zero in negative power")
        elif vals == 0:
            raise EvalError("division by zero in negative power")
        acc = 1.0 / acc
    return acc


def _eval_node(node: Expression, env: Sequence, index: int, ops):
    """env[b] is the value (plain or DualComplex) of variable z_{b+1}."""
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Var):
        return env[node.index - 1]
    if isinstance(node, Param):
        return complex(index)
    if isinstance(node, Neg):
        return -_eval_node(node.arg, env, index, ops)
    if isinstance(node, Add):
        return _eval_node(node.left, env, index, ops) + _eval_node(node.right, env, index, ops)
    if isinstance(node, Sub):
        return _eval_node(node.left, env, index, ops) - _eval_node(node.right, env, index, ops)
    if isinstance(node, Mul):
        return _eval_node(node.left, env, index, ops) * _eval_node(node.right, env, index, ops)
    if isinstance(node, Div):
        num = _eval_node(node.left, env, index, ops)
        den = _eval_node(node.right, env, index, ops)
        dv = _val(den)
        if ops.any_true(ops.is_zero(dv)):
            raise EvalError("division by zero")
        return num / den
    if isinstance(node, Pow):
        if contains_var(node.exponent):
            raise EvalError("exponent must be a constant integer expression")
        ev = _eval_node(node.exponent, (), index, ops)
        ev = complex(ev)
        if abs(ev.imag) > 1e-9 or abs(ev.real - round(ev.real)) > 1e-9:
            raise EvalError(f"non-integer exponent {ev}")
        return _int_pow(_eval_node(node.base, env, index, ops), int(round(ev.real)))
    if isinstance(node, Call):
        return _apply_call(node.func, _eval_node(node.arg, env, index, ops), ops)
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Families


@dataclass(frozen=True)
class HolomorphicFamily:
    """A parametrized holomorphic map (z, j) -> f_j(z) in C^k, given componentwise."""

    components: tuple[Expression, ...]
    ambient_dim: int
    description: str = ""
    domain: object = None  # geometry.Domain reference, if declared

    def __post_init__(self):
        if len(self.components) < 1:
            raise DimensionError("family needs at least one component")
        if self.ambient_dim < 1:
            raise DimensionError("ambient dimension must be >= 1")
        for comp in self.components:
            if max_var_index(comp) > self.ambient_dim:
                raise DimensionError("component references variable beyond ambient dimension")

    @property
    def target_dim(self) -> int:
        return len(self.components)

    def sources(self) -> list[str]:
        return [to_source(c) for c in self.components]


def family_from_sources(sources: Iterable[str], ambient_dim: int,
                        description: str = "", domain: object = None) -> HolomorphicFamily:
    comps = tuple(parse(s, ambient_dim) for s in sources)
    return HolomorphicFamily(comps, ambient_dim, description, domain)


def _check_index(index: int):
    if index < 1 or index != int(index):
        raise EvalError(f"family index must be a positive integer, got {index}")


def eval_family_grid(family: HolomorphicFamily, points: np.ndarray, index: int) -> np.ndarray:
    """Evaluate all components on a batch of points; returns (m, k) complex."""
    _check_index(index)
    pts = np.asarray(points, dtype=complex)
    squeeze = pts.ndim == 1
    if squeeze:
        pts = pts[None, :]
    if pts.shape[1] != family.ambient_dim:
        raise DimensionError(
            f"point has dimension {pts.shape[1]}, family expects {family.ambient_dim}")
    env = [pts[:, b] for b in range(family.ambient_dim)]
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        cols = [np.broadcast_to(np.asarray(_eval_node(c, env, index, _NP_OPS)), (pts.shape[0],))
                for c in family.components]
    out = np.stack(cols, axis=1)
    return out[0] if squeeze else out


def eval_family(family: HolomorphicFamily, point, index: int) -> np.ndarray:
    """Evaluate f_index at one point; returns a length-k complex vector."""
    return eval_family_grid(family, np.asarray(point, dtype=complex), index)


def jacobian_grid(family: HolomorphicFamily, points: np.ndarray, index: int) -> np.ndarray:
    """Exact holomorphic Jacobians on a batch: (m, k, n), entry (a,b) = df_a/dz_b.

    One dual-number pass per variable; the dual arithmetic makes each entry
    exact up to rounding (no truncation error).
    """
    _check_index(index)
    pts = np.asarray(points, dtype=complex)
    squeeze = pts.ndim == 1
    if squeeze:
        pts = pts[None, :]
    if pts.shape[1] != family.ambient_dim:
        raise DimensionError(
            f"point has dimension {pts.shape[1]}, family expects {family.ambient_dim}")
    m, n = pts.shape
    k = family.target_dim
    jac = np.empty((m, k, n), dtype=complex)
    zeros = np.zeros(m, dtype=complex)
    ones = np.ones(m, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        for b in range(n):
            env = [DualComplex(pts[:, c], ones if c == b else zeros) for c in range(n)]
            for a, comp in enumerate(family.components):
                r = _eval_node(comp, env, index, _NP_OPS)
                jac[:, a, b] = np.broadcast_to(
                    r.deriv if isinstance(r, DualComplex) else np.zeros((), dtype=complex), (m,))
    return jac[0] if squeeze else jac


def jacobian(family: HolomorphicFamily, point, index: int) -> np.ndarray:
    """Exact k x n holomorphic Jacobian of f_index at one point."""
    return jacobian_grid(family, np.asarray(point, dtype=complex), index)


# mpmath fallbacks: double-width exponent range for points where the numpy
# pass overflowed; values round back to floats (possibly 0 or inf) afterwards.

def eval_point_mp(family: HolomorphicFamily, point, index: int) -> list:
    import mpmath
    env = [mpmath.mpc(complex(z)) for z in point]
    return [_eval_node(c, env, index, _MP_OPS) for c in family.components]


def jacobian_point_mp(family: HolomorphicFamily, point, index: int) -> list[list]:
    import mpmath
    n = family.ambient_dim
    out = [[None] * n for _ in family.components]
    for b in range(n):
        env = [DualComplex(mpmath.mpc(complex(z)), mpmath.mpc(1 if c == b else 0))
               for c, z in enumerate(point)]
        for a, comp in enumerate(family.components):
            r = _eval_node(comp, env, index, _MP_OPS)
            out[a][b] = r.deriv if isinstance(r, DualComplex) else type(env[0].value)(0)
    return out
