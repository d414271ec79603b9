"""Expression language for complexified vector fields.

A tiny infix grammar (``+ - * / ^``, parentheses, unary minus, a fixed set of
holomorphic functions) is parsed into an immutable AST.  The AST can be
rendered back to source, differentiated symbolically, evaluated over complex
numbers, and compiled into a flat register program that the integrator
kernels execute.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' factor)?
    base   := number | symbol | func '(' expr ')' | '(' expr ')' | '-' factor

``i`` is the imaginary unit and ``pi`` is 3.14159...; neither can be used as
a variable name.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Div", "Pow", "Neg", "Func",
    "FUNCTIONS", "RESERVED",
    "ExprSyntaxError", "UnboundSymbolError", "SingularEvaluationError",
    "parse", "render", "diff", "evaluate", "free_symbols", "substitute",
    "Program", "compile_program",
]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "log", "sqrt")
RESERVED = {"i": 1j, "pi": math.pi}

# |denominator| at or below this counts as a pole
SINGULAR_EPS = 1e-300


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, source: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.source = source


class UnboundSymbolError(KeyError):
    pass


class SingularEvaluationError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# AST

class Expr:
    """Base class of all expression nodes.  Nodes are frozen dataclasses."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __pow__(self, other):
        return power(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return render(self)

    def eval(self, env: Mapping[str, complex]) -> complex:
        return evaluate(self, env)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


ZERO = Const(0)
ONE = Const(1)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return Var(x)
    return Const(x)


def _is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _int_exponent(e: Expr):
    """Return the exponent as ``int`` when it is an integer-valued constant."""
    if isinstance(e, Const) and e.value.imag == 0 and e.value.real.is_integer():
        return int(e.value.real)
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        k = _int_exponent(e.arg)
        return None if k is None else -k
    return None


# smart constructors: constant folding and 0/1 identities only

def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return ZERO
    if _is_const(a) and _is_const(b) and b.value != 0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0):
        return ONE
    if _is_const(b, 1):
        return a
    if _is_const(a) and _int_exponent(b) is not None and a.value != 0:
        return Const(a.value ** _int_exponent(b))
    return Pow(a, b)


def func(name: str, a: Expr) -> Expr:
    return Func(name, a)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    toks = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos, src)
        kind = m.lastgroup
        start = m.start(kind)
        text = m.group(kind)
        end = m.end()
        # "2x" or "1.5e" style run-ons are malformed numbers
        if kind == "num" and end < n and (src[end].isalnum() or src[end] in "_."):
            raise ExprSyntaxError(f"malformed number {src[start:end + 1]!r}", start, src)
        toks.append((kind, text, start))
        pos = end
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, tok[2], self.src)

    def expect(self, op):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != op:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            self.fail(f"expected {op!r}, found {found}")
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Add(e, Neg(rhs))
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self):
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(b, self.factor())
        return b

    def base(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(float(text))
        if kind == "name":
            self.take()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos, self.src)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            if text in FUNCTIONS:
                self.fail(f"function {text!r} needs an argument", nxt)
            if text in RESERVED:
                return Const(RESERVED[text])
            return Var(text)
        if kind == "op" and text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        if kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected token {text!r}")


def parse(source: str) -> Expr:
    """Parse DSL source into an AST.  Unknown symbols are fine here; they
    only need a binding at evaluation time."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Rendering

# binding strength: sum < product < unary minus < power < atom
_PREC = {Add: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_real(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _render_const(c: complex) -> tuple[str, int]:
    re_, im = c.real, c.imag
    if not (math.isfinite(re_) and math.isfinite(im)):
        raise ValueError(f"cannot render non-finite constant {c!r}")
    if im == 0 and re_ >= 0 and math.copysign(1.0, re_) > 0:
        return _fmt_real(re_), 5
    if re_ == 0 and im == 1 and math.copysign(1.0, re_) > 0:
        return "i", 5
    if im == 0:
        return "-" + _fmt_real(-re_), 3
    if re_ == 0:
        return f"{_fmt_real(im)}*i", 2
    sign = "+" if im >= 0 else "-"
    return f"{_fmt_real(re_)} {sign} {_fmt_real(abs(im))}*i", 1


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _render_const(e.value)
    if isinstance(e, Var):
        return e.name, 5
    if isinstance(e, Func):
        return f"{e.name}({_render(e.arg)[0]})", 5
    if isinstance(e, Neg):
        s, p = _render(e.arg)
        # -factor: the operand may be a power or anything tighter
        return "-" + (s if p >= 3 else f"({s})"), 3
    if isinstance(e, Pow):
        bs, bp = _render(e.base)
        es, ep = _render(e.exponent)
        bs = bs if bp >= 5 else f"({bs})"
        es = es if ep >= 3 else f"({es})"
        return f"{bs}^{es}", 4
    if isinstance(e, Add):
        ls, lp = _render(e.left)
        ls = ls if lp >= 1 else f"({ls})"
        if isinstance(e.right, Neg):
            rs, rp = _render(e.right.arg)
            return f"{ls} - {rs if rp >= 2 else f'({rs})'}", 1
        rs, rp = _render(e.right)
        # a leading '-' on the right operand would be read back as subtraction
        return f"{ls} + {rs if rp >= 2 and not rs.startswith('-') else f'({rs})'}", 1
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        ls, lp = _render(e.left)
        rs, rp = _render(e.right)
        ls = ls if lp >= 2 else f"({ls})"
        rs = rs if rp >= 3 else f"({rs})"
        return f"{ls}{op}{rs}", 2
    raise TypeError(f"not an expression: {e!r}")


def render(e: Expr) -> str:
    """Source text for ``e``.  ``parse(render(e)) == e`` holds for trees whose
    constants are non-negative reals or ``i``; other constants round-trip by
    value."""
    return _render(e)[0]


# ---------------------------------------------------------------------------
# Symbolic operations

def free_symbols(e: Expr) -> frozenset[str]:
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Add, Mul, Div)):
            stack += [node.left, node.right]
        elif isinstance(node, Pow):
            stack += [node.base, node.exponent]
        elif isinstance(node, (Neg, Func)):
            stack.append(node.arg)
    return frozenset(out)


def substitute(e: Expr, bindings: Mapping[str, Expr | complex]) -> Expr:
    """Replace variables by expressions (or numbers), folding constants."""
    b = {k: _lift(v) for k, v in bindings.items()}

    def go(node):
        if isinstance(node, Var):
            return b.get(node.name, node)
        if isinstance(node, Const):
            return node
        if isinstance(node, Add):
            return add(go(node.left), go(node.right))
        if isinstance(node, Mul):
            return mul(go(node.left), go(node.right))
        if isinstance(node, Div):
            return div(go(node.left), go(node.right))
        if isinstance(node, Pow):
            return power(go(node.base), go(node.exponent))
        if isinstance(node, Neg):
            return neg(go(node.arg))
        if isinstance(node, Func):
            arg = go(node.arg)
            if isinstance(arg, Const):
                try:
                    return Const(_apply_func(node.name, arg.value))
                except SingularEvaluationError:
                    pass
            return Func(node.name, arg)
        raise TypeError(node)

    return go(e)


def diff(e: Expr, v: str) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol ``v``."""
    if v not in free_symbols(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(diff(e.left, v), diff(e.right, v))
    if isinstance(e, Neg):
        return neg(diff(e.arg, v))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, v), e.right), mul(e.left, diff(e.right, v)))
    if isinstance(e, Div):
        da, db = diff(e.left, v), diff(e.right, v)
        if _is_const(db, 0):
            return div(da, e.right)
        num = add(mul(da, e.right), neg(mul(e.left, db)))
        return div(num, power(e.right, Const(2)))
    if isinstance(e, Pow):
        f, g = e.base, e.exponent
        if v not in free_symbols(g):
            # g * f^(g-1) * f'
            k = _int_exponent(g)
            g1 = Const(k - 1) if k is not None else add(g, Const(-1))
            return mul(mul(g, power(f, g1)), diff(f, v))
        # d f^g = f^g * (g' log f + g f'/f)
        inner = add(mul(diff(g, v), Func("log", f)), div(mul(g, diff(f, v)), f))
        return mul(e, inner)
    if isinstance(e, Func):
        u, du = e.arg, diff(e.arg, v)
        name = e.name
        if name == "sin":
            d = Func("cos", u)
        elif name == "cos":
            d = neg(Func("sin", u))
        elif name == "tan":
            d = div(ONE, power(Func("cos", u), Const(2)))
        elif name == "sinh":
            d = Func("cosh", u)
        elif name == "cosh":
            d = Func("sinh", u)
        elif name == "exp":
            d = e
        elif name == "log":
            return div(du, u)
        elif name == "sqrt":
            return div(du, mul(Const(2), e))
        else:  # pragma: no cover - Func validates names
            raise ValueError(name)
        return mul(d, du)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation

def _checked_div(a: complex, b: complex) -> complex:
    if abs(b) <= SINGULAR_EPS:
        raise SingularEvaluationError("division by zero")
    return a / b


def _int_pow(z: complex, k: int) -> complex:
    if k < 0:
        if abs(z) <= SINGULAR_EPS:
            raise SingularEvaluationError("negative power of zero")
        return 1.0 / _int_pow(z, -k)
    result = 1.0 + 0j
    base = z
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def _general_pow(z: complex, w: complex) -> complex:
    if z == 0:
        if w.real > 0:
            return 0j
        raise SingularEvaluationError("non-positive power of zero")
    return cmath.exp(w * cmath.log(z))


def _apply_func(name: str, z: complex) -> complex:
    if name == "log":
        if abs(z) <= SINGULAR_EPS:
            raise SingularEvaluationError("log of zero")
        return cmath.log(z)
    if name == "tan":
        c = cmath.cos(z)
        return _checked_div(cmath.sin(z), c)
    return _CMATH[name](z)


_CMATH = {
    "sin": cmath.sin, "cos": cmath.cos, "sinh": cmath.sinh, "cosh": cmath.cosh,
    "exp": cmath.exp, "sqrt": cmath.sqrt,
}


def evaluate(e: Expr, env: Mapping[str, complex]) -> complex:
    """Evaluate ``e`` with principal branches for log, sqrt and non-integer
    powers."""
    def go(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            try:
                return complex(env[node.name])
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        if isinstance(node, Add):
            return go(node.left) + go(node.right)
        if isinstance(node, Mul):
            return go(node.left) * go(node.right)
        if isinstance(node, Div):
            return _checked_div(go(node.left), go(node.right))
        if isinstance(node, Neg):
            return -go(node.arg)
        if isinstance(node, Pow):
            k = _int_exponent(node.exponent)
            if k is not None:
                return _int_pow(go(node.base), k)
            return _general_pow(go(node.base), go(node.exponent))
        if isinstance(node, Func):
            return _apply_func(node.name, go(node.arg))
        raise TypeError(f"not an expression: {node!r}")

    try:
        return go(e)
    except OverflowError as exc:
        raise SingularEvaluationError(f"overflow: {exc}") from None


# ---------------------------------------------------------------------------
# Register programs

# opcodes shared with the kernels
OP_CONST, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG, OP_POWI, OP_POW = range(8)
OP_SIN, OP_COS, OP_TAN, OP_SINH, OP_COSH, OP_EXP, OP_LOG, OP_SQRT = range(8, 16)
_FUNC_OPS = dict(zip(FUNCTIONS, range(OP_SIN, OP_SQRT + 1)))


@dataclass(frozen=True)
class Program:
    """Straight-line code evaluating several expressions at once.

    Registers ``0..n_inputs-1`` hold the inputs; instruction ``k`` writes
    register ``n_inputs + k``.  ``outputs[j] == -1`` marks an output that is
    identically zero.
    """
    inputs: tuple[str, ...]
    ops: np.ndarray       # int32
    arg0: np.ndarray      # int32, register or constant index
    arg1: np.ndarray      # int32, register or integer exponent
    consts: np.ndarray    # complex128
    outputs: np.ndarray   # int32

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_registers(self) -> int:
        return self.n_inputs + len(self.ops)

    def __len__(self):
        return len(self.ops)


def compile_program(exprs: Sequence[Expr], inputs: Sequence[str]) -> Program:
    """Compile ``exprs`` into one program with shared subexpressions."""
    inputs = tuple(inputs)
    reg_of: dict = {}
    ops, a0, a1 = [], [], []
    consts: list[complex] = []
    const_idx: dict = {}
    n_in = len(inputs)
    for k, name in enumerate(inputs):
        reg_of[Var(name)] = k

    def emit(op, x, y, key):
        ops.append(op)
        a0.append(x)
        a1.append(y)
        r = n_in + len(ops) - 1
        reg_of[key] = r
        return r

    def const(c: complex):
        key = ("c", c)
        if key in reg_of:
            return reg_of[key]
        if c not in const_idx:
            const_idx[c] = len(consts)
            consts.append(c)
        return emit(OP_CONST, const_idx[c], 0, key)

    def go(node):
        if node in reg_of:
            return reg_of[node]
        if isinstance(node, Const):
            return const(node.value)
        if isinstance(node, Var):
            raise UnboundSymbolError(node.name)
        if isinstance(node, Add):
            if isinstance(node.right, Neg):
                return emit(OP_SUB, go(node.left), go(node.right.arg), node)
            return emit(OP_ADD, go(node.left), go(node.right), node)
        if isinstance(node, Mul):
            return emit(OP_MUL, go(node.left), go(node.right), node)
        if isinstance(node, Div):
            return emit(OP_DIV, go(node.left), go(node.right), node)
        if isinstance(node, Neg):
            return emit(OP_NEG, go(node.arg), 0, node)
        if isinstance(node, Pow):
            k = _int_exponent(node.exponent)
            if k is not None:
                return emit(OP_POWI, go(node.base), k, node)
            return emit(OP_POW, go(node.base), go(node.exponent), node)
        if isinstance(node, Func):
            return emit(_FUNC_OPS[node.name], go(node.arg), 0, node)
        raise TypeError(node)

    outs = []
    for e in exprs:
        outs.append(-1 if _is_const(e, 0) else go(e))
    return Program(
        inputs=inputs,
        ops=np.asarray(ops, dtype=np.int32),
        arg0=np.asarray(a0, dtype=np.int32),
        arg1=np.asarray(a1, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.complex128),
        outputs=np.asarray(outs, dtype=np.int32),
    )
