"""Scalar coordinate expressions: parsing, evaluation, symbolic differentiation.

Grammar, with operators listed from loosest to tightest binding::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?        # right-associative
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Coordinates are named ``x1 .. xn`` and map to 0-based axes internally;
the admissible functions are sin, cos, tan, exp, log, sqrt.  Numeric
literals are IEEE doubles.

Expression trees are immutable, so they can be evaluated concurrently.
Derivatives are built symbolically through constant-folding constructors
(no general simplification), which keeps second derivatives of hand-written
metric components compact enough for fast repeated evaluation.  For hot
loops, `compile_grid` turns an object array of expressions into a single
compiled Python function.
"""

import math
import re

import numpy as np

from .errors import EvalDomainError, ExprSyntaxError, UnknownIdentifierError

__all__ = [
    "Expr", "Num", "Var", "parse_expr", "evaluate", "diff",
    "substitute", "compile_grid", "grid_map", "FUNCTIONS",
]


def _pow(base, exponent):
    """Float power with domain errors instead of complex results."""
    try:
        return math.pow(base, exponent)
    except ValueError:
        raise EvalDomainError(f"invalid power {base!r} ^ {exponent!r}") from None
    except OverflowError:
        raise EvalDomainError(f"overflow in power {base!r} ^ {exponent!r}") from None


def _log(v):
    if v <= 0.0:
        raise EvalDomainError(f"log of nonpositive value {v!r}")
    return math.log(v)


def _sqrt(v):
    if v < 0.0:
        raise EvalDomainError(f"sqrt of negative value {v!r}")
    return math.sqrt(v)


FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": _log,
    "sqrt": _sqrt,
}

# precedence levels used for parenthesization when printing
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expr:
    """Immutable expression tree node."""

    __slots__ = ()
    prec = _PREC_ATOM

    def eval(self, point):
        raise NotImplementedError

    def diff(self, axis):
        raise NotImplementedError

    def _py(self):
        """Python source fragment used by `compile_grid`."""
        raise NotImplementedError

    def __str__(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self})"

    # operator sugar so tensor-building code reads like formulas
    def __add__(self, other):
        return _add(self, _coerce(other))

    def __radd__(self, other):
        return _add(_coerce(other), self)

    def __sub__(self, other):
        return _sub(self, _coerce(other))

    def __rsub__(self, other):
        return _sub(_coerce(other), self)

    def __mul__(self, other):
        return _mul(self, _coerce(other))

    def __rmul__(self, other):
        return _mul(_coerce(other), self)

    def __truediv__(self, other):
        return _div(self, _coerce(other))

    def __rtruediv__(self, other):
        return _div(_coerce(other), self)

    def __pow__(self, other):
        return _powc(self, _coerce(other))

    def __neg__(self):
        return _neg(self)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", float(value))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def eval(self, point):
        return self.value

    def diff(self, axis):
        return _ZERO

    def _py(self):
        return repr(self.value)

    def __str__(self):
        return repr(self.value)


class Var(Expr):
    """Coordinate variable; `index` is the 0-based axis (prints as x{index+1})."""

    __slots__ = ("index",)

    def __init__(self, index):
        object.__setattr__(self, "index", int(index))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def eval(self, point):
        return point[self.index]

    def diff(self, axis):
        return _ONE if self.index == axis else _ZERO

    def _py(self):
        return f"p[{self.index}]"

    def __str__(self):
        return f"x{self.index + 1}"


class _Binary(Expr):
    __slots__ = ("left", "right")
    symbol = "?"

    def __init__(self, left, right):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def _wrap_left(self):
        s = str(self.left)
        need = self.left.prec < self.prec or (
            self.prec == _PREC_POW and self.left.prec == _PREC_POW)
        return f"({s})" if need else s

    def _wrap_right(self):
        s = str(self.right)
        need = self.right.prec < self.prec or (
            self.right.prec == self.prec and type(self) in (Sub, Div))
        return f"({s})" if need else s


class Add(_Binary):
    __slots__ = ()
    prec = _PREC_ADD
    symbol = "+"

    def eval(self, point):
        return self.left.eval(point) + self.right.eval(point)

    def diff(self, axis):
        return _add(self.left.diff(axis), self.right.diff(axis))

    def _py(self):
        return f"({self.left._py()}+{self.right._py()})"

    def __str__(self):
        return f"{self._wrap_left()} + {self._wrap_right()}"


class Sub(_Binary):
    __slots__ = ()
    prec = _PREC_ADD
    symbol = "-"

    def eval(self, point):
        return self.left.eval(point) - self.right.eval(point)

    def diff(self, axis):
        return _sub(self.left.diff(axis), self.right.diff(axis))

    def _py(self):
        return f"({self.left._py()}-{self.right._py()})"

    def __str__(self):
        return f"{self._wrap_left()} - {self._wrap_right()}"


class Mul(_Binary):
    __slots__ = ()
    prec = _PREC_MUL
    symbol = "*"

    def eval(self, point):
        return self.left.eval(point) * self.right.eval(point)

    def diff(self, axis):
        return _add(_mul(self.left.diff(axis), self.right),
                    _mul(self.left, self.right.diff(axis)))

    def _py(self):
        return f"({self.left._py()}*{self.right._py()})"

    def __str__(self):
        return f"{self._wrap_left()}*{self._wrap_right()}"


class Div(_Binary):
    __slots__ = ()
    prec = _PREC_MUL
    symbol = "/"

    def eval(self, point):
        denom = self.right.eval(point)
        if denom == 0.0:
            raise EvalDomainError("division by zero")
        return self.left.eval(point) / denom

    def diff(self, axis):
        # (u/v)' = (u'v - uv') / v^2
        num = _sub(_mul(self.left.diff(axis), self.right),
                   _mul(self.left, self.right.diff(axis)))
        return _div(num, _mul(self.right, self.right))

    def _py(self):
        return f"({self.left._py()}/{self.right._py()})"

    def __str__(self):
        return f"{self._wrap_left()}/{self._wrap_right()}"


class Pow(_Binary):
    __slots__ = ()
    prec = _PREC_POW
    symbol = "^"

    def eval(self, point):
        return _pow(self.left.eval(point), self.right.eval(point))

    def diff(self, axis):
        u, v = self.left, self.right
        if isinstance(v, Num):
            # d(u^c) = c * u^(c-1) * u'
            return _mul(_mul(v, _powc(u, Num(v.value - 1.0))), u.diff(axis))
        # d(u^v) = u^v * (v' log u + v u'/u)
        term = _add(_mul(v.diff(axis), _call("log", u)),
                    _mul(v, _div(u.diff(axis), u)))
        return _mul(self, term)

    def _py(self):
        return f"_pow({self.left._py()},{self.right._py()})"

    def __str__(self):
        return f"{self._wrap_left()}^{self._wrap_right()}"


class Neg(Expr):
    __slots__ = ("arg",)
    prec = _PREC_NEG

    def __init__(self, arg):
        object.__setattr__(self, "arg", arg)

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def eval(self, point):
        return -self.arg.eval(point)

    def diff(self, axis):
        return _neg(self.arg.diff(axis))

    def _py(self):
        return f"(-{self.arg._py()})"

    def __str__(self):
        # parenthesize only sums: "-a*b" reparses to the equal -(a*b) and
        # stays printed-form stable, while "-(a + b)" genuinely needs parens
        s = str(self.arg)
        return f"-({s})" if self.arg.prec < _PREC_MUL else f"-{s}"


class Call(Expr):
    __slots__ = ("fname", "arg")

    def __init__(self, fname, arg):
        object.__setattr__(self, "fname", fname)
        object.__setattr__(self, "arg", arg)

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def eval(self, point):
        return FUNCTIONS[self.fname](self.arg.eval(point))

    def diff(self, axis):
        u = self.arg
        du = u.diff(axis)
        f = self.fname
        if f == "sin":
            outer = _call("cos", u)
        elif f == "cos":
            outer = _neg(_call("sin", u))
        elif f == "tan":
            c = _call("cos", u)
            outer = _div(_ONE, _mul(c, c))
        elif f == "exp":
            outer = self
        elif f == "log":
            outer = _div(_ONE, u)
        else:  # sqrt
            outer = _div(_ONE, _mul(Num(2.0), self))
        return _mul(outer, du)

    def _py(self):
        return f"{self.fname}({self.arg._py()})"

    def __str__(self):
        return f"{self.fname}({self.arg})"


_ZERO = Num(0.0)
_ONE = Num(1.0)


def _coerce(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return Num(v)
    raise TypeError(f"cannot use {type(v).__name__} as an expression")


def _is_num(e, value=None):
    return isinstance(e, Num) and (value is None or e.value == value)


def _add(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is_num(b) and b.value != 0.0:
        if _is_num(a):
            return Num(a.value / b.value)
        if b.value == 1.0:
            return a
    if _is_num(a, 0.0):
        return _ZERO
    return Div(a, b)


def _powc(a, b):
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return _ONE
    if _is_num(a) and _is_num(b):
        try:
            return Num(math.pow(a.value, b.value))
        except (ValueError, OverflowError):
            pass
    return Pow(a, b)


def _neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _call(fname, arg):
    if _is_num(arg):
        try:
            return Num(FUNCTIONS[fname](arg.value))
        except (EvalDomainError, ValueError, OverflowError):
            pass
    return Call(fname, arg)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_VAR_RE = re.compile(r"x([1-9]\d*)$")


class _Parser:
    def __init__(self, text, n):
        self.text = text
        self.n = n
        self.pos = 0

    def error(self, message, offset=None):
        raise ExprSyntaxError(message, self.pos if offset is None else offset)

    def next_token(self):
        if self.pos >= len(self.text):
            return None, None, self.pos
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None or m.end() == self.pos:
            # skip whitespace manually to report the right offset
            i = self.pos
            while i < len(self.text) and self.text[i].isspace():
                i += 1
            if i >= len(self.text):
                self.pos = i
                return None, None, i
            raise ExprSyntaxError(f"unexpected character {self.text[i]!r}", i)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        self.pos = m.end()
        if m.group("num") is not None:
            return "num", m.group("num"), start
        if m.group("ident") is not None:
            return "ident", m.group("ident"), start
        return "op", m.group("op"), start

    def peek(self):
        save = self.pos
        tok = self.next_token()
        self.pos = save
        return tok

    def parse(self):
        e = self.parse_expr()
        kind, value, offset = self.peek()
        if kind is not None:
            raise ExprSyntaxError(f"unexpected trailing input {value!r}", offset)
        return e

    # parsing is purely structural (no folding): the printed normal form of
    # any tree must reparse to a tree with the same printed form
    def parse_expr(self):
        e = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next_token()
                rhs = self.parse_term()
                e = Add(e, rhs) if value == "+" else Sub(e, rhs)
            else:
                return e

    def parse_term(self):
        e = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next_token()
                rhs = self.parse_unary()
                e = Mul(e, rhs) if value == "*" else Div(e, rhs)
            else:
                return e

    def parse_unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next_token()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.next_token()
            return Pow(base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, value, offset = self.next_token()
        if kind is None:
            raise ExprSyntaxError("unexpected end of input", offset)
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in FUNCTIONS:
                    raise UnknownIdentifierError(value, offset)
                self.next_token()
                arg = self.parse_expr()
                self.expect(")")
                return Call(value, arg)
            m = _VAR_RE.match(value)
            if m is not None:
                idx = int(m.group(1))
                if 1 <= idx <= self.n:
                    return Var(idx - 1)
            raise UnknownIdentifierError(value, offset)
        if value == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected token {value!r}", offset)

    def expect(self, op):
        kind, value, offset = self.next_token()
        if kind != "op" or value != op:
            got = "end of input" if kind is None else repr(value)
            raise ExprSyntaxError(f"expected {op!r}, got {got}", offset)


def parse_expr(text: str, n: int) -> Expr:
    """Parse `text` over coordinates x1..xn into an expression tree.

    Raises ExprSyntaxError (with byte offset) on malformed input and
    UnknownIdentifierError on names outside the grammar.
    """
    if not text or text.isspace():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, n).parse()


def evaluate(e: Expr, point) -> float:
    """Evaluate `e` at a point (any indexable of floats)."""
    return e.eval(point)


def diff(e: Expr, axis: int) -> Expr:
    """Symbolic partial derivative of `e` along the 0-based coordinate axis."""
    return e.diff(axis)


def substitute(e: Expr, replacements) -> Expr:
    """Replace each Var(i) by replacements[i]; used for chart composition."""
    if isinstance(e, Var):
        return replacements[e.index]
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return _neg(substitute(e.arg, replacements))
    if isinstance(e, Call):
        return _call(e.fname, substitute(e.arg, replacements))
    ctor = {Add: _add, Sub: _sub, Mul: _mul, Div: _div, Pow: _powc}[type(e)]
    return ctor(substitute(e.left, replacements), substitute(e.right, replacements))


def grid_map(fn, grid):
    """Apply `fn` elementwise to an object array of expressions."""
    out = np.empty(grid.shape, dtype=object)
    flat_in = grid.reshape(-1)
    flat_out = out.reshape(-1)
    for i, e in enumerate(flat_in):
        flat_out[i] = fn(e)
    return out


def compile_grid(grid):
    """Compile an object array of expressions into `f(point) -> ndarray`.

    The whole grid is emitted as one Python tuple expression, which is far
    faster than per-node recursive evaluation inside integration loops.
    Domain violations surface as EvalDomainError, matching `evaluate`.
    """
    grid = np.asarray(grid, dtype=object)
    shape = grid.shape
    exprs = [(_coerce(e) if not isinstance(e, Expr) else e) for e in grid.reshape(-1)]
    body = ",".join(e._py() for e in exprs)
    if len(exprs) == 1:
        body += ","
    src = f"def _grid(p):\n    return ({body})"
    ns = dict(FUNCTIONS)
    ns["_pow"] = _pow
    exec(src, ns)  # noqa: S102 - source is generated from our own AST
    raw = ns["_grid"]

    def run(point):
        try:
            values = raw(point)
        except ZeroDivisionError:
            raise EvalDomainError("division by zero") from None
        return np.array(values, dtype=float).reshape(shape)

    return run
