"""Rational expressions in the variables x, y, z over complex coefficients.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' exponent)?      # '^' binds tighter than unary minus
    atom    := number | 'i' | 'x' | 'y' | 'z' | '(' expr ')'
    exponent:= ('+' | '-')? digits       # integers only

``i`` is the imaginary unit, reserved; exponents must be integer literals
(negative allowed). Values are binary64 complex pairs. No simplification is
performed anywhere: derivatives may grow, all downstream use is pointwise
evaluation.
"""

from __future__ import annotations

import re

from .errors import LiftError

__all__ = [
    "RationalExpr",
    "ExprSyntaxError",
    "DivisionByZero",
    "parse",
    "evaluate",
    "derivative",
    "render",
    "compile_fn",
    "uses_variable",
]

VARIABLES = ("x", "y", "z")


class ExprSyntaxError(LiftError):
    """Raised by parse(); carries the 0-based position of the offending token."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"syntax error at position {position}: {message}")


class DivisionByZero(LiftError):
    """Raised on evaluation when a denominator vanishes at the point."""

    def __init__(self, subexpr):
        self.subexpr = subexpr
        super().__init__(f"division by zero in subexpression '{subexpr}'")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class RationalExpr:
    """Immutable AST node. Subclasses implement eval_at / diff / _render."""

    precedence = 5

    def eval_at(self, x, y, z):
        raise NotImplementedError

    def diff(self, var):
        raise NotImplementedError

    def _render(self):
        raise NotImplementedError

    def _pysrc(self):
        """Python-syntax source for compile_fn (``**`` instead of ``^``)."""
        raise NotImplementedError

    def variables(self):
        """Set of variable names appearing in the expression."""
        out = set()
        self._collect_vars(out)
        return out

    def _collect_vars(self, out):
        pass

    def __str__(self):
        return self._render()

    def __repr__(self):
        return f"{type(self).__name__}({self._render()!r})"


class Const(RationalExpr):
    def __init__(self, value):
        self.value = complex(value)

    def eval_at(self, x, y, z):
        return self.value

    def diff(self, var):
        return Const(0.0)

    def _render(self):
        v = self.value
        if v.imag == 0.0:
            s = repr(v.real)
            return s if v.real >= 0 else f"({s})"
        if v.real == 0.0:
            if v.imag == 1.0:
                return "i"
            return f"({repr(v.imag)}*i)"
        re_s, im_s = repr(v.real), repr(abs(v.imag))
        sign = "+" if v.imag >= 0 else "-"
        return f"({re_s}{sign}{im_s}*i)"

    def _pysrc(self):
        return f"complex({self.value.real!r},{self.value.imag!r})"


class Var(RationalExpr):
    def __init__(self, name):
        if name not in VARIABLES:
            raise ValueError(f"unknown variable {name!r}")
        self.name = name
        self.index = VARIABLES.index(name)

    def eval_at(self, x, y, z):
        return (x, y, z)[self.index]

    def diff(self, var):
        return Const(1.0 if var == self.name else 0.0)

    def _render(self):
        return self.name

    def _pysrc(self):
        return self.name

    def _collect_vars(self, out):
        out.add(self.name)


class _Unary(RationalExpr):
    def __init__(self, arg):
        self.arg = arg

    def _collect_vars(self, out):
        self.arg._collect_vars(out)


class _Binary(RationalExpr):
    def __init__(self, left, right):
        self.left = left
        self.right = right

    def _collect_vars(self, out):
        self.left._collect_vars(out)
        self.right._collect_vars(out)

    def _wrap(self, node, tighter=False):
        p = node.precedence
        if p < self.precedence or (tighter and p == self.precedence):
            return f"({node._render()})"
        return node._render()


class Neg(_Unary):
    precedence = 3

    def eval_at(self, x, y, z):
        return -self.arg.eval_at(x, y, z)

    def diff(self, var):
        return Neg(self.arg.diff(var))

    def _render(self):
        inner = self.arg._render()
        if self.arg.precedence < self.precedence:
            inner = f"({inner})"
        return f"-{inner}"

    def _pysrc(self):
        return f"(-({self.arg._pysrc()}))"


class Add(_Binary):
    precedence = 1

    def eval_at(self, x, y, z):
        return self.left.eval_at(x, y, z) + self.right.eval_at(x, y, z)

    def diff(self, var):
        return Add(self.left.diff(var), self.right.diff(var))

    def _render(self):
        return f"{self._wrap(self.left)} + {self._wrap(self.right)}"

    def _pysrc(self):
        return f"({self.left._pysrc()}+{self.right._pysrc()})"


class Sub(_Binary):
    precedence = 1

    def eval_at(self, x, y, z):
        return self.left.eval_at(x, y, z) - self.right.eval_at(x, y, z)

    def diff(self, var):
        return Sub(self.left.diff(var), self.right.diff(var))

    def _render(self):
        return f"{self._wrap(self.left)} - {self._wrap(self.right, tighter=True)}"

    def _pysrc(self):
        return f"({self.left._pysrc()}-{self.right._pysrc()})"


class Mul(_Binary):
    precedence = 2

    def eval_at(self, x, y, z):
        return self.left.eval_at(x, y, z) * self.right.eval_at(x, y, z)

    def diff(self, var):
        return Add(Mul(self.left.diff(var), self.right),
                   Mul(self.left, self.right.diff(var)))

    def _render(self):
        return f"{self._wrap(self.left)}*{self._wrap(self.right)}"

    def _pysrc(self):
        return f"({self.left._pysrc()}*{self.right._pysrc()})"


class Div(_Binary):
    precedence = 2

    def eval_at(self, x, y, z):
        den = self.right.eval_at(x, y, z)
        if den == 0:
            raise DivisionByZero(self.right._render())
        return self.left.eval_at(x, y, z) / den

    def diff(self, var):
        # quotient rule; no cancellation attempted
        num = Sub(Mul(self.left.diff(var), self.right),
                  Mul(self.left, self.right.diff(var)))
        return Div(num, Pow(self.right, 2))

    def _render(self):
        return f"{self._wrap(self.left)}/{self._wrap(self.right, tighter=True)}"

    def _pysrc(self):
        return f"({self.left._pysrc()}/{self.right._pysrc()})"


class Pow(RationalExpr):
    precedence = 4

    def __init__(self, base, exponent):
        self.base = base
        self.exponent = int(exponent)

    def eval_at(self, x, y, z):
        b = self.base.eval_at(x, y, z)
        if self.exponent < 0 and b == 0:
            raise DivisionByZero(self._render())
        return b ** self.exponent

    def diff(self, var):
        n = self.exponent
        if n == 0:
            return Const(0.0)
        return Mul(Mul(Const(n), Pow(self.base, n - 1)), self.base.diff(var))

    def _render(self):
        base = self.base._render()
        if not isinstance(self.base, Var):
            base = f"({base})"
        if self.exponent < 0:
            return f"{base}^({self.exponent})"
        return f"{base}^{self.exponent}"

    def _pysrc(self):
        return f"(({self.base._pysrc()})**({self.exponent}))"

    def _collect_vars(self, out):
        self.base._collect_vars(out)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_TOKEN_OPS = set("+-*/^()")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind          # 'num' | 'ident' | one of +-*/^() | 'end'
        self.text = text
        self.pos = pos


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_OPS:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(_Token("num", m.group(0), i))
            i = m.end()
            continue
        if ch.isalpha():
            j = i
            while j < n and text[j].isalpha():
                j += 1
            tokens.append(_Token("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            rhs = self.parse_term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            rhs = self.parse_factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def parse_factor(self):
        if self.peek().kind == "-":
            self.advance()
            return Neg(self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "^":
            self.advance()
            return Pow(base, self.parse_exponent())
        return base

    def parse_exponent(self):
        sign = 1
        tok = self.peek()
        if tok.kind in ("+", "-"):
            self.advance()
            sign = -1 if tok.kind == "-" else 1
            tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.parse_exponent()
            self.expect(")")
            return sign * inner
        if tok.kind != "num":
            raise ExprSyntaxError("exponent must be an integer literal", tok.pos)
        self.advance()
        if any(c in tok.text for c in ".eE"):
            raise ExprSyntaxError(f"exponent {tok.text!r} is not an integer", tok.pos)
        return sign * int(tok.text)

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "i":
                return Const(1j)
            if tok.text in VARIABLES:
                return Var(tok.text)
            raise ExprSyntaxError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected token {tok.text or 'end of input'!r}", tok.pos)


# ---------------------------------------------------------------------------
# Public interface
# ---------------------------------------------------------------------------

def parse(text: str) -> RationalExpr:
    """Parse ``text`` into an expression tree."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"trailing input {tok.text!r}", tok.pos)
    return node


def evaluate(e: RationalExpr, point) -> complex:
    """Evaluate ``e`` at a point in C^3 (shorter tuples are zero-padded)."""
    coords = list(point) + [0.0] * (3 - len(point))
    return complex(e.eval_at(complex(coords[0]), complex(coords[1]), complex(coords[2])))


def derivative(e: RationalExpr, var: str) -> RationalExpr:
    """Exact symbolic partial derivative with respect to 'x', 'y' or 'z'."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return e.diff(var)


def render(e: RationalExpr) -> str:
    """String form that re-parses to an expression with identical evaluation."""
    return e._render()


def uses_variable(e: RationalExpr, var: str) -> bool:
    return var in e.variables()


def compile_fn(e: RationalExpr):
    """Compile to a fast callable ``f(x, y, z)``.

    The callable accepts complex scalars or numpy arrays and evaluates the
    same tree; unlike :func:`evaluate` it does not identify the offending
    subexpression on division by zero (scalars raise ZeroDivisionError,
    arrays produce non-finite values). Intended for pole-free hot loops.
    """
    src = "lambda x, y, z: " + e._pysrc()
    return eval(compile(src, "<rational-expr>", "eval"), {"__builtins__": {"complex": complex}})
