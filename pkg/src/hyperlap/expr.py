"""Complex-analytic expression AST: parser, printer, evaluator, differentiator.

The grammar is documented in docs/expr.md.  Evaluation is vectorized: every
node evaluates on numpy arrays of complex points as well as on scalars.
``log`` carries an explicit branch-cut angle theta (the cut is the ray
e^{i*theta}*[0, oo) in its *argument*); the value is ln|w| + i*arg(w) with
arg(w) in (theta - 2*pi, theta].  The default theta = pi is the principal
branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ExprSyntaxError, UnknownIdentifier

TWO_PI = 2.0 * math.pi


class Expr:
    """Base class; nodes are immutable and hashable."""

    def __add__(self, other):
        return Add(self, _as_expr(other))

    def __radd__(self, other):
        return Add(_as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, _as_expr(other))

    def __rsub__(self, other):
        return Sub(_as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, _as_expr(other))

    def __rmul__(self, other):
        return Mul(_as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return Div(_as_expr(other), self)

    def __pow__(self, k: int):
        return Pow(self, int(k))

    def __neg__(self):
        return Neg(self)


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(complex(x))


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def __post_init__(self):
        if isinstance(self.b, Const) and self.b.value == 0:
            raise ZeroDivisionError("static zero denominator")


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    k: int


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True)
class ExpF(Expr):
    a: Expr


@dataclass(frozen=True)
class LogF(Expr):
    a: Expr
    cut: float = math.pi  # cut ray angle of the argument; pi = principal


@dataclass(frozen=True)
class SqrtF(Expr):
    a: Expr


def log_cut(w, theta: float):
    """log with branch cut along e^{i*theta}*[0,oo); arg in (theta-2pi, theta]."""
    w = np.asarray(w, dtype=complex)
    ang = np.angle(w)
    ang = theta - np.mod(theta - ang, TWO_PI)
    out = np.log(np.abs(w)) + 1j * ang
    return out if out.shape else complex(out)


def evaluate(e: Expr, env: dict):
    """Evaluate on an environment of scalars or numpy arrays."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifier(f"variable {e.name!r} not bound") from None
    if isinstance(e, Add):
        return evaluate(e.a, env) + evaluate(e.b, env)
    if isinstance(e, Sub):
        return evaluate(e.a, env) - evaluate(e.b, env)
    if isinstance(e, Mul):
        return evaluate(e.a, env) * evaluate(e.b, env)
    if isinstance(e, Div):
        return evaluate(e.a, env) / evaluate(e.b, env)
    if isinstance(e, Pow):
        return evaluate(e.base, env) ** e.k
    if isinstance(e, Neg):
        return -evaluate(e.a, env)
    if isinstance(e, ExpF):
        return np.exp(evaluate(e.a, env))
    if isinstance(e, LogF):
        return log_cut(evaluate(e.a, env), e.cut)
    if isinstance(e, SqrtF):
        return np.exp(0.5 * log_cut(evaluate(e.a, env), math.pi))
    raise TypeError(f"unknown node {type(e).__name__}")


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Add, Sub, Mul, Div)):
        return variables(e.a) | variables(e.b)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, (Neg, ExpF, LogF, SqrtF)):
        return variables(e.a)
    raise TypeError(type(e).__name__)


def diff(e: Expr, var: str) -> Expr:
    """Symbolic derivative; mild simplification keeps trees small."""
    if isinstance(e, Const):
        return Const(0)
    if isinstance(e, Var):
        return Const(1 if e.name == var else 0)
    if isinstance(e, Add):
        return _add(diff(e.a, var), diff(e.b, var))
    if isinstance(e, Sub):
        return _sub(diff(e.a, var), diff(e.b, var))
    if isinstance(e, Mul):
        return _add(_mul(diff(e.a, var), e.b), _mul(e.a, diff(e.b, var)))
    if isinstance(e, Div):
        num = _sub(_mul(diff(e.a, var), e.b), _mul(e.a, diff(e.b, var)))
        return Div(num, Pow(e.b, 2)) if not _is_zero(num) else Const(0)
    if isinstance(e, Pow):
        if e.k == 0:
            return Const(0)
        return _mul(_mul(Const(e.k), Pow(e.base, e.k - 1)), diff(e.base, var))
    if isinstance(e, Neg):
        return _neg(diff(e.a, var))
    if isinstance(e, ExpF):
        return _mul(e, diff(e.a, var))
    if isinstance(e, LogF):
        da = diff(e.a, var)
        return Div(da, e.a) if not _is_zero(da) else Const(0)
    if isinstance(e, SqrtF):
        da = diff(e.a, var)
        if _is_zero(da):
            return Const(0)
        return Div(da, _mul(Const(2), e))
    raise TypeError(type(e).__name__)


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return Const(0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def _neg(a):
    if _is_zero(a):
        return a
    return Neg(a)


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_FUNCS = {"exp", "log", "sqrt"}

_NUM_CHARS = "0123456789."


@dataclass
class _Tok:
    kind: str  # num, imag, name, op, lparen, rparen, comma, eq, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^":
            toks.append(_Tok("op", c, i))
            i += 1
        elif c == "(":
            toks.append(_Tok("lparen", c, i))
            i += 1
        elif c == ")":
            toks.append(_Tok("rparen", c, i))
            i += 1
        elif c == ",":
            toks.append(_Tok("comma", c, i))
            i += 1
        elif c == "=":
            toks.append(_Tok("eq", c, i))
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j] in _NUM_CHARS:
                j += 1
            if j < n and text[j] in "eE" and j + 1 < n and (
                text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())
            ):
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            lit = text[i:j]
            try:
                float(lit)
            except ValueError:
                raise ExprSyntaxError(f"bad number literal {lit!r}", i)
            if j < n and text[j] == "i":
                toks.append(_Tok("imag", lit, i))
                j += 1
            else:
                toks.append(_Tok("num", lit, i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            raise ExprSyntaxError(f"expected {text or kind}, got {t.text!r}", t.pos)
        return t

    def parse(self) -> Expr:
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExprSyntaxError(f"trailing input {t.text!r}", t.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.unary()
            if op == "*":
                e = Mul(e, rhs)
            else:
                t = self.toks[self.i - 1]
                try:
                    e = Div(e, rhs)
                except ZeroDivisionError:
                    raise ExprSyntaxError("division by literal zero", t.pos)
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.next()
            inner = self.unary()
            return inner if t.text == "+" else Neg(inner)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            sign = 1
            if self.peek().kind == "op" and self.peek().text in "+-":
                sign = -1 if self.next().text == "-" else 1
            t = self.expect("num")
            if "." in t.text or "e" in t.text or "E" in t.text:
                raise ExprSyntaxError("exponent must be an integer", t.pos)
            return Pow(base, sign * int(t.text))
        return base

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return Const(float(t.text))
        if t.kind == "imag":
            return Const(float(t.text) * 1j)
        if t.kind == "lparen":
            e = self.expr()
            self.expect("rparen")
            return e
        if t.kind == "name":
            if t.text == "i":
                return Const(1j)
            if t.text == "pi":
                return Const(math.pi)
            if self.peek().kind == "lparen":
                if t.text not in _FUNCS:
                    raise UnknownIdentifier(f"unknown function {t.text!r}")
                self.next()
                arg = self.expr()
                cut = math.pi
                if self.peek().kind == "comma":
                    self.next()
                    key = self.expect("name")
                    if key.text != "cut":
                        raise ExprSyntaxError("only keyword 'cut' is allowed", key.pos)
                    self.expect("eq")
                    cut = self._signed_number()
                self.expect("rparen")
                if t.text == "exp":
                    return ExpF(arg)
                if t.text == "sqrt":
                    return SqrtF(arg)
                return LogF(arg, cut)
            return Var(t.text)
        raise ExprSyntaxError(f"unexpected token {t.text!r}", t.pos)

    def _signed_number(self) -> float:
        sign = 1.0
        if self.peek().kind == "op" and self.peek().text in "+-":
            sign = -1.0 if self.next().text == "-" else 1.0
        t = self.next()
        if t.kind == "num":
            return sign * float(t.text)
        if t.kind == "name" and t.text == "pi":
            return sign * math.pi
        raise ExprSyntaxError("expected a number", t.pos)


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "mul": 2, "unary": 3, "pow": 4, "atom": 5}


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _print(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        v = e.value
        if v.imag == 0:
            if v.real < 0:
                return f"-{_fmt_real(-v.real)}", _PREC["unary"]
            return _fmt_real(v.real), _PREC["atom"]
        if v.real == 0:
            if v.imag < 0:
                return f"-{_fmt_real(-v.imag)}i", _PREC["unary"]
            if v.imag == 1:
                return "i", _PREC["atom"]
            return f"{_fmt_real(v.imag)}i", _PREC["atom"]
        sep = "+" if v.imag >= 0 else "-"
        im = abs(v.imag)
        return f"({_fmt_real(v.real)} {sep} {_fmt_real(im)}i)", _PREC["atom"]
    if isinstance(e, Var):
        return e.name, _PREC["atom"]
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        lt, lp = _print(e.a)
        rt, rp = _print(e.b)
        if lp < _PREC["add"]:
            lt = f"({lt})"
        if rp <= _PREC["add"]:
            rt = f"({rt})"
        return f"{lt} {op} {rt}", _PREC["add"]
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        lt, lp = _print(e.a)
        rt, rp = _print(e.b)
        if lp < _PREC["mul"]:
            lt = f"({lt})"
        if rp <= _PREC["mul"]:
            rt = f"({rt})"
        return f"{lt}{op}{rt}", _PREC["mul"]
    if isinstance(e, Neg):
        at, ap = _print(e.a)
        if ap < _PREC["unary"]:
            at = f"({at})"
        return f"-{at}", _PREC["unary"]
    if isinstance(e, Pow):
        bt, bp = _print(e.base)
        if bp < _PREC["atom"]:
            bt = f"({bt})"
        return f"{bt}^{e.k}", _PREC["pow"]
    if isinstance(e, ExpF):
        return f"exp({_print(e.a)[0]})", _PREC["atom"]
    if isinstance(e, SqrtF):
        return f"sqrt({_print(e.a)[0]})", _PREC["atom"]
    if isinstance(e, LogF):
        if e.cut == math.pi:
            return f"log({_print(e.a)[0]})", _PREC["atom"]
        return f"log({_print(e.a)[0]}, cut={repr(e.cut)})", _PREC["atom"]
    raise TypeError(type(e).__name__)


def to_string(e: Expr) -> str:
    return _print(e)[0]
