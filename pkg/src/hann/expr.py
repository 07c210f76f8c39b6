"""Scalar expression trees: parsing, evaluation and differentiation.

Expressions are immutable trees built from constants, named variables and a
fixed operator set (add, sub, mul, div, pow, neg, sin, cos, ln, exp, abs).
A ``System`` bundles an ordered list of equations (each read as f_i(x) = 0)
with the variable names and a rectangular domain box.

The text format is line based::

    # comment
    vars: x, y
    domain: x in [-15, 15]
    domain: y in [-15, 15]
    x^2 - y^2 = 0
    1 - |x - y| = 0

``|u|`` and ``abs(u)`` are synonyms.  ``time: t`` declares a reserved time
symbol for time-varying systems; ``t`` is then an input, not an unknown.
Domain bounds accept ``[a, b]`` or ``(a, b)``; both are stored as closed
intervals.  Without a ``domain:`` line a variable defaults to [-10, 10].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "System",
    "ParseError", "DomainError",
    "parse_system", "parse_expr", "system_to_text",
    "eval_system", "residual_l1", "jacobian",
]

_FUNCTIONS = ("sin", "cos", "ln", "exp", "abs")
_DEFAULT_INTERVAL = (-10.0, 10.0)


class ParseError(ValueError):
    """Syntax or semantic error in the equation text, with location."""

    def __init__(self, message, line=None, col=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.col = col


class DomainError(ArithmeticError):
    """Evaluation left the domain of definition (1/0, ln of non-positive,
    0 raised to a negative power, or a non-finite result)."""

    def __init__(self, message, equation_index=None):
        if equation_index is not None:
            message = f"equation {equation_index}: {message}"
        super().__init__(message)
        self.equation_index = equation_index


# ---------------------------------------------------------------------------
# AST nodes

class Expr:
    """Base class for expression nodes."""

    def eval(self, env):
        """Evaluate at ``env`` (name -> scalar or ndarray, broadcastable)."""
        raise NotImplementedError

    def fwd(self, env, wrt):
        """Forward-mode evaluation.

        Returns ``(value, grad)`` where ``grad`` stacks the partials with
        respect to each name in ``wrt`` along a leading axis; both are
        broadcast to the common shape of the ``env`` values.
        """
        shape = _env_shape(env)
        wrt = list(wrt)
        val, grad = self._fwd(env, wrt, len(shape))
        val = np.broadcast_to(np.asarray(val, dtype=float), shape)
        grad = np.broadcast_to(np.asarray(grad, dtype=float),
                               (len(wrt),) + shape)
        return val, grad

    def _fwd(self, env, wrt, ndim):
        """Forward-mode core: values and tangents stay unbroadcast (scalars
        or arrays with singleton batch axes) so tree evaluation avoids
        per-node shape computation and allocation."""
        raise NotImplementedError

    def variables(self, acc=None):
        if acc is None:
            acc = []
        self._collect(acc)
        return acc

    def _collect(self, acc):
        pass

    def __str__(self):
        return _fmt(self, 0)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, env):
        return self.value

    def _fwd(self, env, wrt, ndim):
        return self.value, 0.0


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def eval(self, env):
        return env[self.name]

    def _fwd(self, env, wrt, ndim):
        val = np.asarray(env[self.name], dtype=float)
        if self.name in wrt:
            grad = _basis_grad(len(wrt), wrt.index(self.name), ndim)
        else:
            grad = 0.0
        return val, grad

    def _collect(self, acc):
        if self.name not in acc:
            acc.append(self.name)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # neg, sin, cos, ln, exp, abs
    arg: Expr

    def eval(self, env):
        u = self.arg.eval(env)
        return _unary_val(self.op, u)

    def _fwd(self, env, wrt, ndim):
        u, du = self.arg._fwd(env, wrt, ndim)
        val = _unary_val(self.op, u)
        if self.op == "neg":
            return val, -du
        if self.op == "sin":
            return val, np.cos(u) * du
        if self.op == "cos":
            return val, -np.sin(u) * du
        if self.op == "ln":
            return val, du / u
        if self.op == "exp":
            return val, val * du
        if self.op == "abs":
            # subgradient convention: d|u|/du = sign(u), sign(0) = 0
            return val, np.sign(u) * du
        raise ValueError(f"unknown unary op {self.op!r}")

    def _collect(self, acc):
        self.arg._collect(acc)


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # add, sub, mul, div, pow
    left: Expr
    right: Expr

    def eval(self, env):
        a = self.left.eval(env)
        if self.op == "pow":
            return _pow_val(a, self.right, env)
        b = self.right.eval(env)
        return _binary_val(self.op, a, b)

    def _fwd(self, env, wrt, ndim):
        a, da = self.left._fwd(env, wrt, ndim)
        if self.op == "pow":
            return _pow_fwd(a, da, self.right, env, wrt, ndim)
        b, db = self.right._fwd(env, wrt, ndim)
        val = _binary_val(self.op, a, b)
        if self.op == "add":
            return val, da + db
        if self.op == "sub":
            return val, da - db
        if self.op == "mul":
            return val, a * db + b * da
        if self.op == "div":
            return val, (da - val * db) / b
        raise ValueError(f"unknown binary op {self.op!r}")

    def _collect(self, acc):
        self.left._collect(acc)
        self.right._collect(acc)


def _env_shape(env):
    shape = ()
    for v in env.values():
        s = np.shape(v)
        if len(s) > len(shape):
            shape = s
    return shape


_BASIS_CACHE = {}


def _basis_grad(n, i, ndim):
    """Read-only unit tangent: 1 for coordinate i, singleton batch axes."""
    key = (n, i, ndim)
    g = _BASIS_CACHE.get(key)
    if g is None:
        g = np.zeros((n,) + (1,) * ndim)
        g[(i,) + (0,) * ndim] = 1.0
        g.flags.writeable = False
        _BASIS_CACHE[key] = g
    return g


def _unary_val(op, u):
    if op == "neg":
        return -u
    if op == "sin":
        return np.sin(u)
    if op == "cos":
        return np.cos(u)
    if op == "ln":
        if np.any(np.asarray(u) <= 0.0):
            raise DomainError("ln of non-positive argument")
        return np.log(u)
    if op == "exp":
        with np.errstate(over="ignore"):
            return np.exp(u)
    if op == "abs":
        return np.abs(u)
    raise ValueError(f"unknown unary op {op!r}")


def _binary_val(op, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if np.any(np.asarray(b) == 0.0):
            raise DomainError("division by zero")
        return a / b
    raise ValueError(f"unknown binary op {op!r}")


def _int_exponent(exp_node):
    """Return the exponent as int when it is an integer literal, else None."""
    node = exp_node
    sign = 1
    while isinstance(node, Unary) and node.op == "neg":
        sign = -sign
        node = node.arg
    if isinstance(node, Const) and float(node.value) == int(node.value):
        return sign * int(node.value)
    return None


def _ipow(a, n):
    """Integer power by repeated multiplication (binary exponentiation)."""
    if n == 0:
        return np.ones_like(np.asarray(a, dtype=float))
    m = abs(n)
    result = None
    base = a
    while m:
        if m & 1:
            result = base if result is None else result * base
        m >>= 1
        if m:
            base = base * base
    if n < 0:
        if np.any(np.asarray(a) == 0.0):
            raise DomainError("zero base raised to a negative power")
        return 1.0 / result
    return result


def _pow_val(a, exp_node, env):
    n = _int_exponent(exp_node)
    if n is not None:
        return _ipow(a, n)
    b = exp_node.eval(env)
    if np.any(np.asarray(a) <= 0.0):
        raise DomainError("non-integer power of a non-positive base")
    with np.errstate(over="ignore"):
        return np.power(a, b)


def _pow_fwd(a, da, exp_node, env, wrt, ndim):
    n = _int_exponent(exp_node)
    if n is not None:
        val = _ipow(a, n)
        if n == 0:
            return val, 0.0 * da
        return val, n * _ipow(a, n - 1) * da
    b, db = exp_node._fwd(env, wrt, ndim)
    if np.any(np.asarray(a) <= 0.0):
        raise DomainError("non-integer power of a non-positive base")
    with np.errstate(over="ignore"):
        val = np.power(a, b)
    return val, val * (db * np.log(a) + b * da / a)


# ---------------------------------------------------------------------------
# Printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _fmt(node, parent_prec):
    if isinstance(node, Const):
        s = repr(float(node.value))
        if node.value < 0:
            return f"({s})" if parent_prec > 0 else s
        return s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = _fmt(node.arg, _PREC["neg"])
            s = f"-{inner}"
            return f"({s})" if parent_prec >= _PREC["neg"] else s
        return f"{node.op}({_fmt(node.arg, 0)})"
    if isinstance(node, Binary):
        prec = _PREC[node.op]
        # pow is right-associative; add/sub/mul/div left-associative
        if node.op == "pow":
            left = _fmt(node.left, prec + 1)
            right = _fmt(node.right, prec)
        else:
            left = _fmt(node.left, prec)
            right = _fmt(node.right, prec + 1)
        s = f"{left} {_SYMBOL[node.op]} {right}"
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an Expr: {node!r}")


# ---------------------------------------------------------------------------
# System

@dataclass(frozen=True)
class System:
    """Ordered equations f_i(x) = 0 over named variables with a domain box."""

    equations: tuple
    variables: tuple
    domain: tuple  # per-variable (lo, hi)
    time_var: Optional[str] = None

    def __post_init__(self):
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"invalid domain interval [{lo}, {hi}]")

    @property
    def n_equations(self):
        return len(self.equations)

    @property
    def n_variables(self):
        return len(self.variables)

    def env_from_point(self, point, t=None):
        point = np.asarray(point, dtype=float)
        env = {name: point[..., i] for i, name in enumerate(self.variables)}
        if self.time_var is not None:
            if t is None:
                raise ValueError("time-varying system needs a value for "
                                 f"{self.time_var!r}")
            env[self.time_var] = np.asarray(t, dtype=float)
        return env

    def eval_batch(self, X, t=None):
        """Evaluate all equations at X of shape (..., n); returns (n_eq, ...)."""
        env = self.env_from_point(X, t)
        shape = _env_shape(env)
        out = np.empty((self.n_equations,) + shape)
        for i, eq in enumerate(self.equations):
            try:
                v = eq.eval(env)
            except DomainError as err:
                raise DomainError(str(err), equation_index=i) from None
            if not np.all(np.isfinite(v)):
                raise DomainError("non-finite value", equation_index=i)
            out[i] = v
        return out

    def eval_batch_fwd(self, X, t=None):
        """Values and Jacobian rows for all equations at X of shape (..., n).

        Returns ``(vals, jac)`` with shapes (n_eq, ...) and (n_eq, n_var, ...).
        """
        env = self.env_from_point(X, t)
        wrt = list(self.variables)
        shape = _env_shape(env)
        vals = np.empty((self.n_equations,) + shape)
        jac = np.empty((self.n_equations, self.n_variables) + shape)
        for i, eq in enumerate(self.equations):
            try:
                v, g = eq._fwd(env, wrt, len(shape))
            except DomainError as err:
                raise DomainError(str(err), equation_index=i) from None
            if not (np.all(np.isfinite(v)) and np.all(np.isfinite(g))):
                raise DomainError("non-finite value or derivative",
                                  equation_index=i)
            vals[i] = v
            jac[i] = g
        return vals, jac


def eval_system(sys, point, t=None):
    """F(point) as a vector; raises DomainError with the offending index."""
    point = np.asarray(point, dtype=float)
    if point.shape != (sys.n_variables,):
        raise ValueError(f"point has shape {point.shape}, "
                         f"expected ({sys.n_variables},)")
    return sys.eval_batch(point, t)


def residual_l1(sys, point, t=None):
    """Sum of absolute equation residuals at ``point``."""
    return float(np.sum(np.abs(eval_system(sys, point, t))))


def jacobian(sys, point, t=None):
    """Exact Jacobian matrix (n_eq x n_var) by forward-mode differentiation."""
    point = np.asarray(point, dtype=float)
    if point.shape != (sys.n_variables,):
        raise ValueError(f"point has shape {point.shape}, "
                         f"expected ({sys.n_variables},)")
    _, jac = sys.eval_batch_fwd(point, t)
    return jac


# ---------------------------------------------------------------------------
# Tokenizer / parser

@dataclass
class _Token:
    kind: str  # NUM, IDENT, or a literal symbol
    text: str
    col: int


def _tokenize(line, lineno):
    tokens = []
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
            continue
        if c == "#":
            break
        if c.isdigit() or (c == "." and i + 1 < n and line[i + 1].isdigit()):
            j = i
            while j < n and (line[j].isdigit() or line[j] == "."):
                j += 1
            if j < n and line[j] in "eE":
                k = j + 1
                if k < n and line[k] in "+-":
                    k += 1
                if k < n and line[k].isdigit():
                    j = k
                    while j < n and line[j].isdigit():
                        j += 1
            text = line[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"bad number literal {text!r}", lineno, i + 1)
            tokens.append(_Token("NUM", text, i + 1))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (line[j].isalnum() or line[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", line[i:j], i + 1))
            i = j
            continue
        if c in "+-*/^()|,=[]":
            tokens.append(_Token(c, c, i + 1))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", lineno, i + 1)
    return tokens


class _ExprParser:
    """Recursive-descent parser for a single expression token stream."""

    def __init__(self, tokens, lineno, declared, seen_vars):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.declared = declared   # None means infer variables
        self.seen = seen_vars      # ordered list shared across equations

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind=None):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.lineno)
        if kind is not None and tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}",
                             self.lineno, tok.col)
        self.pos += 1
        return tok

    def parse(self):
        node = self.expression()
        return node

    def expression(self):
        node = self.term()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind in "+-":
                self.take()
                rhs = self.term()
                node = Binary("add" if tok.kind == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind in "*/":
                self.take()
                rhs = self.unary()
                node = Binary("mul" if tok.kind == "*" else "div", node, rhs)
            else:
                return node

    def unary(self):
        tok = self.peek()
        if tok is not None and tok.kind == "-":
            self.take()
            return Unary("neg", self.unary())
        if tok is not None and tok.kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok.kind == "^":
            self.take()
            # right-associative; exponent may carry a unary sign
            exponent = self.unary_exponent()
            return Binary("pow", base, exponent)
        return base

    def unary_exponent(self):
        tok = self.peek()
        if tok is not None and tok.kind == "-":
            self.take()
            return Unary("neg", self.unary_exponent())
        return self.power()

    def atom(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.lineno)
        if tok.kind == "NUM":
            self.take()
            return Const(float(tok.text))
        if tok.kind == "(":
            self.take()
            node = self.expression()
            self.take(")")
            return node
        if tok.kind == "|":
            self.take()
            node = self.expression()
            self.take("|")
            return Unary("abs", node)
        if tok.kind == "IDENT":
            self.take()
            nxt = self.peek()
            if nxt is not None and nxt.kind == "(":
                if tok.text not in _FUNCTIONS:
                    raise ParseError(f"unknown function {tok.text!r}",
                                     self.lineno, tok.col)
                self.take("(")
                arg = self.expression()
                if self.peek() is not None and self.peek().kind == ",":
                    raise ParseError(f"{tok.text} takes one argument",
                                     self.lineno, tok.col)
                self.take(")")
                return Unary(tok.text, arg)
            if tok.text in _FUNCTIONS:
                raise ParseError(f"{tok.text!r} is a function name, "
                                 "expected '('", self.lineno, tok.col)
            if self.declared is not None and tok.text not in self.declared:
                raise ParseError(f"unknown identifier {tok.text!r}",
                                 self.lineno, tok.col)
            if tok.text not in self.seen:
                self.seen.append(tok.text)
            return Var(tok.text)
        raise ParseError(f"unexpected token {tok.text!r}", self.lineno, tok.col)


def parse_expr(text, variables=None):
    """Parse a single expression; ``variables`` restricts allowed names."""
    tokens = _tokenize(text, 1)
    declared = list(variables) if variables is not None else None
    parser = _ExprParser(tokens, 1, declared, [])
    node = parser.parse()
    if parser.peek() is not None:
        tok = parser.peek()
        raise ParseError(f"unexpected token {tok.text!r}", 1, tok.col)
    return node


def _parse_signed_number(tokens, pos, lineno):
    sign = 1.0
    tok = tokens[pos]
    if tok.kind in "+-":
        sign = -1.0 if tok.kind == "-" else 1.0
        pos += 1
        tok = tokens[pos] if pos < len(tokens) else None
    if tok is None or tok.kind != "NUM":
        raise ParseError("expected a number", lineno)
    return sign * float(tok.text), pos + 1


def parse_system(source):
    """Parse the equation DSL text into a System."""
    declared = None
    domains = {}
    time_var = None
    equations = []
    seen_vars = []
    eq_lines = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        key = head.strip().lower()
        if _ == ":" and key in ("vars", "domain", "time"):
            if key == "vars":
                if declared is not None:
                    raise ParseError("duplicate vars: line", lineno)
                declared = []
                for name in rest.split(","):
                    name = name.strip()
                    if not name:
                        continue
                    if not (name[0].isalpha() or name[0] == "_"):
                        raise ParseError(f"bad variable name {name!r}", lineno)
                    if name in declared:
                        raise ParseError(f"duplicate variable {name!r}", lineno)
                    if name in _FUNCTIONS:
                        raise ParseError(f"{name!r} is a function name", lineno)
                    declared.append(name)
            elif key == "time":
                time_var = rest.strip()
                if not time_var:
                    raise ParseError("empty time: line", lineno)
            else:
                tokens = _tokenize(rest, lineno)
                if len(tokens) < 6 or tokens[0].kind != "IDENT":
                    raise ParseError("expected 'domain: name in [lo, hi]'",
                                     lineno)
                name = tokens[0].text
                if tokens[1].kind != "IDENT" or tokens[1].text != "in":
                    raise ParseError("expected 'in' in domain line", lineno)
                pos = 2
                if tokens[pos].kind not in ("[", "("):
                    raise ParseError("expected '[' or '(' in domain line",
                                     lineno)
                pos += 1
                lo, pos = _parse_signed_number(tokens, pos, lineno)
                if tokens[pos].kind != ",":
                    raise ParseError("expected ',' in domain line", lineno)
                hi, pos = _parse_signed_number(tokens, pos + 1, lineno)
                if pos >= len(tokens) or tokens[pos].kind not in ("]", ")"):
                    raise ParseError("expected ']' or ')' in domain line",
                                     lineno)
                if not lo < hi:
                    raise ParseError(f"empty domain interval [{lo}, {hi}]",
                                     lineno)
                if name in domains:
                    raise ParseError(f"duplicate domain for {name!r}", lineno)
                domains[name] = (lo, hi)
            continue

        # equation line
        tokens = _tokenize(line, lineno)
        eq_positions = [i for i, tk in enumerate(tokens) if tk.kind == "="]
        if len(eq_positions) != 1:
            raise ParseError("equation line must contain exactly one '='",
                             lineno)
        split = eq_positions[0]
        allowed = list(declared) if declared is not None else None
        if allowed is not None and time_var is not None:
            allowed.append(time_var)
        lhs = _ExprParser(tokens[:split], lineno, allowed, seen_vars)
        lhs_node = lhs.parse()
        if lhs.peek() is not None:
            raise ParseError(f"unexpected token {lhs.peek().text!r}",
                             lineno, lhs.peek().col)
        rhs = _ExprParser(tokens[split + 1:], lineno, allowed, seen_vars)
        rhs_node = rhs.parse()
        if rhs.peek() is not None:
            raise ParseError(f"unexpected token {rhs.peek().text!r}",
                             lineno, rhs.peek().col)
        if rhs_node == Const(0.0):
            equations.append(lhs_node)
        elif lhs_node == Const(0.0):
            equations.append(rhs_node)
        else:
            equations.append(Binary("sub", lhs_node, rhs_node))
        eq_lines.append(lineno)

    if not equations:
        raise ParseError("no equations found", None)

    if declared is not None:
        variables = list(declared)
    else:
        variables = [v for v in seen_vars if v != time_var]
    if time_var is not None and time_var in variables:
        variables.remove(time_var)
    for name in domains:
        if name not in variables:
            raise ParseError(f"domain for undeclared variable {name!r}", None)
    domain = tuple(domains.get(v, _DEFAULT_INTERVAL) for v in variables)
    return System(equations=tuple(equations), variables=tuple(variables),
                  domain=tuple(domain), time_var=time_var)


def system_to_text(sys):
    """Canonical DSL text; parse(system_to_text(sys)) is structurally equal."""
    lines = ["vars: " + ", ".join(sys.variables)]
    if sys.time_var is not None:
        lines.append(f"time: {sys.time_var}")
    for name, (lo, hi) in zip(sys.variables, sys.domain):
        lines.append(f"domain: {name} in [{lo!r}, {hi!r}]")
    for eq in sys.equations:
        lines.append(f"{eq} = 0")
    return "\n".join(lines) + "\n"
