"""Text expressions for the nonlinearity ``F: R^d -> R``.

Grammar (lowest to highest precedence)::

    expr    := sum [cmp sum]          cmp in  < <= > >= == !=
    sum     := term {(+|-) term}
    term    := unary {(*|/) unary}
    unary   := (-|+) unary | power
    power   := atom [(^|**) unary]    right associative
    atom    := number | name | name "(" expr {"," expr} ")" | "(" expr ")"

Names are ``z1 .. zd`` (``z`` is accepted when d == 1), the reserved ``h``
(bound at evaluation time to the entropy spectrum at ``z``), ``pi``, and
free parameters such as ``alpha``.  Functions: exp, log, sqrt, abs, pow and
``cond(test, a, b)``.

Evaluation is vectorised: ``FExpr.evaluate`` takes an ``(N, d)`` array of
points and returns ``N`` values.  Leaving the domain anywhere raises
:class:`DomainError` instead of producing NaN or inf.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArityError, DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = {"exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pow": 2, "cond": 3}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|<=|>=|==|!=|[-+*/^(),<>]))"
)


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


def to_source(node):
    """Fully parenthesised source text that parses back to ``node``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{to_source(node.arg)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.func}({', '.join(to_source(a) for a in node.args)})"


# -- parsing -----------------------------------------------------------------


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            start = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, d, params):
        self.tokens = _tokenize(src)
        self.i = 0
        self.d = d
        self.params = params
        self.free = set()
        self.uses_h = False

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, value=None):
        kind, text, pos = self.tok
        if value is not None and text != value:
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)
        self.i += 1
        return kind, text, pos

    def parse(self):
        node = self.expr()
        kind, text, pos = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        left = self.sum()
        if self.tok[1] in ("<", "<=", ">", ">=", "==", "!="):
            op = self.take()[1]
            left = Binary(op, left, self.sum())
        return left

    def sum(self):
        left = self.term()
        while self.tok[1] in ("+", "-"):
            op = self.take()[1]
            left = Binary(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.tok[1] in ("*", "/"):
            op = self.take()[1]
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.tok[1] in ("-", "+"):
            op = self.take()[1]
            arg = self.unary()
            return arg if op == "+" else Unary("-", arg)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[1] in ("^", "**"):
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "name":
            self.take()
            if self.tok[1] == "(":
                return self.call(text, pos)
            return self.name(text, pos)
        if text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos)

    def call(self, func, pos):
        if func not in FUNCTIONS:
            raise UnknownIdentifier(f"unknown function {func!r}", pos)
        self.take("(")
        args = [self.expr()]
        while self.tok[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        if len(args) != FUNCTIONS[func]:
            raise ArityError(f"{func} takes {FUNCTIONS[func]} argument(s), got {len(args)}", pos)
        return Call(func, tuple(args))

    def name(self, text, pos):
        if text == "z" and self.d == 1:
            return Name("z1")
        m = re.fullmatch(r"z(\d+)", text)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= self.d:
                raise UnknownIdentifier(f"variable {text} out of range for d={self.d}", pos)
            return Name(text)
        if text == "h":
            self.uses_h = True
            return Name(text)
        if text in CONSTANTS:
            return Num(CONSTANTS[text])
        if self.params is not None and text not in self.params:
            raise UnknownIdentifier(f"unknown identifier {text!r}", pos)
        self.free.add(text)
        return Name(text)


@dataclass(frozen=True)
class FEvalContext:
    """Point, parameter values and (optionally) the entropy value for ``h``."""

    z: tuple
    params: dict = field(default_factory=dict)
    h_value: float = None


class FExpr:
    """A parsed expression for ``F``; immutable once built."""

    def __init__(self, ast, d, params=(), uses_h=False, source=None):
        self.ast = ast
        self.d = d
        self.params = frozenset(params)
        self.uses_h = uses_h
        self.source = source if source is not None else to_source(ast)

    def __repr__(self):
        return f"FExpr({self.source!r}, d={self.d})"

    def evaluate(self, z, params=None, h=None):
        """Evaluate at each row of ``z`` (shape (N, d) or (d,)); returns shape (N,)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got {z.shape[1]}")
        params = dict(params or {})
        missing = self.params - set(params)
        if missing:
            raise UnknownIdentifier(f"no value given for parameter(s) {sorted(missing)}")
        env = {f"z{i + 1}": z[:, i] for i in range(self.d)}
        env.update({k: float(v) for k, v in params.items()})
        if self.uses_h:
            if h is None:
                raise ValueError("expression uses h but no entropy value was supplied")
            env["h"] = np.broadcast_to(np.asarray(h, dtype=float), (len(z),))
        out = _eval(self.ast, env, len(z))
        return np.broadcast_to(out, (len(z),)).astype(float)

    def __call__(self, z, params=None, h=None):
        z = np.asarray(z, dtype=float).reshape(-1)
        return float(self.evaluate(z[None, :], params, h)[0])


def parse(src, d=1, params=None):
    """Parse ``src`` into an :class:`FExpr` over ``z1 .. zd``.

    With ``params`` given, identifiers outside it are rejected; otherwise any
    other identifier becomes a free parameter that must be bound at
    evaluation time.
    """
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(src, d, None if params is None else set(params))
    ast = p.parse()
    return FExpr(ast, d, p.free, p.uses_h, source=src)


def _take(v, mask):
    return v[mask] if np.ndim(v) else v


def _sub_env(env, mask):
    return {k: _take(v, mask) for k, v in env.items()}


def _check(value, node, env):
    if not np.all(np.isfinite(value)):
        raise DomainError("non-finite value", node=to_source(node), z=_first_z(env, value))
    return value


def _first_z(env, value=None):
    zs = sorted(k for k in env if k.startswith("z"))
    if not zs:
        return None
    idx = 0
    if value is not None and np.ndim(value):
        bad = np.flatnonzero(~np.isfinite(value))
        idx = int(bad[0]) if len(bad) else 0
    return [float(np.ravel(env[k])[idx]) if np.size(env[k]) else float("nan") for k in zs]


def _fail(msg, node, env, bad):
    z = None
    zs = sorted(k for k in env if k.startswith("z"))
    if zs and np.ndim(bad) and np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        z = [float(env[k][i]) for k in zs]
    raise DomainError(msg, node=to_source(node), z=z)


def _eval(node, env, n):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name not in env:
            raise UnknownIdentifier(f"unbound identifier {node.name!r}")
        return env[node.name]
    if isinstance(node, Unary):
        return -_eval(node.arg, env, n)
    if isinstance(node, Binary):
        a = _eval(node.left, env, n)
        b = _eval(node.right, env, n)
        op = node.op
        with np.errstate(all="ignore"):
            if op == "+":
                return _check(np.add(a, b), node, env)
            if op == "-":
                return _check(np.subtract(a, b), node, env)
            if op == "*":
                return _check(np.multiply(a, b), node, env)
            if op == "/":
                bad = np.broadcast_to(np.asarray(b) == 0, np.shape(np.add(a, b)))
                if np.any(bad):
                    _fail("division by zero", node, env, bad)
                return _check(np.divide(a, b), node, env)
            if op == "^":
                return _power(a, b, node, env)
            return {
                "<": np.less,
                "<=": np.less_equal,
                ">": np.greater,
                ">=": np.greater_equal,
                "==": np.equal,
                "!=": np.not_equal,
            }[op](a, b).astype(float)
    return _call(node, env, n)


def _power(a, b, node, env):
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    bad = ((a_arr < 0) & (b_arr != np.round(b_arr))) | ((a_arr == 0) & (b_arr < 0))
    if np.any(bad):
        _fail("power outside its domain", node, env, bad)
    with np.errstate(all="ignore"):
        out = np.power(a_arr, b_arr)
    return _check(out if out.ndim else float(out), node, env)


def _call(node, env, n):
    f = node.func
    if f == "cond":
        test = np.asarray(_eval(node.args[0], env, n)) != 0
        if test.ndim == 0:
            return _eval(node.args[1] if test else node.args[2], env, n)
        out = np.empty(test.shape)
        for mask, branch in ((test, node.args[1]), (~test, node.args[2])):
            if np.any(mask):
                out[mask] = _eval(branch, _sub_env(env, mask), int(mask.sum()))
        return out
    args = [_eval(a, env, n) for a in node.args]
    x = np.asarray(args[0], dtype=float)
    with np.errstate(all="ignore"):
        if f == "exp":
            return _check(np.exp(x), node, env)
        if f == "log":
            if np.any(x <= 0):
                _fail("log of a nonpositive value", node, env, x <= 0)
            return np.log(x)
        if f == "sqrt":
            if np.any(x < 0):
                _fail("sqrt of a negative value", node, env, x < 0)
            return np.sqrt(x)
        if f == "abs":
            return np.abs(x)
        if f == "pow":
            return _power(args[0], args[1], node, env)
    raise UnknownIdentifier(f"unknown function {f!r}")


# -- derivatives ---------------------------------------------------------------


def _ctx_parts(ctx):
    return np.asarray(ctx.z, dtype=float).reshape(-1), dict(ctx.params)


def _scaled(z, step):
    return step * (np.abs(z) + 1.0)


def _values(f, points, params, ctx, h_func):
    if h_func is not None:
        h = np.array([h_func(p) for p in points])
    else:
        h = ctx.h_value
    return f.evaluate(points, params, h)


def numeric_gradient(f, ctx, step=1e-5, h_func=None):
    """Central-difference gradient; steps are ``step * (|z_i| + 1)``.

    ``h_func`` (a callable ``z -> h``) re-evaluates ``h`` at each shifted point
    instead of holding ``ctx.h_value`` fixed.
    """
    z, params = _ctx_parts(ctx)
    s = _scaled(z, step)
    pts = []
    for i in range(len(z)):
        e = np.zeros_like(z)
        e[i] = s[i]
        pts += [z + e, z - e]
    vals = _values(f, np.array(pts), params, ctx, h_func)
    return (vals[0::2] - vals[1::2]) / (2 * s)


def numeric_hessian(f, ctx, step=1e-4, h_func=None):
    """Central second differences, symmetrised as ``(H + H.T) / 2``."""
    z, params = _ctx_parts(ctx)
    d = len(z)
    s = _scaled(z, step)
    pts = [z]
    for i in range(d):
        for j in range(d):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                p = z.copy()
                p[i] += si * s[i]
                p[j] += sj * s[j]
                pts.append(p)
    vals = _values(f, np.array(pts), params, ctx, h_func)
    f0 = vals[0]
    quad = vals[1:].reshape(d, d, 4)
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            pp, pm, mp, mm = quad[i, j]
            if i == j:
                # p(+,+) = z + 2 s_i e_i, p(-,-) = z - 2 s_i e_i
                hess[i, i] = (pp - 2 * f0 + mm) / (4 * s[i] ** 2)
            else:
                hess[i, j] = (pp - pm - mp + mm) / (4 * s[i] * s[j])
    return (hess + hess.T) / 2


def evaluate_ctx(f, ctx):
    """Scalar evaluation from an :class:`FEvalContext`."""
    if f.uses_h and ctx.h_value is None:
        raise ValueError("context lacks h_value for an expression using h")
    return f(ctx.z, ctx.params, ctx.h_value)


# -- presets -------------------------------------------------------------------

PRESETS = {
    "alpha_family": ("alpha/(z1^2 - 2)", 1, {"alpha": 1.0}),
    "cinf_bump": ("cond(z1 > 0, 3*exp(-1/z1), 0)", 1, {}),
    "beta_quadratic": ("beta*(z1^2 + z2^2)/2", 2, {"beta": 1.0}),
    "neg_h_quartic": ("-h - z1^2*z2^2", 2, {}),
    "cube_root_sum": ("(z1^3 + z2^3)^(1/3)", 2, {}),
}


def preset(name, d=None):
    """Return ``(FExpr, default_params)`` for a named preset.

    ``potts`` (the Euclidean norm) and ``linear`` (sum of coordinates) adapt
    to any ``d``; the others have a fixed dimension.
    """
    if name == "potts":
        d = d or 1
        src = "sqrt(" + " + ".join(f"z{i}^2" for i in range(1, d + 1)) + ")"
        return parse(src, d), {}
    if name == "linear":
        d = d or 1
        return parse(" + ".join(f"z{i}" for i in range(1, d + 1)), d), {}
    if name not in PRESETS:
        raise UnknownIdentifier(f"unknown preset {name!r}")
    src, dim, params = PRESETS[name]
    if d is not None and d != dim:
        raise ValueError(f"preset {name!r} is {dim}-dimensional, not {d}")
    return parse(src, dim), dict(params)
