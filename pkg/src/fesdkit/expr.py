"""Expression graph with parsing, evaluation, and forward-mode differentiation.

Every residual, Jacobian, and objective in the toolkit is built out of
:class:`Expr` nodes.  Graphs are append-only DAGs: nodes are immutable after
construction and children always exist before their parents, so sharing is
by plain object identity.  Derivative graphs reuse primal subexpressions.

There are deliberately no min/max/abs nodes; nonsmoothness has to be modeled
through step multipliers and complementarity pairs so that every function
handed to the NLP solver stays smooth.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import DimensionMismatch, DomainError, ExprSyntaxError, UnknownSymbol

_UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt")
_BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_UNARY_FN = {
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}

_BINARY_FN = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": math.pow,
}


class Expr:
    """One node of an immutable expression DAG."""

    __slots__ = ("op", "args", "payload")

    def __init__(self, op, args=(), payload=None):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "payload", payload)

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return pow_(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        text = to_string(self)
        if len(text) > 120:
            text = text[:117] + "..."
        return f"Expr({text})"


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return const(value)


def const(value) -> Expr:
    v = float(value)
    if not math.isfinite(v):
        raise DomainError(f"constant must be finite, got {value!r}")
    return Expr("const", (), v)


def var(symbol: str, index: int) -> Expr:
    if index < 0:
        raise DimensionMismatch(f"negative index {index} for symbol '{symbol}'")
    return Expr("var", (), (symbol, int(index)))


def _is_const(e, value=None):
    return e.op == "const" and (value is None or e.payload == value)


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.payload)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def _fold(op, *vals):
    try:
        v = _UNARY_FN[op](*vals) if op in _UNARY_FN else _BINARY_FN[op](*vals)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    return v if math.isfinite(v) else None


def _unary(op, a):
    if a.op == "const":
        v = _fold(op, a.payload)
        if v is not None:
            return const(v)
    return Expr(op, (a,))


def sin(a) -> Expr:
    return _unary("sin", as_expr(a))


def cos(a) -> Expr:
    return _unary("cos", as_expr(a))


def exp(a) -> Expr:
    return _unary("exp", as_expr(a))


def log(a) -> Expr:
    return _unary("log", as_expr(a))


def sqrt(a) -> Expr:
    return _unary("sqrt", as_expr(a))


def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        v = _fold("add", a.payload, b.payload)
        if v is not None:
            return const(v)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        v = _fold("sub", a.payload, b.payload)
        if v is not None:
            return const(v)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if a is b:
        return const(0.0)
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        v = _fold("mul", a.payload, b.payload)
        if v is not None:
            return const(v)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        raise DomainError("division by constant zero", b)
    if a.op == "const" and b.op == "const":
        v = _fold("div", a.payload, b.payload)
        if v is not None:
            return const(v)
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0):
        return const(0.0)
    return Expr("div", (a, b))


def pow_(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        v = _fold("pow", a.payload, b.payload)
        if v is not None:
            return const(v)
    if _is_const(b, 0.0):
        return const(1.0)
    if _is_const(b, 1.0):
        return a
    return Expr("pow", (a, b))


# ---------------------------------------------------------------------------
# graph walks


def topo_order(outputs) -> list[Expr]:
    """Children-before-parents ordering of all nodes reachable from outputs."""
    order: list[Expr] = []
    seen: set[int] = set()
    stack = [(o, False) for o in reversed(outputs)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
        else:
            stack.append((node, True))
            for child in node.args:
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def free_variables(outputs) -> dict[str, int]:
    """Map symbol name -> max index + 1 over all var nodes reachable."""
    found: dict[str, int] = {}
    for node in topo_order(outputs):
        if node.op == "var":
            sym, idx = node.payload
            found[sym] = max(found.get(sym, 0), idx + 1)
    return found


def substitute(outputs, mapping: dict[str, list]) -> list[Expr]:
    """Rebuild the graph with var nodes of the mapped symbols replaced.

    ``mapping`` sends a symbol name to a list of replacement expressions
    (index i of the symbol becomes mapping[name][i]).  Unmapped symbols are
    left untouched.  Sharing in the source graph is preserved.
    """
    rebuilt: dict[int, Expr] = {}
    for node in topo_order(outputs):
        if node.op == "var":
            sym, idx = node.payload
            if sym in mapping:
                repl = mapping[sym]
                if idx >= len(repl):
                    raise DimensionMismatch(
                        f"substitution for '{sym}' has length {len(repl)}, "
                        f"need index {idx}")
                rebuilt[id(node)] = as_expr(repl[idx])
            else:
                rebuilt[id(node)] = node
        elif node.op == "const":
            rebuilt[id(node)] = node
        else:
            new_args = tuple(rebuilt[id(a)] for a in node.args)
            if all(n is o for n, o in zip(new_args, node.args)):
                rebuilt[id(node)] = node
            else:
                rebuilt[id(node)] = _rebuild(node.op, new_args)
    return [rebuilt[id(o)] for o in outputs]


def _rebuild(op, args):
    if op == "neg":
        return neg(args[0])
    if op in ("sin", "cos", "exp", "log", "sqrt"):
        return _unary(op, args[0])
    if op == "add":
        return add(*args)
    if op == "sub":
        return sub(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "pow":
        return pow_(*args)
    raise ValueError(f"cannot rebuild op {op!r}")


# ---------------------------------------------------------------------------
# differentiation (forward mode on the graph)


def diff(output: Expr, symbol: str, index: int, _cache=None) -> Expr:
    """Exact derivative graph of ``output`` w.r.t. one component of a symbol."""
    cache = {} if _cache is None else _cache
    zero = const(0.0)

    def rec(node):
        got = cache.get(id(node))
        if got is not None:
            return got
        op = node.op
        if op == "const":
            d = zero
        elif op == "var":
            sym, idx = node.payload
            d = const(1.0) if (sym == symbol and idx == index) else zero
        elif op == "neg":
            d = neg(rec(node.args[0]))
        elif op == "sin":
            d = mul(cos(node.args[0]), rec(node.args[0]))
        elif op == "cos":
            d = neg(mul(sin(node.args[0]), rec(node.args[0])))
        elif op == "exp":
            d = mul(node, rec(node.args[0]))
        elif op == "log":
            d = div(rec(node.args[0]), node.args[0])
        elif op == "sqrt":
            du = rec(node.args[0])
            d = zero if _is_const(du, 0.0) else div(du, mul(const(2.0), node))
        elif op == "add":
            d = add(rec(node.args[0]), rec(node.args[1]))
        elif op == "sub":
            d = sub(rec(node.args[0]), rec(node.args[1]))
        elif op == "mul":
            a, b = node.args
            d = add(mul(rec(a), b), mul(a, rec(b)))
        elif op == "div":
            a, b = node.args
            da, db = rec(a), rec(b)
            d = sub(div(da, b), div(mul(a, db), mul(b, b)))
            if _is_const(db, 0.0):
                d = div(da, b)
        elif op == "pow":
            a, b = node.args
            da, db = rec(a), rec(b)
            if b.op == "const":
                d = mul(mul(b, pow_(a, const(b.payload - 1.0))), da)
            else:
                # d(a^b) = a^b * (db*log a + b*da/a)
                d = mul(node, add(mul(db, log(a)), div(mul(b, da), a)))
        else:  # pragma: no cover
            raise ValueError(f"cannot differentiate op {op!r}")
        cache[id(node)] = d
        return d

    # run iteratively over a topo order to avoid deep recursion
    for node in topo_order([output]):
        rec(node)
    return cache[id(output)]


# ---------------------------------------------------------------------------
# string form


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def to_string(e: Expr) -> str:
    """Render with minimal parentheses; reparses to an equivalent graph."""
    memo: dict[int, tuple[str, int]] = {}

    def prec_of(node):
        if node.op == "const":
            return 3 if node.payload < 0 else 5
        if node.op == "var":
            return 5
        if node.op in ("sin", "cos", "exp", "log", "sqrt"):
            return 5
        return _PREC[node.op]

    def wrap(text, p, needed):
        return f"({text})" if p < needed else text

    for node in topo_order([e]):
        op = node.op
        if op == "const":
            memo[id(node)] = (repr(node.payload), prec_of(node))
        elif op == "var":
            sym, idx = node.payload
            memo[id(node)] = (f"{sym}[{idx + 1}]", 5)
        elif op == "neg":
            t, p = memo[id(node.args[0])]
            memo[id(node)] = ("-" + wrap(t, p, 3), 3)
        elif op in ("sin", "cos", "exp", "log", "sqrt"):
            t, _ = memo[id(node.args[0])]
            memo[id(node)] = (f"{op}({t})", 5)
        else:
            (ta, pa), (tb, pb) = memo[id(node.args[0])], memo[id(node.args[1])]
            if op == "add":
                s = f"{wrap(ta, pa, 1)} + {wrap(tb, pb, 1)}"
            elif op == "sub":
                s = f"{wrap(ta, pa, 1)} - {wrap(tb, pb, 2)}"
            elif op == "mul":
                s = f"{wrap(ta, pa, 2)}*{wrap(tb, pb, 3)}"
            elif op == "div":
                s = f"{wrap(ta, pa, 2)}/{wrap(tb, pb, 3)}"
            else:  # pow, right-associative, binds tighter than unary minus
                s = f"{wrap(ta, pa, 5)}^{wrap(tb, pb, 4)}"
            memo[id(node)] = (s, _PREC[op])
    return memo[id(e)][0]


# ---------------------------------------------------------------------------
# slow reference evaluator (used for error reporting and as a cross-check)


def eval_debug(outputs, env: dict[str, list]) -> list[float]:
    """Evaluate node by node; raises DomainError pointing at the first bad node."""
    vals: dict[int, float] = {}
    for node in topo_order(outputs):
        op = node.op
        if op == "const":
            v = node.payload
        elif op == "var":
            sym, idx = node.payload
            try:
                v = float(env[sym][idx])
            except KeyError:
                raise UnknownSymbol(sym) from None
            except IndexError:
                raise DimensionMismatch(
                    f"input '{sym}' too short for index {idx}") from None
        else:
            args = [vals[id(a)] for a in node.args]
            try:
                v = _UNARY_FN[op](*args) if op in _UNARY_FN else _BINARY_FN[op](*args)
            except ZeroDivisionError:
                raise DomainError("division by zero", node) from None
            except (ValueError, OverflowError) as exc:
                raise DomainError(f"{op}: {exc}", node) from None
        if not math.isfinite(v):
            raise DomainError(f"non-finite value from {op}", node)
        vals[id(node)] = v
    return [vals[id(o)] for o in outputs]


# ---------------------------------------------------------------------------
# compilation to a flat python function


def compile_outputs(inputs, outputs):
    """Build a fast callable f(vec0, vec1, ...) -> list[float].

    ``inputs`` is the ordered list of (symbol, length).  Shared subgraphs are
    emitted once (the DAG is the CSE).
    """
    order = topo_order(outputs)
    names: dict[int, str] = {}
    lines = []
    sym_pos = {sym: k for k, (sym, _n) in enumerate(inputs)}

    def lit(v):
        return repr(v)

    for i, node in enumerate(order):
        op = node.op
        if op == "const":
            names[id(node)] = lit(node.payload)
            continue
        name = f"t{i}"
        if op == "var":
            sym, idx = node.payload
            lines.append(f"{name} = _a{sym_pos[sym]}[{idx}]")
        elif op == "neg":
            lines.append(f"{name} = -{names[id(node.args[0])]}")
        elif op in ("sin", "cos", "exp", "log", "sqrt"):
            lines.append(f"{name} = _{op}({names[id(node.args[0])]})")
        elif op == "pow":
            a, b = node.args
            if b.op == "const" and b.payload == 2.0:
                ta = names[id(a)]
                lines.append(f"{name} = {ta}*{ta}")
            else:
                lines.append(f"{name} = _powf({names[id(a)]}, {names[id(b)]})")
        else:
            sym_op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
            ta, tb = names[id(node.args[0])], names[id(node.args[1])]
            lines.append(f"{name} = {ta} {sym_op} {tb}")
        names[id(node)] = name

    args = ", ".join(f"_a{k}" for k in range(len(inputs)))
    ret = ", ".join(names[id(o)] for o in outputs)
    body = "\n ".join(lines) if lines else "pass"
    src = f"def _fn({args}):\n {body}\n return [{ret}]\n"
    namespace = {
        "_sin": math.sin, "_cos": math.cos, "_exp": math.exp,
        "_log": math.log, "_sqrt": math.sqrt, "_powf": math.pow,
    }
    exec(compile(src, "<fesdkit-expr>", "exec"), namespace)
    return namespace["_fn"]


# ---------------------------------------------------------------------------


class VectorFunction:
    """An ordered tuple of named vector inputs and a list of output expressions.

    Evaluation is deterministic and pure.  The compiled form is cached and
    rebuilt lazily (it is dropped when pickling).
    """

    def __init__(self, inputs, outputs, name=None):
        self.inputs = [(str(s), int(n)) for s, n in inputs]
        self.outputs = [as_expr(o) for o in outputs]
        self.name = name
        self._validate()
        self._compiled = None
        self._jac_cache = {}

    def _validate(self):
        declared = dict(self.inputs)
        if len(declared) != len(self.inputs):
            raise DimensionMismatch("duplicate input symbol")
        for sym, hi in free_variables(self.outputs).items():
            if sym not in declared:
                raise UnknownSymbol(sym)
            if hi > declared[sym]:
                raise DimensionMismatch(
                    f"symbol '{sym}' declared with length {declared[sym]} "
                    f"but index {hi - 1} is used")

    # -- basic shape ---------------------------------------------------
    @property
    def n_out(self):
        return len(self.outputs)

    def input_length(self, symbol):
        for sym, n in self.inputs:
            if sym == symbol:
                return n
        raise UnknownSymbol(symbol)

    # -- evaluation ----------------------------------------------------
    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = compile_outputs(self.inputs, self.outputs)
        return self._compiled

    def _check_args(self, args):
        if len(args) != len(self.inputs):
            raise DimensionMismatch(
                f"expected {len(self.inputs)} input vectors, got {len(args)}")
        for (sym, n), vec in zip(self.inputs, args):
            if len(vec) != n:
                raise DimensionMismatch(
                    f"input '{sym}' expects length {n}, got {len(vec)}")

    def __call__(self, *args):
        self._check_args(args)
        lists = [a.tolist() if isinstance(a, np.ndarray) else list(a) for a in args]
        try:
            out = self.compiled(*lists)
        except (ValueError, ZeroDivisionError, OverflowError):
            # rerun slowly to pinpoint the offending node
            eval_debug(self.outputs, {s: v for (s, _), v in zip(self.inputs, lists)})
            raise  # pragma: no cover - debug path always raises first
        return np.asarray(out, dtype=float)

    def eval_many(self, *arrays):
        """Vectorized evaluation: each input is (n_sym, K); returns (n_out, K)."""
        env = {}
        for (sym, n), arr in zip(self.inputs, arrays):
            a = np.asarray(arr, dtype=float)
            if a.shape[0] != n:
                raise DimensionMismatch(
                    f"input '{sym}' expects leading dim {n}, got {a.shape[0]}")
            env[sym] = a
        vals: dict[int, np.ndarray] = {}
        for node in topo_order(self.outputs):
            op = node.op
            if op == "const":
                v = node.payload
            elif op == "var":
                sym, idx = node.payload
                v = env[sym][idx]
            elif op == "neg":
                v = -vals[id(node.args[0])]
            elif op == "sin":
                v = np.sin(vals[id(node.args[0])])
            elif op == "cos":
                v = np.cos(vals[id(node.args[0])])
            elif op == "exp":
                v = np.exp(vals[id(node.args[0])])
            elif op == "log":
                v = np.log(vals[id(node.args[0])])
            elif op == "sqrt":
                v = np.sqrt(vals[id(node.args[0])])
            else:
                a, b = (vals[id(x)] for x in node.args)
                if op == "add":
                    v = a + b
                elif op == "sub":
                    v = a - b
                elif op == "mul":
                    v = a * b
                elif op == "div":
                    v = a / b
                else:
                    v = np.power(a, b)
            vals[id(node)] = v
        K = max((np.shape(a)[-1] for a in env.values() if np.ndim(a) > 1), default=1)
        rows = [np.broadcast_to(vals[id(o)], (K,)) for o in self.outputs]
        return np.array(rows, dtype=float)

    # -- differentiation -----------------------------------------------
    def jacobian(self, wrt: str) -> "VectorFunction":
        """Row-major flattened m x n Jacobian as a new VectorFunction."""
        cached = self._jac_cache.get(wrt)
        if cached is not None:
            return cached
        n = self.input_length(wrt)
        cols = []
        for j in range(n):
            cache = {}
            cols.append([diff(o, wrt, j, cache) for o in self.outputs])
        outs = [cols[j][i] for i in range(self.n_out) for j in range(n)]
        jac = VectorFunction(self.inputs, outs,
                             name=f"d({self.name or 'f'})/d{wrt}")
        self._jac_cache[wrt] = jac
        return jac

    def sparse_jacobian(self, wrt: str):
        """(rows, cols, VectorFunction of the structurally nonzero entries)."""
        n = self.input_length(wrt)
        rows, cols, outs = [], [], []
        per_col_cache = [dict() for _ in range(n)]
        # dependency scan keeps the derivative build near the sparsity size
        deps: dict[int, frozenset] = {}
        for node in topo_order(self.outputs):
            if node.op == "var":
                sym, idx = node.payload
                deps[id(node)] = frozenset([idx]) if sym == wrt else frozenset()
            elif node.op == "const":
                deps[id(node)] = frozenset()
            else:
                acc = frozenset()
                for a in node.args:
                    acc = acc | deps[id(a)]
                deps[id(node)] = acc
        for i, out in enumerate(self.outputs):
            for j in sorted(deps[id(out)]):
                d = diff(out, wrt, j, per_col_cache[j])
                if _is_const(d, 0.0):
                    continue
                rows.append(i)
                cols.append(j)
                outs.append(d)
        vf = VectorFunction(self.inputs, outs, name=f"nz d({self.name or 'f'})/d{wrt}")
        return np.asarray(rows, dtype=int), np.asarray(cols, dtype=int), vf

    # -- plumbing --------------------------------------------------------
    def __getstate__(self):
        return {"inputs": self.inputs, "outputs": self.outputs, "name": self.name}

    def __setstate__(self, state):
        self.inputs = state["inputs"]
        self.outputs = state["outputs"]
        self.name = state["name"]
        self._compiled = None
        self._jac_cache = {}

    def __repr__(self):
        sig = ", ".join(f"{s}[{n}]" for s, n in self.inputs)
        return f"VectorFunction({self.name or ''}: ({sig}) -> R^{self.n_out})"


# ---------------------------------------------------------------------------
# parser
#
# expr   := term (('+'|'-') term)*
# term   := factor (('*'|'/') factor)*
# factor := base ('^' factor)?
# base   := number | ident '[' int ']' | ident '(' expr ')' | '(' expr ')'
#         | '-' factor
#
# Indices are 1-based in text, 0-based internally.  '^' binds tighter than
# unary minus: "-x[1]^2" is -(x[1]^2).

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()\[\]]))")

_FUNCTIONS = {"sin", "cos", "exp", "log", "sqrt"}


class _Tokens:
    def __init__(self, text):
        self.text = text
        self.items = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                at = len(text) - len(stripped)
                raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", at)
            if m.lastgroup is not None:
                self.items.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        self.items.append(("end", "", len(text)))
        self.k = 0

    def peek(self):
        return self.items[self.k]

    def next(self):
        tok = self.items[self.k]
        self.k += 1
        return tok

    def expect(self, value, expected):
        kind, text, pos = self.next()
        if text != value:
            raise ExprSyntaxError(f"unexpected token {text or 'end of input'!r}",
                                  pos, expected=expected)
        return text


def parse(text: str, symbols: dict) -> Expr:
    """Parse an expression string against a symbol table.

    ``symbols`` maps a name either to an int (declared vector length) or to a
    float (named scalar constant, substituted at parse time).
    """
    toks = _Tokens(text)
    e = _parse_expr(toks, symbols)
    kind, tok, pos = toks.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {tok!r}", pos, expected="end of input")
    return e


def _parse_expr(toks, symbols):
    e = _parse_term(toks, symbols)
    while toks.peek()[1] in ("+", "-"):
        op = toks.next()[1]
        rhs = _parse_term(toks, symbols)
        e = add(e, rhs) if op == "+" else sub(e, rhs)
    return e


def _parse_term(toks, symbols):
    e = _parse_factor(toks, symbols)
    while toks.peek()[1] in ("*", "/"):
        op = toks.next()[1]
        rhs = _parse_factor(toks, symbols)
        e = mul(e, rhs) if op == "*" else div(e, rhs)
    return e


def _parse_factor(toks, symbols):
    base = _parse_base(toks, symbols)
    if toks.peek()[1] == "^":
        toks.next()
        exponent = _parse_factor(toks, symbols)
        return pow_(base, exponent)
    return base


def _parse_base(toks, symbols):
    kind, tok, pos = toks.next()
    if tok == "-":
        return neg(_parse_factor(toks, symbols))
    if tok == "(":
        e = _parse_expr(toks, symbols)
        toks.expect(")", "')'")
        return e
    if kind == "num":
        return const(float(tok))
    if kind == "ident":
        nxt = toks.peek()[1]
        if nxt == "(":
            if tok not in _FUNCTIONS:
                raise ExprSyntaxError(
                    f"unknown function {tok!r}", pos,
                    expected="one of " + ", ".join(sorted(_FUNCTIONS)))
            toks.next()
            arg = _parse_expr(toks, symbols)
            toks.expect(")", "')'")
            return _unary(tok, arg)
        if nxt == "[":
            if tok not in symbols or not isinstance(symbols[tok], int):
                raise UnknownSymbol(tok)
            toks.next()
            kind_i, tok_i, pos_i = toks.next()
            if kind_i != "num" or not tok_i.isdigit():
                raise ExprSyntaxError(f"bad index {tok_i!r}", pos_i,
                                      expected="positive integer")
            idx = int(tok_i)
            toks.expect("]", "']'")
            if idx < 1 or idx > symbols[tok]:
                raise DimensionMismatch(
                    f"index {idx} out of range for '{tok}' of length {symbols[tok]}")
            return var(tok, idx - 1)
        # bare identifier: named scalar constant
        if tok in symbols and not isinstance(symbols[tok], int):
            return const(float(symbols[tok]))
        raise UnknownSymbol(tok)
    raise ExprSyntaxError(f"unexpected token {tok or 'end of input'!r}", pos,
                          expected="number, identifier, '(' or '-'")
