"""Textual constraint language: lexer, parser, printer, answer rendering.

A query is a comma-separated conjunction terminated by `.`, with `%`
line comments.  Variables are bare identifiers, interned in order of
first occurrence.  A top-level `V in R` conjunct both posts the range
and records it as V's declaration, which answer rendering uses to omit
variables the solver did not touch.

Connective syntax comes in two forms: infix (`C1 cd C2`, `C1 cxd C2`,
`C1 => C2`) and functional with an optional trailing environment
argument (`cd(C1,C2,E)`, `cn(C,E)`, `ite(C,C1,C2,E)`).  The environment
argument is a plain identifier and never becomes a solver variable; the
stratification depth itself is set by an `init_env(E,[kflag(K)])`
conjunct, with `end_env(E)` as its closer.

Precedence, tightest first: `*`; `+` `-`; relations; `cd` `cxd` `#\\/`
`#/\\` (left associative, one level); `=>` (right associative); `,`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arith import Add, Const, Expr, Mul, RelOp, Sub, Var
from .constructive import (
    Cd,
    CFalse,
    Cn,
    Conj,
    CTrue,
    Ctr,
    Cxd,
    FALSE,
    GlobalCall,
    Imp,
    InRange,
    Ite,
    Rand,
    Rel,
    Ror,
    TRUE,
)
from .domain import FULL, NEG_INF, POS_INF, IntDomain, is_finite
from .engine import VarId

# -- tokens --------------------------------------------------------------

_SYMBOLS = (
    "#\\=",
    "#=<",
    "#>=",
    "#\\/",
    "#/\\",
    "#=",
    "#<",
    "#>",
    "=>",
    "..",
    "\\/",
    "=",
    ",",
    ".",
    "(",
    ")",
    "[",
    "]",
    "{",
    "}",
    "+",
    "-",
    "*",
)

_KEYWORDS = frozenset(
    {
        "in",
        "cd",
        "cxd",
        "cn",
        "ite",
        "true",
        "false",
        "inf",
        "sup",
        "init_env",
        "end_env",
        "kflag",
    }
)

_RELOPS = {
    "#=": RelOp.EQ,
    "=": RelOp.EQ,
    "#\\=": RelOp.NE,
    "#<": RelOp.LT,
    "#=<": RelOp.LE,
    "#>": RelOp.GT,
    "#>=": RelOp.GE,
}

_OP_TOKEN = {
    RelOp.EQ: "#=",
    RelOp.NE: "#\\=",
    RelOp.LT: "#<",
    RelOp.LE: "#=<",
    RelOp.GT: "#>",
    RelOp.GE: "#>=",
}

GLOBAL_NAMES = (
    "um3",
    "domctr",
    "elemctr",
    "lexctr",
    "mulctr",
    "disjctr",
    "incr",
    "sum",
)


@dataclass(frozen=True)
class Token:
    kind: str  # symbol text, keyword, "int", "name", or "eof"
    text: str
    pos: int


class ParseError(Exception):
    """Syntax error with source location and the expected alternatives."""

    def __init__(self, text: str, pos: int, message: str, expected=()):
        self.pos = pos
        self.expected = tuple(expected)
        prefix = text[:pos]
        self.line = prefix.count("\n") + 1
        self.col = pos - (prefix.rfind("\n") + 1) + 1
        detail = f"line {self.line}, column {self.col}: {message}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)
        self.message = message


def _lex(text: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "%":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(
                Token(word if word in _KEYWORDS else "name", word, i)
            )
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                # keep `1..5` from lexing the dot as a terminator
                toks.append(Token(sym, sym, i))
                i += len(sym)
                break
        else:
            raise ParseError(text, i, f"stray character {ch!r}")
    toks.append(Token("eof", "", n))
    return toks


# -- parsed query --------------------------------------------------------


@dataclass
class Query:
    """One parsed query: conjuncts plus the variable table.

    Variable ids are indices into ``names``; ``declared`` maps a
    variable to the range stated in its top-level `in` conjunct.
    """

    conjuncts: tuple[Ctr, ...] = ()
    names: tuple[str, ...] = ()
    declared: dict[VarId, IntDomain] = field(default_factory=dict)
    k: int | None = None
    env_name: str | None = None

    def body(self) -> Ctr:
        if not self.conjuncts:
            return TRUE
        out = self.conjuncts[-1]
        for c in reversed(self.conjuncts[:-1]):
            out = Conj(c, out)
        return out


class _ExprOnly:
    """Marks a parenthesized group that held a bare expression."""

    __slots__ = ("expr",)

    def __init__(self, expr: Expr) -> None:
        self.expr = expr


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks = _lex(text)
        self.i = 0
        self.names: dict[str, VarId] = {}
        self.order: list[str] = []
        self.declared: dict[VarId, IntDomain] = {}
        self.k: int | None = None
        self.env_name: str | None = None

    # token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def eat(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            self.fail(f"found {t.text or 'end of input'!r}", [kind])
        return self.next()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def fail(self, message: str, expected=()):
        raise ParseError(self.text, self.peek().pos, message, expected)

    def intern(self, name: str) -> VarId:
        if name not in self.names:
            self.names[name] = len(self.order)
            self.order.append(name)
        return self.names[name]

    # query structure

    def query(self) -> Query:
        conjuncts: list[Ctr] = []
        while True:
            if self.at("init_env"):
                self.init_env()
            elif self.at("end_env"):
                self.end_env()
            else:
                c = self.ctr()
                if isinstance(c, InRange):
                    self.declared[c.vid] = c.dom
                conjuncts.append(c)
            if self.at(","):
                self.next()
                continue
            break
        self.eat(".")
        if not self.at("eof"):
            self.fail("trailing input after the final '.'")
        return Query(
            conjuncts=tuple(conjuncts),
            names=tuple(self.order),
            declared=self.declared,
            k=self.k,
            env_name=self.env_name,
        )

    def init_env(self) -> None:
        self.eat("init_env")
        self.eat("(")
        self.env_name = self.eat("name").text
        self.eat(",")
        self.eat("[")
        self.eat("kflag")
        self.eat("(")
        self.k = int(self.eat("int").text)
        self.eat(")")
        self.eat("]")
        self.eat(")")

    def end_env(self) -> None:
        self.eat("end_env")
        self.eat("(")
        self.eat("name")
        self.eat(")")

    # constraints, loosest to tightest

    def ctr(self) -> Ctr:
        a = self.ctr_or()
        if self.at("=>"):
            self.next()
            return Imp(a, self.ctr())
        return a

    def ctr_or(self) -> Ctr:
        # after an operand, `cd`/`cxd` is always the infix form; the
        # functional form only occurs where an atom is expected
        a = self.ctr_atom()
        while True:
            t = self.peek()
            if t.kind == "cd":
                self.next()
                a = Cd(a, self.ctr_atom())
            elif t.kind == "cxd":
                self.next()
                a = Cxd(a, self.ctr_atom())
            elif t.kind == "#\\/":
                self.next()
                a = Ror(a, self.ctr_atom())
            elif t.kind == "#/\\":
                self.next()
                a = Rand(a, self.ctr_atom())
            else:
                return a

    def ctr_atom(self) -> Ctr:
        t = self.peek()
        if t.kind == "true":
            self.next()
            return TRUE
        if t.kind == "false":
            self.next()
            return FALSE
        if t.kind == "cn":
            self.next()
            args, _ = self.operator_args(1, 1)
            return Cn(args[0])
        if t.kind in ("cd", "cxd") and self.peek(1).kind == "(":
            self.next()
            args, _ = self.operator_args(2, 2)
            node = Cd if t.kind == "cd" else Cxd
            return node(args[0], args[1])
        if t.kind == "=>":
            # functional implication: =>(C1, C2, E)
            self.next()
            args, _ = self.operator_args(2, 2)
            return Imp(args[0], args[1])
        if t.kind == "ite":
            self.next()
            args, _ = self.operator_args(3, 3)
            return Ite(args[0], args[1], args[2])
        if t.kind == "name" and t.text in GLOBAL_NAMES:
            if self.peek(1).kind == "(":
                return self.global_call(t.text)
        if t.kind == "name" and self.peek(1).kind == "in":
            name = self.next().text
            self.next()
            return InRange(self.intern(name), self.range_union())
        if t.kind == "(":
            inner = self.group()
            if isinstance(inner, _ExprOnly):
                return self.rel_after(inner.expr)
            return inner
        # an arithmetic expression must continue as a relation
        e = self.expr()
        if self.peek().kind in _RELOPS:
            return self.rel_after(e)
        if isinstance(e, Const) and e.value in (0, 1):
            return TRUE if e.value == 1 else FALSE
        self.fail("expression is not a constraint", ["relational operator"])

    def rel_after(self, lhs: Expr) -> Ctr:
        t = self.peek()
        if t.kind not in _RELOPS:
            self.fail(
                f"found {t.text or 'end of input'!r}",
                ["relational operator"],
            )
        self.next()
        return Rel(lhs, _RELOPS[t.kind], self.expr())

    def group(self) -> "Ctr | _ExprOnly":
        """Parenthesized group: a conjunction, or a bare expression."""
        self.eat("(")
        # try a constraint first; fall back to a pure expression
        mark = self.i
        try:
            parts = [self.ctr()]
            while self.at(","):
                self.next()
                parts.append(self.ctr())
            self.eat(")")
        except ParseError:
            self.i = mark
            e = self.expr()
            self.eat(")")
            return _ExprOnly(e)
        out = parts[-1]
        for c in reversed(parts[:-1]):
            out = Conj(c, out)
        return out

    def operator_args(
        self, lo: int, hi: int
    ) -> tuple[list[Ctr], str | None]:
        """`(C1, ..., Cn[, Env])` with lo..hi constraint arguments."""
        self.eat("(")
        args: list[Ctr] = []
        envname: str | None = None
        while True:
            if (
                len(args) >= lo
                and self.at("name")
                and self.peek(1).kind == ")"
            ):
                envname = self.next().text
            else:
                args.append(self.ctr())
            if self.at(","):
                self.next()
                continue
            break
        self.eat(")")
        if not lo <= len(args) <= hi:
            self.fail(
                f"operator takes {lo} to {hi} constraint arguments, "
                f"got {len(args)}"
            )
        return args, envname

    # global constraint calls

    def global_call(self, name: str) -> Ctr:
        self.next()
        self.eat("(")
        if name == "um3":
            x = self.var_arg()
            self.eat(",")
            y = self.var_arg()
            self.eat(",")
            z = self.var_arg()
            args: tuple = (x, y, z)
        elif name == "domctr":
            x = self.var_arg()
            self.eat(",")
            args = (x, self.var_list())
        elif name == "elemctr":
            i = self.var_arg()
            self.eat(",")
            xs = self.var_list()
            self.eat(",")
            args = (i, xs, self.var_arg())
        elif name == "lexctr":
            xs = self.var_list()
            self.eat(",")
            args = (xs, self.var_list())
        elif name == "mulctr":
            nv = self.var_arg()
            self.eat(",")
            x = self.var_arg()
            self.eat(",")
            mn = self.int_arg()
            self.eat(",")
            args = (nv, x, mn, self.int_arg())
        elif name == "disjctr":
            ss = self.var_list()
            self.eat(",")
            ps = self.var_list()
            self.eat(",")
            args = (ss, ps, self.var_or_int())
        elif name == "incr":
            x = self.var_arg()
            self.eat(",")
            args = (x, self.var_arg())
        elif name == "sum":
            vs = self.var_list()
            self.eat(",")
            op_tok = self.next()
            if op_tok.kind not in _RELOPS:
                self.fail("sum needs a relational operator")
            self.eat(",")
            args = (vs, _RELOPS[op_tok.kind], self.var_or_int())
        else:  # pragma: no cover - guarded by the caller
            self.fail(f"unknown global {name}")
        self.eat(")")
        return GlobalCall(name, args)

    def var_arg(self) -> Var:
        return Var(self.intern(self.eat("name").text))

    def var_list(self) -> tuple[Var, ...]:
        self.eat("[")
        out = [self.var_arg()]
        while self.at(","):
            self.next()
            out.append(self.var_arg())
        self.eat("]")
        return tuple(out)

    def int_arg(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        v = int(self.eat("int").text)
        return -v if neg else v

    def var_or_int(self):
        if self.at("name"):
            return self.var_arg()
        return self.int_arg()

    # ranges

    def range_union(self) -> IntDomain:
        d = self.range_piece()
        while self.at("\\/"):
            self.next()
            d = d.union(self.range_piece())
        return d

    def range_piece(self) -> IntDomain:
        if self.at("{"):
            self.next()
            v = self.int_arg()
            self.eat("}")
            return IntDomain.point(v)
        if self.at("("):
            self.next()
            d = self.range_union()
            self.eat(")")
            return d
        lo = self.range_bound()
        if self.at(".."):
            self.next()
            return IntDomain.range(lo, self.range_bound())
        if not isinstance(lo, int):
            self.fail("an unbounded range needs '..'")
        return IntDomain.point(lo)

    def range_bound(self):
        if self.at("inf"):
            self.next()
            return NEG_INF
        if self.at("sup"):
            self.next()
            return POS_INF
        return self.int_arg()

    # arithmetic expressions

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.at("*"):
            self.next()
            e = Mul(e, self.factor())
        return e

    def factor(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if t.kind == "-":
            self.next()
            f = self.factor()
            if isinstance(f, Const):
                return Const(-f.value)
            return Sub(Const(0), f)
        if t.kind == "name":
            self.next()
            return Var(self.intern(t.text))
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.eat(")")
            return e
        self.fail(
            f"found {t.text or 'end of input'!r}",
            ["integer", "variable", "'('"],
        )


def parse(text: str) -> Query:
    """Parse one `.`-terminated query."""
    return _Parser(text).query()


# -- printing ------------------------------------------------------------


def _default_name(vid: VarId) -> str:
    return f"V{vid}"


def _expr_text(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return _PRINT_NAME(e.vid)
    if isinstance(e, Add):
        s = f"{_expr_text(e.a, 1)}+{_expr_text(e.b, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(e, Sub):
        s = f"{_expr_text(e.a, 1)}-{_expr_text(e.b, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(e, Mul):
        return f"{_expr_text(e.a, 2)}*{_expr_text(e.b, 2)}"
    raise TypeError(f"not an expression: {e!r}")


_PRINT_NAME = _default_name


def range_text(d: IntDomain, *, standalone: bool = True) -> str:
    """Render a domain the way answers spell ranges."""
    if d.is_empty():
        return "{}"
    ivs = d.ivs
    if len(ivs) == 1 and standalone:
        lo, hi = ivs[0]
        if lo == hi:
            return f"{{{lo}}}"
        return f"{_bound_text(lo)}..{_bound_text(hi)}"
    parts = []
    for lo, hi in ivs:
        if lo == hi:
            parts.append(f"{{{lo}}}")
        elif is_finite(lo) and is_finite(hi):
            parts.append(f"({lo}..{hi})")
        else:
            parts.append(f"({_bound_text(lo)}..{_bound_text(hi)})")
    return "\\/".join(parts)


def _bound_text(b) -> str:
    if b is NEG_INF:
        return "inf"
    if b is POS_INF:
        return "sup"
    return str(b)


def print_ctr(c: Ctr, names=None) -> str:
    """Canonical text for a constraint; `parse` reads it back."""
    global _PRINT_NAME
    _PRINT_NAME = names or _default_name
    try:
        return _ctr_text(c)
    finally:
        _PRINT_NAME = _default_name


def _operand(c: Ctr) -> str:
    """Operand of a binary connective: parenthesized unless chaining."""
    if isinstance(c, (Cd, Cxd, Ror, Rand)):
        return _ctr_text(c)
    return f"({_ctr_text(c)})"


def _ctr_text(c: Ctr) -> str:
    if isinstance(c, CTrue):
        return "true"
    if isinstance(c, CFalse):
        return "false"
    if isinstance(c, Rel):
        return f"{_expr_text(c.lhs)}{_OP_TOKEN[c.op]}{_expr_text(c.rhs)}"
    if isinstance(c, InRange):
        return f"{_PRINT_NAME(c.vid)} in {range_text(c.dom)}"
    if isinstance(c, Conj):
        return f"{_ctr_text(c.a)}, {_ctr_text(c.b)}"
    if isinstance(c, Cd):
        return f"{_operand_left(c.a, Cd)} cd {_operand(c.b)}"
    if isinstance(c, Cxd):
        return f"{_operand_left(c.a, Cxd)} cxd {_operand(c.b)}"
    if isinstance(c, Ror):
        return f"{_operand_left(c.a, Ror)} #\\/ {_operand(c.b)}"
    if isinstance(c, Rand):
        return f"{_operand_left(c.a, Rand)} #/\\ {_operand(c.b)}"
    if isinstance(c, Imp):
        rhs = (
            _ctr_text(c.b) if isinstance(c.b, Imp) else f"({_ctr_text(c.b)})"
        )
        return f"({_ctr_text(c.a)}) => {rhs}"
    if isinstance(c, Cn):
        return f"cn({_grouped(c.a)})"
    if isinstance(c, Ite):
        return (
            f"ite({_grouped(c.cond)}, {_grouped(c.a)}, {_grouped(c.b)})"
        )
    if isinstance(c, GlobalCall):
        return f"{c.name}({', '.join(_call_arg(a) for a in c.args)})"
    raise TypeError(f"not a constraint: {c!r}")


def _operand_left(c: Ctr, kind: type) -> str:
    # the left side of a left-associative chain stays bare
    if isinstance(c, kind):
        return _ctr_text(c)
    return _operand(c)


def _grouped(c: Ctr) -> str:
    """Argument position: conjunctions need their own parentheses."""
    if isinstance(c, Conj):
        return f"({_ctr_text(c)})"
    return _ctr_text(c)


def _call_arg(a) -> str:
    if isinstance(a, Var):
        return _PRINT_NAME(a.vid)
    if isinstance(a, tuple):
        return "[" + ",".join(_call_arg(x) for x in a) + "]"
    if isinstance(a, RelOp):
        return _OP_TOKEN[a]
    return str(a)


def print_query(q: Query) -> str:
    """Canonical text of a whole query, kflag wrapper included."""
    name = lambda vid: q.names[vid]
    parts = [print_ctr(c, name) for c in q.conjuncts]
    if q.k is not None:
        env = q.env_name or "E"
        parts.insert(0, f"init_env({env},[kflag({q.k})])")
        parts.append(f"end_env({env})")
    return ", ".join(parts) + "."


# -- answer rendering ----------------------------------------------------


def print_answer(store, query: Query) -> str:
    """The solver's answer for a query, SICStus style.

    Declared variables still matching their declaration are omitted;
    bound variables print as `V = k` first; remaining variables group
    by equal domain, in declaration order.
    """
    if store.failed:
        return "false"
    shown: list[tuple[str, IntDomain]] = []
    for vid, name in enumerate(query.names):
        d = store.dom(vid)
        if vid in query.declared and d == query.declared[vid]:
            continue
        shown.append((name, d))
    parts: list[str] = []
    for name, d in shown:
        if d.is_singleton():
            parts.append(f"{name} = {d.value()}")
    groups: list[tuple[IntDomain, list[str]]] = []
    for name, d in shown:
        if d.is_singleton():
            continue
        if d.is_finite():
            for gd, gnames in groups:
                if gd == d:
                    gnames.append(name)
                    break
            else:
                groups.append((d, [name]))
        else:
            # unbounded variables are never pooled
            groups.append((d, [name]))
    for gd, gnames in groups:
        parts.append(f"{','.join(gnames)} in {_answer_range(gd)}")
    return ", ".join(parts) if parts else "true"


def _answer_range(d: IntDomain) -> str:
    lo, hi = d.bounds()
    if len(d.ivs) == 1:
        return f"{_bound_text(lo)}..{_bound_text(hi)}"
    return range_text(d, standalone=False)
