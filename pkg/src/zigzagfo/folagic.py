"""First-order formulas over relational signatures: parser, printer, a
brute-force evaluator, prefix classification, isomorphism-type formulas,
a generator for the tree-of-expanders sentence, and linear-time checkers
for its conjuncts."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from . import rotgraph as rg
from .structures import (Signature, Structure, StructureError, e_name, f_name, l_name)

DEFAULT_BUDGET = 100_000_000


# AST

@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...]
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Eq:
    left: str
    right: str
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


Formula = Atom | Eq | Not | And | Or | Exists | Forall | Top | Bottom
TRUE, FALSE = Top(), Bottom()


def conj(parts: Iterable[Formula]) -> Formula:
    ps = []
    for p in parts:
        if isinstance(p, Top):
            continue
        if isinstance(p, And):
            ps.extend(p.parts)
        else:
            ps.append(p)
    if not ps:
        return TRUE
    return ps[0] if len(ps) == 1 else And(tuple(ps))


def disj(parts: Iterable[Formula]) -> Formula:
    ps = []
    for p in parts:
        if isinstance(p, Bottom):
            continue
        if isinstance(p, Or):
            ps.extend(p.parts)
        else:
            ps.append(p)
    if not ps:
        return FALSE
    return ps[0] if len(ps) == 1 else Or(tuple(ps))


def neg(f: Formula) -> Formula:
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj([Not(a), b])


def neq(x: str, y: str) -> Formula:
    return Not(Eq(x, y))


def exists(vs, body: Formula) -> Formula:
    vs = (vs,) if isinstance(vs, str) else tuple(vs)
    return Exists(vs, body)


def forall(vs, body: Formula) -> Formula:
    vs = (vs,) if isinstance(vs, str) else tuple(vs)
    return Forall(vs, body)


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, Not):
        return free_vars(f.sub)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - set(f.vars)
    return set()


def all_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, Not):
        return all_vars(f.sub)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for p in f.parts:
            out |= all_vars(p)
        return out
    if isinstance(f, (Exists, Forall)):
        return all_vars(f.body) | set(f.vars)
    return set()


def substitute(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables; targets must not be captured by binders."""
    if not mapping:
        return f
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(mapping.get(a, a) for a in f.args))
    if isinstance(f, Eq):
        return Eq(mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, Not):
        return Not(substitute(f.sub, mapping))
    if isinstance(f, And):
        return And(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k not in f.vars}
        if set(inner.values()) & set(f.vars):
            raise ValueError("substitution would capture a variable")
        return type(f)(f.vars, substitute(f.body, inner))
    return f


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, Not):
        return quantifier_depth(f.sub)
    if isinstance(f, (And, Or)):
        return max((quantifier_depth(p) for p in f.parts), default=0)
    if isinstance(f, (Exists, Forall)):
        return len(f.vars) + quantifier_depth(f.body)
    return 0


def size(f: Formula) -> int:
    if isinstance(f, Not):
        return 1 + size(f.sub)
    if isinstance(f, (And, Or)):
        return 1 + sum(size(p) for p in f.parts)
    if isinstance(f, (Exists, Forall)):
        return 1 + size(f.body)
    return 1


# parsing

class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, text: str, offset: int):
        line = text.count("\n", 0, offset) + 1
        col = offset - (text.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{msg} at line {line}, column {col} (offset {offset})")
        self.offset = offset
        self.line = line
        self.column = col


class UnknownSymbol(FormulaSyntaxError):
    pass


class ArityMismatch(FormulaSyntaxError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<neq>!=)|(?P<ge>>=)|(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym>[()\[\],.&|!=]))"
)
_KEYWORDS = {"exists", "forall", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        val = m.group(kind)
        start = m.start(kind)
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Signature | None):
        self.text = text
        self.sig = sig
        self.toks = _tokenize(text)
        self.i = 0
        self.fresh = 0
        self.names = {v for k, v, _ in self.toks if k == "ident"}

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, offset: int | None = None):
        return FormulaSyntaxError(msg, self.text, self.peek()[2] if offset is None else offset)

    def expect(self, val: str):
        kind, v, pos = self.peek()
        if v != val or kind in ("ident", "num"):
            found = "end of input" if kind == "eof" else repr(v)
            raise self.error(f"expected {val!r}, found {found}")
        self.i += 1
        return pos

    def accept(self, val: str) -> bool:
        kind, v, _ = self.peek()
        if v == val and kind not in ("ident", "num", "eof"):
            self.i += 1
            return True
        return False

    def fresh_var(self, base: str) -> str:
        while True:
            self.fresh += 1
            name = f"_{base}{self.fresh}"
            if name not in self.names:
                self.names.add(name)
                return name

    def parse(self, bound=()) -> Formula:
        f = self.implication(frozenset(bound))
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return f

    def implication(self, bound) -> Formula:
        left = self.disjunction(bound)
        if self.accept("->"):
            right = self.implication(bound)
            return Or((Not(left), right))
        return left

    def disjunction(self, bound) -> Formula:
        parts = [self.conjunction(bound)]
        while self.accept("|"):
            parts.append(self.conjunction(bound))
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self, bound) -> Formula:
        parts = [self.unary(bound)]
        while self.accept("&"):
            parts.append(self.unary(bound))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self, bound) -> Formula:
        kind, v, pos = self.peek()
        if kind == "sym" and v == "!":
            self.i += 1
            return Not(self.unary(bound))
        if kind == "ident" and v in ("exists", "forall"):
            return self.quantifier(bound)
        return self.primary(bound)

    def quantifier(self, bound) -> Formula:
        _, q, qpos = self.peek()
        self.i += 1
        count = None
        if q == "exists":
            if self.accept(">="):
                count = (">=", self.number())
            elif self.peek()[1] == "=" and self.peek(1)[0] == "num":
                self.i += 1
                c = self.number()
                if c != 1:
                    raise self.error("only exists=1 is supported", self.toks[self.i - 1][2])
                count = ("=", 1)
        vs = []
        while self.peek()[0] == "ident" and self.peek()[1] not in _KEYWORDS:
            _, name, vpos = self.peek()
            if name in bound or name in vs:
                raise self.error(f"variable {name!r} is already bound", vpos)
            vs.append(name)
            self.i += 1
        if not vs:
            raise self.error("expected a variable")
        self.expect(".")
        body = self.implication(bound | set(vs))
        if count is None:
            return Exists(tuple(vs), body) if q == "exists" else Forall(tuple(vs), body)
        if len(vs) != 1:
            raise self.error("counting quantifiers bind exactly one variable", qpos)
        return self.desugar_count(count, vs[0], body, bound)

    def desugar_count(self, count, x: str, body: Formula, bound) -> Formula:
        op, m = count
        if op == "=":
            y = self.fresh_var(x)
            return Exists((x,), conj([body, Forall((y,), implies(substitute(body, {x: y}), Eq(y, x)))]))
        if m <= 0:
            return TRUE
        ys = [self.fresh_var(x) for _ in range(m)]
        distinct = [neq(ys[a], ys[b]) for a in range(m) for b in range(a + 1, m)]
        copies = [substitute(body, {x: y}) for y in ys]
        return Exists(tuple(ys), conj(distinct + copies))

    def number(self) -> int:
        kind, v, _ = self.peek()
        if kind != "num":
            raise self.error("expected a number")
        self.i += 1
        return int(v)

    def primary(self, bound) -> Formula:
        kind, v, pos = self.peek()
        if kind == "sym" and v == "(":
            self.i += 1
            f = self.implication(bound)
            self.expect(")")
            return f
        if kind == "ident" and v == "true":
            self.i += 1
            return TRUE
        if kind == "ident" and v == "false":
            self.i += 1
            return FALSE
        if kind != "ident":
            found = "end of input" if kind == "eof" else repr(v)
            raise self.error(f"expected a formula, found {found}")
        nxt = self.peek(1)[1]
        if nxt in ("(", "["):
            return self.atom()
        self.i += 1
        if self.accept("="):
            return Eq(v, self.variable(), pos)
        if self.accept("!="):
            return Not(Eq(v, self.variable(), pos))
        raise self.error("expected '=' or '!=' after variable")

    def variable(self) -> str:
        kind, v, _ = self.peek()
        if kind != "ident" or v in _KEYWORDS:
            raise self.error("expected a variable")
        self.i += 1
        return v

    def atom(self) -> Formula:
        _, name, pos = self.peek()
        self.i += 1
        idx = None
        if self.accept("["):
            idx = [self.number()]
            while self.accept(","):
                idx.append(self.number())
            self.expect("]")
        self.expect("(")
        args = [self.variable()]
        while self.accept(","):
            args.append(self.variable())
        self.expect(")")
        full = name if idx is None else f"{name}[{','.join(map(str, idx))}]"
        return self.resolve(full, name, idx, tuple(args), pos)

    def resolve(self, full, base, idx, args, pos) -> Formula:
        sig = self.sig
        if sig is None:
            return Atom(full, args, pos)
        if full in sig:
            if sig.arity(full) != len(args):
                raise ArityMismatch(f"{full} expects {sig.arity(full)} arguments, got {len(args)}", self.text, pos)
            return Atom(full, args, pos)
        if idx is None and sig.param is not None and base in ("E", "F", "L"):
            if len(args) != 2:
                raise ArityMismatch(f"{base} expects 2 arguments, got {len(args)}", self.text, pos)
            return union_atom(sig.param, base, args[0], args[1])
        raise UnknownSymbol(f"unknown relation symbol {full!r}", self.text, pos)


def union_atom(D: int, kind: str, x: str, y: str) -> Formula:
    """The disjunction standing for E(x,y), F(x,y) or L(x,y)."""
    if kind == "E":
        names = [e_name(i, j, D) for i in range(D * D) for j in range(D * D)]
    elif kind == "F":
        names = [f_name(k, D) for k in range(D ** 4)]
    else:
        names = [l_name(k, D) for k in range(D ** 4)]
    return Or(tuple(Atom(n, (x, y)) for n in names))


def parse(text: str, sig: Signature | None = None) -> Formula:
    return _Parser(text, sig).parse()


# printing

def to_text(f: Formula) -> str:
    return _print(f, 0)


def _print(f: Formula, ctx: int) -> str:
    # ctx: 0 top/quantifier body, 1 operand of |, 2 operand of &, 3 operand of !
    if isinstance(f, Atom):
        return f"{f.rel}({','.join(f.args)})"
    if isinstance(f, Eq):
        return f"{f.left}={f.right}"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Not):
        if isinstance(f.sub, Eq):
            return f"{f.sub.left}!={f.sub.right}"
        return "!" + _print(f.sub, 3)
    if isinstance(f, Or):
        s = " | ".join(_print(p, 1) for p in f.parts)
        return s if ctx == 0 else f"({s})"
    if isinstance(f, And):
        s = " & ".join(_print(p, 2) for p in f.parts)
        return s if ctx <= 1 else f"({s})"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        s = f"{q} {' '.join(f.vars)}. {_print(f.body, 0)}"
        return s if ctx == 0 else f"({s})"
    raise TypeError(f"not a formula: {f!r}")


# evaluation

class BudgetExceeded(RuntimeError):
    pass


class EvalError(ValueError):
    pass


def evaluate(a: Structure, f: Formula, asg: Mapping[str, int] | None = None,
             budget: int = DEFAULT_BUDGET) -> bool:
    """Truth of ``f`` in ``a`` under ``asg`` by exhaustive enumeration.
    Each quantifier assignment counts as one probe against ``budget``."""
    asg = dict(asg or {})
    missing = free_vars(f) - set(asg)
    if missing:
        raise EvalError(f"unassigned free variables: {sorted(missing)}")
    for v, x in asg.items():
        if not 0 <= x < a.n:
            raise EvalError(f"value {x} for {v} out of range")
    slots: dict[str, int] = {}
    for v in sorted(all_vars(f) | set(asg)):
        slots[v] = len(slots)
    env = [0] * len(slots)
    for v, x in asg.items():
        env[slots[v]] = x
    counter = [0]
    fn = _compile(f, a, slots, counter, budget)
    return bool(fn(env))


def probes_used(a: Structure, f: Formula, asg=None, budget: int = DEFAULT_BUDGET) -> tuple[bool, int]:
    """Like :func:`evaluate` but also returns the probe count."""
    asg = dict(asg or {})
    slots = {v: i for i, v in enumerate(sorted(all_vars(f) | set(asg)))}
    env = [0] * len(slots)
    for v, x in asg.items():
        env[slots[v]] = x
    counter = [0]
    res = _compile(f, a, slots, counter, budget)(env)
    return bool(res), counter[0]


def _compile(f: Formula, a: Structure, slots, counter, budget) -> Callable[[list], bool]:
    if isinstance(f, Top):
        return lambda env: True
    if isinstance(f, Bottom):
        return lambda env: False
    if isinstance(f, Atom):
        if f.rel not in a.sig:
            raise EvalError(f"unknown relation symbol {f.rel!r}")
        if a.sig.arity(f.rel) != len(f.args):
            raise EvalError(f"arity mismatch for {f.rel}")
        rel = a.rels.get(f.rel, frozenset())
        idx = [slots[v] for v in f.args]
        if len(idx) == 2:
            p, q = idx
            return lambda env: (env[p], env[q]) in rel
        if len(idx) == 1:
            p = idx[0]
            return lambda env: (env[p],) in rel
        return lambda env: tuple(env[i] for i in idx) in rel
    if isinstance(f, Eq):
        p, q = slots[f.left], slots[f.right]
        return lambda env: env[p] == env[q]
    if isinstance(f, Not):
        sub = _compile(f.sub, a, slots, counter, budget)
        return lambda env: not sub(env)
    if isinstance(f, And):
        subs = [_compile(p, a, slots, counter, budget) for p in f.parts]
        return lambda env: all(s(env) for s in subs)
    if isinstance(f, Or):
        subs = [_compile(p, a, slots, counter, budget) for p in f.parts]
        return lambda env: any(s(env) for s in subs)
    if isinstance(f, (Exists, Forall)):
        body = _compile(f.body, a, slots, counter, budget)
        n = a.n
        want = isinstance(f, Exists)
        for v in reversed(f.vars):
            body = _quant(slots[v], body, n, want, counter, budget)
        return body
    raise TypeError(f"not a formula: {f!r}")


def _quant(slot: int, body, n: int, want: bool, counter, budget):
    def run(env):
        for x in range(n):
            counter[0] += 1
            if counter[0] > budget:
                raise BudgetExceeded(f"evaluation exceeded {budget} probes")
            env[slot] = x
            if body(env) == want:
                return want
        return not want
    return run


# prefix classes

def prefix_blocks(f: Formula) -> tuple[list[str], Formula]:
    """Quantifier blocks of the leading prefix and the remaining matrix."""
    blocks: list[str] = []
    while isinstance(f, (Exists, Forall)):
        q = "E" if isinstance(f, Exists) else "A"
        if not blocks or blocks[-1] != q:
            blocks.append(q)
        f = f.body
    return blocks, f


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Exists, Forall)):
        return False
    if isinstance(f, Not):
        return is_quantifier_free(f.sub)
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(p) for p in f.parts)
    return True


def prefix_class(f: Formula) -> str:
    """'Sigma0', 'Sigma<n>', 'Pi<n>' for prenex formulas, else 'non-prenex'."""
    blocks, matrix = prefix_blocks(f)
    if not is_quantifier_free(matrix):
        return "non-prenex"
    if not blocks:
        return "Sigma0"
    return ("Sigma" if blocks[0] == "E" else "Pi") + str(len(blocks))


# isomorphism-type formulas

def iota(a: Structure, vars: Sequence[str], budget: int = 1_000_000) -> Formula:
    """Conjunction fixing the induced substructure on ``vars`` to be a copy
    of ``a``: positive atoms, negated atoms and pairwise inequalities."""
    if len(vars) != a.n:
        raise ValueError(f"need {a.n} variables, got {len(vars)}")
    if len(set(vars)) != len(vars):
        raise ValueError("variables must be distinct")
    total = sum(a.n ** ar for _, ar in a.sig.symbols)
    if total > budget:
        raise BudgetExceeded(f"iota needs {total} literals > budget {budget}")
    pos, negs = [], []
    for name, ar in a.sig.symbols:
        rel = a.rels.get(name, frozenset())
        for t in itertools.product(range(a.n), repeat=ar):
            atom = Atom(name, tuple(vars[x] for x in t))
            (pos if t in rel else negs).append(atom if t in rel else Not(atom))
    ineq = [neq(vars[p], vars[q]) for p in range(a.n) for q in range(p + 1, a.n)]
    return conj(pos + negs + ineq)


# the tree-of-expanders sentence

class ZigzagSentence:
    """Builds the four conjuncts for parameter D and base graph H.

    With ``literal=True`` the functionality clause and the recursion clause
    are stated for every element. The default relativises both to non-root
    elements; the literal form has no model because the root carries
    E_{i,j}(r,r) for every pair (i, j).
    """

    def __init__(self, D: int, h: rg.RotationGraph, literal: bool = False):
        if h.degree != D or h.n != D ** 4:
            raise ValueError("H must be D-regular on D^4 vertices")
        self.D, self.h, self.literal = D, h, literal
        self.D2, self.D4 = D * D, D ** 4

    def E(self, i, j, x, y):
        return Atom(e_name(i, j, self.D), (x, y))

    def F(self, k, x, y):
        return Atom(f_name(k, self.D), (x, y))

    def L(self, k, x, y):
        return Atom(l_name(k, self.D), (x, y))

    def Fany(self, x, y):
        return disj(self.F(k, x, y) for k in range(self.D4))

    def root(self, x: str, y: str = "y") -> Formula:
        return Forall((y,), Not(self.Fany(y, x)))

    def tree(self) -> Formula:
        D4 = self.D4
        t1 = Exists(("x",), conj([self.root("x"), Forall(("x1",), implies(self.root("x1"), Eq("x1", "x")))]))
        one_parent = Exists(("y",), conj([
            self.Fany("y", "x"),
            Forall(("y1",), implies(self.Fany("y1", "x"), Eq("y1", "y"))),
        ]))
        t2 = Forall(("x",), disj([
            conj([self.root("x"), Atom("R", ("x", "x"))]),
            conj([one_parent, Not(Exists(("y",), Atom("R", ("x", "y")))), Not(Exists(("y",), Atom("R", ("y", "x"))))]),
        ]))
        leaf = conj([
            Not(Exists(("y",), self.Fany("x", "y"))),
            conj(self.L(k, "x", "x") for k in range(D4)),
            Forall(("y",), implies(neq("y", "x"), conj(
                [Not(self.L(k, "x", "y")) for k in range(D4)] + [Not(self.L(k, "y", "x")) for k in range(D4)]))),
        ])
        inner = conj([
            Not(Exists(("y",), disj(disj([self.L(k, "x", "y"), self.L(k, "y", "x")]) for k in range(D4)))),
            conj(Exists(("yk",), conj([
                neq("x", "yk"),
                self.F(k, "x", "yk"),
                conj(Not(self.F(k2, "x", "yk")) for k2 in range(D4) if k2 != k),
                Forall(("y",), implies(neq("y", "yk"), Not(self.F(k, "x", "y")))),
            ])) for k in range(D4)),
        ])
        t3 = Forall(("x",), disj([leaf, inner]))
        return conj([t1, t2, t3])

    def rotation(self) -> Formula:
        D2 = self.D2
        m1 = Forall(("x", "y"), conj(
            implies(self.E(i, j, "x", "y"), self.E(j, i, "y", "x")) for i in range(D2) for j in range(D2)))
        per_port = conj(
            disj(
                conj([
                    Exists(("y",), conj([self.E(i, j, "x", "y"),
                                         Forall(("y1",), implies(self.E(i, j, "x", "y1"), Eq("y1", "y")))])),
                    conj(Not(Exists(("y",), self.E(i, j2, "x", "y"))) for j2 in range(D2) if j2 != j),
                ])
                for j in range(D2))
            for i in range(D2))
        m2 = Forall(("x",), per_port if self.literal else disj([self.root("x"), per_port]))
        return conj([m1, m2])

    def base(self) -> Formula:
        D2 = self.D2
        g1 = rg.square(self.h)
        loops = conj(
            conj([self.E(i, j, "x", "x"),
                  Forall(("y",), implies(neq("x", "y"), conj([Not(self.E(i, j, "x", "y")),
                                                              Not(self.E(i, j, "y", "x"))])))])
            for i in range(D2) for j in range(D2))
        edges = []
        for k in range(self.D4):
            for i in range(D2):
                k2, i2 = g1.rot(k, i)
                edges.append(Exists(("y", "y1"), conj([self.F(k, "x", "y"), self.F(k2, "x", "y1"),
                                                        self.E(i, i2, "y", "y1")])))
        return Forall(("x",), implies(self.root("x"), conj([loops, conj(edges)])))

    def recursion_requirements(self, kp1: int, kp2: int, lp1: int, lp2: int):
        """(k, i, j, i', l, j') with ROT_H(k,i) = ((kp1,kp2), i') and
        ROT_H((lp2,lp1), j) = (l, j')."""
        D, D2 = self.D, self.D2
        h = self.h
        out = []
        for ip in range(D):
            k, i = h.rot(kp1 * D2 + kp2, ip)
            for j in range(D):
                l, jp = h.rot(lp2 * D2 + lp1, j)
                out.append((k, i, j, ip, l, jp))
        return out

    def recursion(self) -> Formula:
        D, D2 = self.D, self.D2
        clauses = []
        for kp1, kp2, lp1, lp2 in itertools.product(range(D2), repeat=4):
            path = Exists(("y",), conj([self.E(kp1, lp1, "x", "y"), self.E(kp2, lp2, "y", "z")]))
            reqs = [Exists(("x1", "z1"), conj([self.F(k, "x", "x1"), self.F(l, "z", "z1"),
                                               self.E(i * D + j, jp * D + ip, "x1", "z1")]))
                    for k, i, j, ip, l, jp in self.recursion_requirements(kp1, kp2, lp1, lp2)]
            clauses.append(implies(path, conj(reqs)))
        leaves = conj([Not(Exists(("y",), self.Fany("x", "y"))), Not(Exists(("y",), self.Fany("z", "y")))])
        guards = [leaves] if self.literal else [self.root("x"), self.root("z"), leaves]
        return Forall(("x", "z"), disj(guards + [conj(clauses)]))

    def part(self, name: str) -> Formula:
        if name == "tree":
            return self.tree()
        if name == "rotation":
            return self.rotation()
        if name == "base":
            return self.base()
        if name == "recursion":
            return self.recursion()
        if name == "all":
            return conj([self.tree(), self.rotation(), self.base(), self.recursion()])
        raise ValueError(f"unknown part {name!r}")

    def texts(self) -> dict[str, str]:
        return {
            "root": to_text(self.root("x")),
            "tree": to_text(self.tree()),
            "rotation": to_text(self.rotation()),
            "base": to_text(self.base()),
            "recursion": to_text(self.recursion()),
            "all": to_text(self.part("all")),
        }


# structural checkers

PARTS = ("tree", "rotation", "base", "recursion")


@dataclass
class CheckResult:
    ok: bool
    part: str
    witness: dict | None = None

    def __bool__(self):
        return self.ok

    def as_dict(self) -> dict:
        return {"ok": self.ok, "part": self.part, "witness": self.witness}


class _Index:
    def __init__(self, a: Structure):
        D = a.sig.param
        if D is None:
            raise StructureError("wrong signature: no tree-of-expanders parameter")
        if a.sig.names != [s for s, _ in _sig_names(D)]:
            raise StructureError("wrong signature")
        self.D, self.D2, self.D4 = D, D * D, D ** 4
        n = a.n
        self.n = n
        self.f_out = [dict() for _ in range(n)]  # x -> {k: set(y)}
        self.f_in = [set() for _ in range(n)]  # y -> {x}
        for k in range(self.D4):
            for x, y in a.rels.get(f_name(k, D), ()):
                self.f_out[x].setdefault(k, set()).add(y)
                self.f_in[y].add(x)
        self.r = a.rels.get("R", frozenset())
        self.r_touch = [0] * n
        for x, y in self.r:
            self.r_touch[x] += 1
            if y != x:
                self.r_touch[y] += 1
        self.l_self = [set() for _ in range(n)]
        self.l_other = [False] * n  # some L tuple (x,y)/(y,x) with y != x
        for k in range(self.D4):
            for x, y in a.rels.get(l_name(k, D), ()):
                if x == y:
                    self.l_self[x].add(k)
                else:
                    self.l_other[x] = True
                    self.l_other[y] = True
        self.e_out = [dict() for _ in range(n)]  # x -> {i: {j: set(y)}}
        self.e = {}
        for i in range(self.D2):
            for j in range(self.D2):
                ts = a.rels.get(e_name(i, j, D), frozenset())
                self.e[(i, j)] = ts
                for x, y in ts:
                    self.e_out[x].setdefault(i, {}).setdefault(j, set()).add(y)
        self.is_root = [not self.f_in[x] for x in range(n)]


def _sig_names(D):
    from .structures import signature_for
    return signature_for(D).symbols


def _check_tree(ix: _Index) -> CheckResult:
    roots = [x for x in range(ix.n) if ix.is_root[x]]
    if len(roots) != 1:
        return CheckResult(False, "tree", {"reason": "root count", "roots": roots[:10], "count": len(roots)})
    for x in range(ix.n):
        if ix.is_root[x]:
            if (x, x) not in ix.r:
                return CheckResult(False, "tree", {"element": x, "reason": "root without R self-loop"})
        else:
            if len(ix.f_in[x]) != 1:
                return CheckResult(False, "tree", {"element": x, "reason": "parent count", "parents": sorted(ix.f_in[x])})
            if ix.r_touch[x]:
                return CheckResult(False, "tree", {"element": x, "reason": "R tuple on non-root"})
    for x in range(ix.n):
        kids = ix.f_out[x]
        leaf_ok = not kids and len(ix.l_self[x]) == ix.D4 and not ix.l_other[x]
        if leaf_ok:
            continue
        inner_ok = not ix.l_self[x] and not ix.l_other[x] and len(kids) == ix.D4
        if inner_ok:
            owner: dict[int, int] = {}
            for k, ys in kids.items():
                if len(ys) != 1:
                    inner_ok = False
                    break
                (y,) = ys
                if y == x or y in owner:
                    inner_ok = False
                    break
                owner[y] = k
        if not inner_ok:
            return CheckResult(False, "tree", {"element": x, "reason": "neither a proper leaf nor a proper inner node"})
    return CheckResult(True, "tree")


def _check_rotation(ix: _Index, literal: bool = False) -> CheckResult:
    for (i, j), ts in ix.e.items():
        back = ix.e[(j, i)]
        for x, y in ts:
            if (y, x) not in back:
                return CheckResult(False, "rotation", {"element": x, "reason": "not self-inverse",
                                                       "tuple": [e_name(i, j, ix.D), x, y]})
    for x in range(ix.n):
        if ix.is_root[x] and not literal:
            continue
        for i in range(ix.D2):
            js = ix.e_out[x].get(i, {})
            if len(js) != 1 or len(next(iter(js.values()))) != 1:
                return CheckResult(False, "rotation", {"element": x, "port": i, "reason": "port is not a function",
                                                       "targets": {str(j): sorted(ys) for j, ys in js.items()}})
    return CheckResult(True, "rotation")


def _check_base(ix: _Index, g1: rg.RotationGraph) -> CheckResult:
    for x in range(ix.n):
        if not ix.is_root[x]:
            continue
        for (i, j), ts in ix.e.items():
            if (x, x) not in ts:
                return CheckResult(False, "base", {"element": x, "reason": f"missing {e_name(i, j, ix.D)} self-loop"})
        for i, js in ix.e_out[x].items():
            for j, ys in js.items():
                if ys - {x}:
                    return CheckResult(False, "base", {"element": x, "reason": "root E-tuple to another element"})
        for (i, j), ts in ix.e.items():
            for y, z in ts:
                if z == x and y != x:
                    return CheckResult(False, "base", {"element": x, "reason": "E-tuple into the root"})
        kids = ix.f_out[x]
        for k in range(ix.D4):
            for i in range(ix.D2):
                k2, i2 = g1.rot(k, i)
                ok = False
                for y in kids.get(k, ()):
                    targets = ix.e_out[y].get(i, {}).get(i2, ())
                    if any(y1 in targets for y1 in kids.get(k2, ())):
                        ok = True
                        break
                if not ok:
                    return CheckResult(False, "base", {"element": x, "reason": "missing first-level edge",
                                                       "child_port": [k, i], "expected": [k2, i2]})
    return CheckResult(True, "base")


def _check_recursion(ix: _Index, sentence: ZigzagSentence, literal: bool = False) -> CheckResult:
    D = ix.D
    reqs_cache: dict = {}
    for x in range(ix.n):
        if ix.is_root[x] and not literal:
            continue
        for kp1, row in ix.e_out[x].items():
            for lp1, ys in row.items():
                for y in ys:
                    for kp2, row2 in ix.e_out[y].items():
                        for lp2, zs in row2.items():
                            for z in zs:
                                if not literal and ix.is_root[z]:
                                    continue
                                if not ix.f_out[x] and not ix.f_out[z]:
                                    continue
                                key = (kp1, kp2, lp1, lp2)
                                if key not in reqs_cache:
                                    reqs_cache[key] = sentence.recursion_requirements(*key)
                                for k, i, j, ip, l, jp in reqs_cache[key]:
                                    ports = (i * D + j, jp * D + ip)
                                    found = False
                                    for x1 in ix.f_out[x].get(k, ()):
                                        t = ix.e_out[x1].get(ports[0], {}).get(ports[1], ())
                                        if any(z1 in t for z1 in ix.f_out[z].get(l, ())):
                                            found = True
                                            break
                                    if not found:
                                        return CheckResult(False, "recursion", {
                                            "element": x, "other": z, "via": y,
                                            "reason": "missing zig-zag child edge",
                                            "children": [k, l], "ports": list(ports)})
    return CheckResult(True, "recursion")


def check_zigzag(a: Structure, h: rg.RotationGraph, part: str = "all", literal: bool = False) -> CheckResult:
    """Direct checks of the four conjuncts; semantics match
    ``ZigzagSentence(D, h, literal).part(part)`` exactly."""
    ix = _Index(a)
    sentence = ZigzagSentence(ix.D, h, literal=literal)
    parts = PARTS if part == "all" else (part,)
    for p in parts:
        if p == "tree":
            r = _check_tree(ix)
        elif p == "rotation":
            r = _check_rotation(ix, literal)
        elif p == "base":
            r = _check_base(ix, rg.square(h))
        elif p == "recursion":
            r = _check_recursion(ix, sentence, literal)
        else:
            raise ValueError(f"unknown part {p!r}")
        if not r.ok:
            return r
    return CheckResult(True, part)
