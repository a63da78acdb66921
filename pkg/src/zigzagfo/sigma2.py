"""Decomposition of existential-universal sentences on bounded-degree
structures into small witness models plus universal companions, and the
two structure edits (isolate, plant) used to move between them.

Every set membership computed here (witness models, clause sets, companion
clauses) is certified by the brute-force evaluator in :mod:`folagic`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from . import smallstructs as ss
from .folagic import (FALSE, TRUE, And, Atom, Bottom, Eq, Exists, Forall, Formula,
                      Not, Or, Top, conj, disj, evaluate, free_vars, iota, parse,
                      prefix_blocks, to_text)
from .structures import Signature, Structure, StructureError, dumps as dump_structure

DNF_BUDGET = 4096


class NotSigma2(ValueError):
    pass


class DNFBudgetExceeded(RuntimeError):
    pass


# normal form

Literal = Formula  # Atom, Eq, or Not of either


@dataclass(frozen=True)
class Clause:
    """One DNF clause split by variable sort: x-only, y-only, mixed positive,
    mixed negative."""
    alpha: tuple[Literal, ...]
    beta: tuple[Literal, ...]
    pos: tuple[Literal, ...]
    neg: tuple[Literal, ...]

    def literals(self) -> tuple[Literal, ...]:
        return self.alpha + self.beta + self.pos + self.neg

    def formula(self) -> Formula:
        return conj(self.literals())

    def pos_only_equalities(self) -> bool:
        return all(isinstance(l, Eq) for l in self.pos)

    def tied_ys(self) -> set[str]:
        """Universal variables equated to an existential one in ``pos``."""
        out = set()
        for l in self.pos:
            if isinstance(l, Eq):
                out |= {l.left, l.right}
        return out


@dataclass(frozen=True)
class ClauseSplit:
    xs: tuple[str, ...]
    ys: tuple[str, ...]
    clauses: tuple[Clause, ...]

    @property
    def k(self) -> int:
        return len(self.xs)

    @property
    def ell(self) -> int:
        return len(self.ys)

    def matrix(self) -> Formula:
        return disj(c.formula() for c in self.clauses)

    def sentence(self) -> Formula:
        body = self.matrix()
        if self.ys:
            body = Forall(self.ys, body)
        if self.xs:
            body = Exists(self.xs, body)
        return body

    def universal_part(self) -> Formula:
        return Forall(self.ys, self.matrix()) if self.ys else self.matrix()


def _nnf(f: Formula, negate: bool = False) -> Formula:
    if isinstance(f, (Atom, Eq)):
        return Not(f) if negate else f
    if isinstance(f, Top):
        return FALSE if negate else TRUE
    if isinstance(f, Bottom):
        return TRUE if negate else FALSE
    if isinstance(f, Not):
        return _nnf(f.sub, not negate)
    if isinstance(f, And):
        parts = [_nnf(p, negate) for p in f.parts]
        return disj(parts) if negate else conj(parts)
    if isinstance(f, Or):
        parts = [_nnf(p, negate) for p in f.parts]
        return conj(parts) if negate else disj(parts)
    raise NotSigma2("matrix must be quantifier-free")


def _dnf(f: Formula, budget: int) -> list[frozenset]:
    if isinstance(f, Top):
        return [frozenset()]
    if isinstance(f, Bottom):
        return []
    if isinstance(f, Or):
        out: list[frozenset] = []
        for p in f.parts:
            out.extend(_dnf(p, budget))
            if len(out) > budget:
                raise DNFBudgetExceeded(f"more than {budget} clauses")
        return out
    if isinstance(f, And):
        acc = [frozenset()]
        for p in f.parts:
            sub = _dnf(p, budget)
            acc = [a | b for a in acc for b in sub]
            if len(acc) > budget:
                raise DNFBudgetExceeded(f"more than {budget} clauses")
        return acc
    return [frozenset([f])]


def _atom_of(l: Literal):
    return l.sub if isinstance(l, Not) else l


def _canon_eq(e: Eq, xs: set[str]) -> Eq:
    a, b = e.left, e.right
    if (a in xs) == (b in xs):
        return Eq(*sorted((a, b)))
    return Eq(a, b) if a in xs else Eq(b, a)


def _rename(l: Literal, m: dict[str, str]) -> Literal:
    if isinstance(l, Not):
        return Not(_rename(l.sub, m))
    if isinstance(l, Atom):
        return Atom(l.rel, tuple(m.get(v, v) for v in l.args))
    return Eq(m.get(l.left, l.left), m.get(l.right, l.right))


def _simplify(lits: set, xs: set[str]):
    """Trivial equalities out, contradictions to None."""
    out = set()
    for l in lits:
        at = _atom_of(l)
        if isinstance(at, Eq):
            at = _canon_eq(at, xs)
            if at.left == at.right:
                if isinstance(l, Not):
                    return None
                continue
            l = Not(at) if isinstance(l, Not) else at
        out.add(l)
    for l in out:
        if isinstance(l, Not) and l.sub in out:
            return None
    return out


def _substitute_ties(lits: set, xs: set[str], ys: set[str]):
    """Replace each y equated to an x by that x everywhere except in the
    equality itself, which is kept."""
    kept: list[Eq] = []
    while True:
        lits = _simplify(lits, xs)
        if lits is None:
            return None, []
        tie = next((l for l in sorted(lits, key=to_text)
                    if isinstance(l, Eq) and (l.left in xs) != (l.right in xs)), None)
        if tie is None:
            return lits, kept
        x, y = tie.left, tie.right  # canonical: x first
        lits = {_rename(l, {y: x}) for l in lits if l != tie}
        kept.append(tie)


def _sort_clause(lits, xs: set[str], ys: set[str]) -> Clause:
    alpha, beta, pos, negs = [], [], [], []
    for l in sorted(lits, key=to_text):
        vs = free_vars(l)
        if vs <= xs:
            alpha.append(l)
        elif vs <= ys:
            beta.append(l)
        elif isinstance(l, Not):
            negs.append(l)
        else:
            pos.append(l)
    return Clause(tuple(alpha), tuple(beta), tuple(pos), tuple(negs))


def normalize(f: Formula | str, sig: Signature | None = None, budget: int = DNF_BUDGET) -> ClauseSplit:
    """Prenex existential-universal sentence to clause form with every
    x = y tie substituted through its clause."""
    if isinstance(f, str):
        f = parse(f, sig)
    if free_vars(f):
        raise NotSigma2(f"free variables {sorted(free_vars(f))}")
    xs: list[str] = []
    ys: list[str] = []
    g = f
    while isinstance(g, Exists):
        xs.extend(g.vars)
        g = g.body
    while isinstance(g, Forall):
        ys.extend(g.vars)
        g = g.body
    blocks, _ = prefix_blocks(g)
    if blocks:
        raise NotSigma2("prefix is not of the form exists* forall*")
    xset, yset = set(xs), set(ys)
    clauses: list[Clause] = []
    seen = set()
    for lits in _dnf(_nnf(g), budget):
        lits, ties = _substitute_ties(set(lits), xset, yset)
        if lits is None:
            continue
        c = _sort_clause(set(lits) | set(ties), xset, yset)
        if c not in seen:
            seen.add(c)
            clauses.append(c)
    return ClauseSplit(tuple(xs), tuple(ys), tuple(clauses))


# labelled small structures

@dataclass(frozen=True)
class Labelled:
    """A structure with a surjective tuple onto it; elements are numbered by
    first appearance in ``pattern``."""
    struct: Structure
    pattern: tuple[int, ...]

    def iota(self, vars: Sequence[str]) -> Formula:
        """Isomorphism type of the tuple: the type of the distinct positions
        plus equalities for the repeated ones."""
        reps: dict[int, str] = {}
        eqs = []
        for v, e in zip(vars, self.pattern):
            if e in reps:
                eqs.append(Eq(reps[e], v))
            else:
                reps[e] = v
        return conj([iota(self.struct, [reps[e] for e in range(self.struct.n)])] + eqs)

    def assignment(self, vars: Sequence[str]) -> dict[str, int]:
        return dict(zip(vars, self.pattern))

    def as_dict(self) -> dict:
        return {"structure": dump_structure(self.struct), "pattern": list(self.pattern)}


def labelled_family(sig: Signature, length: int, d: int, pred) -> list[Labelled]:
    """All labelled structures of max degree ``d`` with ``length``-tuple
    patterns satisfying ``pred(struct, pattern)``."""
    out = []
    for pat in ss.growth_patterns(length):
        m = max(pat) + 1
        for s in ss.labelled_structures(m, sig, d):
            if pred(s, pat):
                out.append(Labelled(s, pat))
    return out


# decomposition

@dataclass
class Member:
    """One witness model with its clause sets and companion."""
    witness: Labelled
    clauses: list[int]                        # clause indices with alpha true at the witness
    pairs: list[tuple[int, int]] = field(default_factory=list)        # (clause, index into beta family)
    free_pairs: list[tuple[int, int]] = field(default_factory=list)   # pairs with empty pos
    companion: Formula = TRUE

    def as_dict(self) -> dict:
        return {
            "witness": self.witness.as_dict(),
            "clauses": self.clauses,
            "pairs": [list(p) for p in self.pairs],
            "free_pairs": [list(p) for p in self.free_pairs],
            "companion": to_text(self.companion),
        }


@dataclass
class Decomposition:
    sentence: Formula
    split: ClauseSplit
    sig: Signature
    d: int
    family: str
    members: list[Member]
    beta_families: dict[int, list[Labelled]]
    minimal: list[Structure]

    @property
    def k(self) -> int:
        return self.split.k

    @property
    def ell(self) -> int:
        return self.split.ell

    def member_formula(self, m: Member) -> Formula:
        """exists x forall y [type(x) and OR over clauses of beta, pos, neg]."""
        cl = self.split.clauses
        body = disj(conj(cl[j].beta + cl[j].pos + cl[j].neg) for j in m.clauses)
        return Exists(self.split.xs, Forall(self.split.ys, conj([m.witness.iota(self.split.xs), body])))

    def member_type_formula(self, m: Member) -> Formula:
        """Same as :meth:`member_formula` with each beta replaced by the
        disjunction of the isomorphism types that satisfy it."""
        cl = self.split.clauses
        parts = []
        for j in m.clauses:
            for h in self.beta_families[j]:
                parts.append(conj([h.iota(self.split.ys)] + list(cl[j].pos + cl[j].neg)))
        return Exists(self.split.xs, Forall(self.split.ys, conj([m.witness.iota(self.split.xs), disj(parts)])))

    def formula(self) -> Formula:
        return disj(self.member_formula(m) for m in self.members)

    def type_formula(self) -> Formula:
        return disj(self.member_type_formula(m) for m in self.members)

    def as_dict(self) -> dict:
        return {
            "sentence": to_text(self.sentence),
            "k": self.k,
            "ell": self.ell,
            "d": self.d,
            "family": self.family,
            "clauses": [
                {part: [to_text(l) for l in getattr(c, part)] for part in ("alpha", "beta", "pos", "neg")}
                for c in self.split.clauses
            ],
            "minimal_models": [dump_structure(s) for s in self.minimal],
            "beta_families": {str(j): [h.as_dict() for h in hs] for j, hs in self.beta_families.items()},
            "members": [m.as_dict() for m in self.members],
        }


def _sig_of(f: Formula, sig: Signature | None) -> Signature:
    if sig is not None:
        return sig
    names = set()

    def walk(g):
        if isinstance(g, Atom):
            names.add((g.rel, len(g.args)))
        elif isinstance(g, Not):
            walk(g.sub)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p)
        elif isinstance(g, (Exists, Forall)):
            walk(g.body)

    walk(f)
    if not names:
        names = {("E", 2)}
    return Signature(sorted(names))


def minimal_models(f: Formula, sig: Signature, d: int, max_size: int) -> list[Structure]:
    """Models of ``f`` with at most ``max_size`` elements and degree <= d that
    have no proper induced substructure satisfying ``f``, one per
    isomorphism class."""
    found: list[Structure] = []
    keys: set = set()
    for n in range(1, max_size + 1):
        for s in ss.iso_classes(n, sig, d):
            if not evaluate(s, f):
                continue
            # the minimal members found so far cover every smaller model
            if any(ss.canonical_key(_induced(s, sub)) in keys
                   for r in range(1, n) for sub in itertools.combinations(range(n), r)):
                continue
            found.append(s)
            keys.add(ss.canonical_key(s))
    return found


def _induced(a: Structure, elems) -> Structure:
    from .structures import induced_substructure
    return induced_substructure(a, list(elems))


def _witness_members(split: ClauseSplit, sig: Signature, d: int) -> list[Labelled]:
    univ = split.universal_part()
    return labelled_family(sig, split.k, d,
                           lambda s, pat: evaluate(s, univ, dict(zip(split.xs, pat))))


def _minimal_members(split: ClauseSplit, sig: Signature, d: int, mins: list[Structure]) -> list[Labelled]:
    out = []
    for s in mins:
        for pat in ss.surjections(split.k, s.n):
            # renumber by first appearance so the pattern is a growth string
            order = list(dict.fromkeys(pat))
            perm = [0] * s.n
            for new, old in enumerate(order):
                perm[old] = new
            out.append(Labelled(ss.relabel(s, perm), tuple(perm[p] for p in pat)))
    return out


def _clause_set(split: ClauseSplit, w: Labelled, family: str) -> list[int]:
    if family == "witness":
        asgs = [w.assignment(split.xs)]
    else:
        # literal reading: alpha satisfiable by some tuple over the model
        asgs = [dict(zip(split.xs, t)) for t in itertools.product(range(w.struct.n), repeat=split.k)]
    return [j for j, c in enumerate(split.clauses)
            if any(evaluate(w.struct, conj(c.alpha), a) for a in asgs)]


def decompose(f: Formula | str, d: int, sig: Signature | None = None, family: str = "witness",
              budget: int = DNF_BUDGET) -> Decomposition:
    """Split ``f`` over degree-``d`` structures into witness members.

    ``family="witness"`` uses every labelled witness (M, m) with M |= forall y chi(m, y),
    which is sound and complete. ``family="minimal"`` uses only the minimal
    models, which can miss models (see tests for a counterexample).
    """
    if family not in ("witness", "minimal"):
        raise ValueError("family must be 'witness' or 'minimal'")
    if isinstance(f, str):
        f = parse(f, sig)
    split = normalize(f, budget=budget)
    sig = _sig_of(f, sig)
    if any(a != 2 for _, a in sig.symbols):
        raise StructureError("decomposition supports binary signatures only")
    if split.k == 0 or split.ell == 0:
        raise NotSigma2("decompose needs a non-empty existential and universal block")
    mins = minimal_models(f, sig, d, split.k)
    if family == "witness":
        witnesses = _witness_members(split, sig, d)
    else:
        witnesses = _minimal_members(split, sig, d, mins)

    betas = {
        j: labelled_family(sig, split.ell, d,
                           lambda s, pat, c=c: evaluate(s, conj(c.beta), dict(zip(split.ys, pat))))
        for j, c in enumerate(split.clauses)
    }
    members = [Member(w, _clause_set(split, w, family)) for w in witnesses]
    for m in members:
        _fill_pairs(f, split, m, betas)
    return Decomposition(f, split, sig, d, family, members, betas, mins)


def _fill_pairs(f: Formula, split: ClauseSplit, m: Member, betas: dict[int, list[Labelled]]) -> None:
    for j in m.clauses:
        c = split.clauses[j]
        if not c.pos_only_equalities():
            continue
        tied = c.tied_ys()
        for hi, h in enumerate(betas[j]):
            keep = sorted({h.pattern[i] for i, y in enumerate(split.ys) if y not in tied})
            glued = _glue(m.witness.struct, _induced(h.struct, keep))
            if evaluate(glued, f):
                m.pairs.append((j, hi))
                if not c.pos:
                    m.free_pairs.append((j, hi))
    parts = [betas[j][hi].iota(split.ys) for j, hi in m.free_pairs]
    m.companion = Forall(split.ys, disj(parts))


def _glue(a: Structure, b: Structure) -> Structure:
    from .structures import disjoint_union
    return disjoint_union([a, b])


def universal_companion(dec: Decomposition, member: int = 0) -> Formula:
    return dec.members[member].companion


# edits

def isolate(a: Structure, b: int) -> Structure:
    """Delete every tuple containing ``b``."""
    if not 0 <= b < a.n:
        raise StructureError(f"element {b} out of range")
    rels = {s: [t for t in ts if b not in t] for s, ts in a.rels.items()}
    return Structure(a.sig, a.n, rels, check=False)


def isolate_all(a: Structure, elems) -> Structure:
    es = set(elems)
    rels = {s: [t for t in ts if not es.intersection(t)] for s, ts in a.rels.items()}
    return Structure(a.sig, a.n, rels, check=False)


def plant(a: Structure, m: Structure, at: Sequence[int] | None = None) -> Structure:
    """Isolate ``at`` (default the first |M| elements) and copy M onto them."""
    at = list(range(m.n)) if at is None else list(at)
    if len(at) != m.n or len(set(at)) != m.n:
        raise StructureError("placement must list |M| distinct elements")
    if m.n > a.n:
        raise StructureError("model larger than the structure")
    out = isolate_all(a, at)
    rels = {s: set(ts) for s, ts in out.rels.items()}
    for s, ts in m.rels.items():
        rels.setdefault(s, set()).update(tuple(at[x] for x in t) for t in ts)
    return Structure(a.sig, a.n, rels, check=False)


def modification_count(a: Structure, b: Structure) -> int:
    """Tuple edits between two structures on the same labelled universe."""
    names = set(a.rels) | set(b.rels)
    return sum(len(a.tuples(s) ^ b.tuples(s)) for s in names)


def plant_budget(m: Structure, ell: int, d: int, ar: int) -> int:
    return 2 * ell * d * ar + m.tuple_count


def isolation_threshold(d: int, ar: int, t: int) -> int:
    """Structures larger than this keep a universal t-variable sentence
    under single-element isolation (loop-free case)."""
    return d * ar * t


def modification_budget(k: int, ell: int, d: int, ar: int, m_tuples: int) -> int:
    """Looser of the two edit bounds: k*ell^2*d^2*ar and 2*ell*d*ar + |M|."""
    return max(k * ell * ell * d * d * ar, 2 * ell * d * ar + m_tuples)


def n_epsilon(k: int, ell: int, d: int, ar: int, eps: float) -> float:
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    return k * ell * ell * d * ar / eps


# interaction bookkeeping

def bad_tuples(dec: Decomposition, a: Structure, m: Member, xbar: Sequence[int]) -> list[tuple[int, ...]]:
    """ell-tuples not covered by the member's glued clause pairs."""
    split = dec.split
    x_asg = dict(zip(split.xs, xbar))
    covers = [conj([dec.beta_families[j][hi].iota(split.ys)] + list(split.clauses[j].pos + split.clauses[j].neg))
              for j, hi in m.pairs]
    f = disj(covers)
    out = []
    for ybar in itertools.product(range(a.n), repeat=split.ell):
        asg = dict(x_asg)
        asg.update(zip(split.ys, ybar))
        if not evaluate(a, f, asg):
            out.append(ybar)
    return out


def to_companion_model(dec: Decomposition, a: Structure, m: Member, xbar: Sequence[int]) -> tuple[Structure, int]:
    """Isolate the witness tuple and every element of a bad tuple; returns
    the edited structure and the number of tuples removed."""
    elems = {e for t in bad_tuples(dec, a, m, xbar) for e in t} | set(xbar)
    out = isolate_all(a, elems)
    return out, modification_count(a, out)


def report(dec: Decomposition, eps: float | None = None) -> dict:
    out = dec.as_dict()
    ar = max((a for _, a in dec.sig.symbols), default=2)
    if eps is not None:
        out["n_epsilon"] = n_epsilon(dec.k, dec.ell, dec.d, ar, eps)
    out["isolation_threshold"] = isolation_threshold(dec.d, ar, dec.ell)
    return out
