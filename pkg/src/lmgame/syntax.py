"""Core syntax: first-order terms, formulas, and Church-style lambda-mu terms.

Terms are locally nameless with three independent binder namespaces:

* ``lam`` binds computation variables (de Bruijn indices in :class:`Var`),
* ``mu`` binds continuation names (indices in :class:`Named` references),
* ``Lam`` in terms and ``forall`` in formulas both bind first-order
  variables, sharing a single first-order index space that threads through
  type annotations.

Free variables are carried by name.  First-order variables are classed:
``A`` (arena labels), ``O`` (the reserved enumeration ``o0, o1, ...``
introduced by moves), ``P`` (everything else, free in terms and plays).

All reduction machinery works by opening a binder onto a fresh free name,
rewriting, and closing again; indices never need shifting that way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

### first-order terms


@dataclass(frozen=True)
class FoBound:
    """First-order variable bound by an enclosing ``forall`` or ``Lam``."""

    k: int


@dataclass(frozen=True)
class FoVar:
    """Free first-order variable; ``cls`` is one of ``"A"``, ``"O"``, ``"P"``."""

    cls: str
    name: str


@dataclass(frozen=True)
class Fn:
    """Function application; constants are zero-arity functions."""

    name: str
    args: tuple["FoTerm", ...] = ()


FoTerm = Union[FoBound, FoVar, Fn]


def ovar(i: int) -> FoVar:
    return FoVar("O", f"o{i}")


def fo_map(t: FoTerm, f: Callable[[FoTerm, int], FoTerm], d: int = 0) -> FoTerm:
    """Apply ``f`` to every variable leaf of ``t``; ``d`` counts binders crossed."""
    match t:
        case Fn(name, args):
            return Fn(name, tuple(fo_map(a, f, d) for a in args))
        case _:
            return f(t, d)


def fo_open(t: FoTerm, repl: FoTerm, d: int = 0) -> FoTerm:
    """Replace bound index ``d`` by ``repl`` (itself shifted never: locally closed)."""

    def go(leaf: FoTerm, depth: int) -> FoTerm:
        if isinstance(leaf, FoBound) and leaf.k == depth:
            return repl
        return leaf

    return fo_map(t, go, d)


def fo_close(t: FoTerm, cls: str, name: str, d: int = 0) -> FoTerm:
    def go(leaf: FoTerm, depth: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return FoBound(depth)
        return leaf

    return fo_map(t, go, d)


def fo_subst(t: FoTerm, cls: str, name: str, repl: FoTerm) -> FoTerm:
    def go(leaf: FoTerm, _d: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return repl
        return leaf

    return fo_map(t, go)


def fo_vars(t: FoTerm) -> set[tuple[str, str]]:
    match t:
        case FoVar(cls, name):
            return {(cls, name)}
        case Fn(_, args):
            out: set[tuple[str, str]] = set()
            for a in args:
                out |= fo_vars(a)
            return out
        case _:
            return set()


def fo_funcs(t: FoTerm) -> set[tuple[str, int]]:
    match t:
        case Fn(name, args):
            out = {(name, len(args))}
            for a in args:
                out |= fo_funcs(a)
            return out
        case _:
            return set()


def fo_locally_closed(t: FoTerm, d: int = 0) -> bool:
    match t:
        case FoBound(k):
            return k < d
        case Fn(_, args):
            return all(fo_locally_closed(a, d) for a in args)
        case _:
            return True


### formulas


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[FoTerm, ...] = ()


@dataclass(frozen=True)
class Imp:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    hint: str = field(compare=False)
    body: "Formula" = field(compare=True)


Formula = Union[Top, Bot, Atom, Imp, And, Forall]


def formula_map_fo(A: Formula, f: Callable[[FoTerm, int], FoTerm], d: int = 0) -> Formula:
    match A:
        case Atom(rel, args):
            return Atom(rel, tuple(fo_map(a, f, d) for a in args))
        case Imp(l, r):
            return Imp(formula_map_fo(l, f, d), formula_map_fo(r, f, d))
        case And(l, r):
            return And(formula_map_fo(l, f, d), formula_map_fo(r, f, d))
        case Forall(h, b):
            return Forall(h, formula_map_fo(b, f, d + 1))
        case _:
            return A


def formula_open(A: Formula, repl: FoTerm, d: int = 0) -> Formula:
    def go(leaf: FoTerm, depth: int) -> FoTerm:
        if isinstance(leaf, FoBound) and leaf.k == depth:
            return repl
        return leaf

    return formula_map_fo(A, go, d)


def formula_close(A: Formula, cls: str, name: str, d: int = 0) -> Formula:
    def go(leaf: FoTerm, depth: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return FoBound(depth)
        return leaf

    return formula_map_fo(A, go, d)


def formula_subst(A: Formula, cls: str, name: str, repl: FoTerm) -> Formula:
    def go(leaf: FoTerm, _d: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return repl
        return leaf

    return formula_map_fo(A, go)


def instantiate(A: Formula, t: FoTerm) -> Formula:
    """Body of ``forall x. B`` with ``t`` for ``x``."""
    assert isinstance(A, Forall)
    return formula_open(A.body, t)


def formula_fo_vars(A: Formula) -> set[tuple[str, str]]:
    out: set[tuple[str, str]] = set()

    def go(leaf: FoTerm, _d: int) -> FoTerm:
        out.update(fo_vars(leaf))
        return leaf

    formula_map_fo(A, go)
    return out


def formula_symbols(A: Formula) -> tuple[set[tuple[str, int]], set[tuple[str, int]]]:
    """Relation and function symbols with arities used in ``A``."""
    rels: set[tuple[str, int]] = set()
    fns: set[tuple[str, int]] = set()

    def walk(B: Formula) -> None:
        match B:
            case Atom(rel, args):
                rels.add((rel, len(args)))
                for a in args:
                    fns.update(fo_funcs(a))
            case Imp(l, r) | And(l, r):
                walk(l)
                walk(r)
            case Forall(_, b):
                walk(b)

    walk(A)
    return rels, fns


def formula_size(A: Formula) -> int:
    match A:
        case Imp(l, r) | And(l, r):
            return 1 + formula_size(l) + formula_size(r)
        case Forall(_, b):
            return 1 + formula_size(b)
        case _:
            return 1


def formula_locally_closed(A: Formula, d: int = 0) -> bool:
    match A:
        case Atom(_, args):
            return all(fo_locally_closed(a, d) for a in args)
        case Imp(l, r) | And(l, r):
            return formula_locally_closed(l, d) and formula_locally_closed(r, d)
        case Forall(_, b):
            return formula_locally_closed(b, d + 1)
        case _:
            return True


### lambda-mu terms


@dataclass(frozen=True)
class Var:
    """Computation variable: bound index (int) or free name (str)."""

    ref: Union[int, str]


@dataclass(frozen=True)
class Lam:
    hint: str = field(compare=False)
    ann: Formula | None = field(compare=True)
    body: "LmTerm" = field(compare=True)


@dataclass(frozen=True)
class App:
    fn: "LmTerm"
    arg: "LmTerm"


@dataclass(frozen=True)
class Pair:
    left: "LmTerm"
    right: "LmTerm"


@dataclass(frozen=True)
class Proj:
    i: int  # 1 or 2
    body: "LmTerm"


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class Named:
    """``[alpha] M``; ``ref`` is a bound mu index (int) or free name (str)."""

    ref: Union[int, str]
    body: "LmTerm"


@dataclass(frozen=True)
class Mu:
    hint: str = field(compare=False)
    ann: Formula | None = field(compare=True)
    body: "LmTerm" = field(compare=True)


@dataclass(frozen=True)
class FoLam:
    """``Lam x. M``: first-order abstraction."""

    hint: str = field(compare=False)
    body: "LmTerm" = field(compare=True)


@dataclass(frozen=True)
class Inst:
    """``M{t}``: first-order application."""

    body: "LmTerm"
    arg: FoTerm


LmTerm = Union[Var, Lam, App, Pair, Proj, Star, Named, Mu, FoLam, Inst]


def subterms(M: LmTerm) -> Iterator[LmTerm]:
    yield M
    match M:
        case Lam(_, _, b) | Mu(_, _, b) | FoLam(_, b) | Named(_, b) | Proj(_, b) | Inst(b, _):
            yield from subterms(b)
        case App(f, a):
            yield from subterms(f)
            yield from subterms(a)
        case Pair(l, r):
            yield from subterms(l)
            yield from subterms(r)


def term_size(M: LmTerm) -> int:
    return sum(1 for _ in subterms(M))


def _map(
    M: LmTerm,
    on_var: Callable[[Union[int, str], int], LmTerm] | None = None,
    on_mu: Callable[[Union[int, str], int], Union[int, str]] | None = None,
    on_fo: Callable[[FoTerm, int], FoTerm] | None = None,
    dl: int = 0,
    dm: int = 0,
    df: int = 0,
) -> LmTerm:
    """Structure-preserving map over variable occurrences of all three kinds.

    ``on_var`` may replace a Var occurrence by a whole term; ``on_mu`` renames
    the reference of ``Named``; ``on_fo`` rewrites first-order leaves both in
    ``Inst`` arguments and inside type annotations.  Depth arguments count
    binders of each namespace crossed so far.
    """

    def ann_map(A: Formula | None) -> Formula | None:
        if A is None or on_fo is None:
            return A
        return formula_map_fo(A, on_fo, df)

    match M:
        case Var(ref):
            return on_var(ref, dl) if on_var else M
        case Lam(h, ann, b):
            return Lam(h, ann_map(ann), _map(b, on_var, on_mu, on_fo, dl + 1, dm, df))
        case App(f, a):
            return App(
                _map(f, on_var, on_mu, on_fo, dl, dm, df),
                _map(a, on_var, on_mu, on_fo, dl, dm, df),
            )
        case Pair(l, r):
            return Pair(
                _map(l, on_var, on_mu, on_fo, dl, dm, df),
                _map(r, on_var, on_mu, on_fo, dl, dm, df),
            )
        case Proj(i, b):
            return Proj(i, _map(b, on_var, on_mu, on_fo, dl, dm, df))
        case Star():
            return M
        case Named(ref, b):
            ref2 = on_mu(ref, dm) if on_mu else ref
            return Named(ref2, _map(b, on_var, on_mu, on_fo, dl, dm, df))
        case Mu(h, ann, b):
            return Mu(h, ann_map(ann), _map(b, on_var, on_mu, on_fo, dl, dm + 1, df))
        case FoLam(h, b):
            return FoLam(h, _map(b, on_var, on_mu, on_fo, dl, dm, df + 1))
        case Inst(b, t):
            t2 = fo_map(t, on_fo, df) if on_fo else t
            return Inst(_map(b, on_var, on_mu, on_fo, dl, dm, df), t2)
    raise TypeError(M)


### opening and closing binders

# Opening replaces the outermost bound index with a replacement; terms being
# opened are always locally closed, so no index shifting is ever required.


def open_lam(M: LmTerm, repl: LmTerm) -> LmTerm:
    def go(ref: Union[int, str], d: int) -> LmTerm:
        if ref == d:
            return repl
        return Var(ref)

    return _map(M, on_var=go)


def close_lam(M: LmTerm, name: str) -> LmTerm:
    def go(ref: Union[int, str], d: int) -> LmTerm:
        if ref == name:
            return Var(d)
        return Var(ref)

    return _map(M, on_var=go)


def open_mu(M: LmTerm, name: str) -> LmTerm:
    def go(ref: Union[int, str], d: int) -> Union[int, str]:
        return name if ref == d else ref

    return _map(M, on_mu=go)


def close_mu(M: LmTerm, name: str) -> LmTerm:
    def go(ref: Union[int, str], d: int) -> Union[int, str]:
        return d if ref == name else ref

    return _map(M, on_mu=go)


def rename_mu(M: LmTerm, old: str, new: str) -> LmTerm:
    def go(ref: Union[int, str], _d: int) -> Union[int, str]:
        return new if ref == old else ref

    return _map(M, on_mu=go)


def open_fo(M: LmTerm, t: FoTerm) -> LmTerm:
    def go(leaf: FoTerm, d: int) -> FoTerm:
        if isinstance(leaf, FoBound) and leaf.k == d:
            return t
        return leaf

    return _map(M, on_fo=go)


def close_fo(M: LmTerm, cls: str, name: str) -> LmTerm:
    def go(leaf: FoTerm, d: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return FoBound(d)
        return leaf

    return _map(M, on_fo=go)


def subst_lam(M: LmTerm, name: str, N: LmTerm) -> LmTerm:
    """Capture-free substitution of ``N`` for the free variable ``name``."""

    def go(ref: Union[int, str], _d: int) -> LmTerm:
        return N if ref == name else Var(ref)

    return _map(M, on_var=go)


def subst_fo_term(M: LmTerm, cls: str, name: str, t: FoTerm) -> LmTerm:
    def go(leaf: FoTerm, _d: int) -> FoTerm:
        if isinstance(leaf, FoVar) and leaf.cls == cls and leaf.name == name:
            return t
        return leaf

    return _map(M, on_fo=go)


### free variables


def free_lam_vars(M: LmTerm) -> set[str]:
    out: set[str] = set()

    def go(ref: Union[int, str], _d: int) -> LmTerm:
        if isinstance(ref, str):
            out.add(ref)
        return Var(ref)

    _map(M, on_var=go)
    return out


def free_mu_vars(M: LmTerm) -> set[str]:
    out: set[str] = set()

    def go(ref: Union[int, str], _d: int) -> Union[int, str]:
        if isinstance(ref, str):
            out.add(ref)
        return ref

    _map(M, on_mu=go)
    return out


def free_fo_vars(M: LmTerm) -> set[tuple[str, str]]:
    out: set[tuple[str, str]] = set()

    def go(leaf: FoTerm, _d: int) -> FoTerm:
        if isinstance(leaf, FoVar):
            out.add((leaf.cls, leaf.name))
        return leaf

    _map(M, on_fo=go)
    return out


def is_closed(M: LmTerm) -> bool:
    """Closed as a program: no free lam or mu variables (free P-vars allowed)."""
    if free_lam_vars(M) or free_mu_vars(M):
        return False
    return all(cls != "O" for cls, _ in free_fo_vars(M))


def strip_annotations(M: LmTerm) -> LmTerm:
    match M:
        case Lam(h, _, b):
            return Lam(h, None, strip_annotations(b))
        case Mu(h, _, b):
            return Mu(h, None, strip_annotations(b))
        case App(f, a):
            return App(strip_annotations(f), strip_annotations(a))
        case Pair(l, r):
            return Pair(strip_annotations(l), strip_annotations(r))
        case Proj(i, b):
            return Proj(i, strip_annotations(b))
        case Named(ref, b):
            return Named(ref, strip_annotations(b))
        case FoLam(h, b):
            return FoLam(h, strip_annotations(b))
        case Inst(b, t):
            return Inst(strip_annotations(b), t)
        case _:
            return M


def alpha_eq(M: LmTerm, N: LmTerm, with_annotations: bool = True) -> bool:
    """Alpha-equivalence; structural equality thanks to the nameless encoding."""
    if with_annotations:
        return M == N
    return strip_annotations(M) == strip_annotations(N)


### signatures


@dataclass(frozen=True)
class Signature:
    """Function and relation symbols with arities; constants are 0-ary functions."""

    functions: tuple[tuple[str, int], ...] = ()
    relations: tuple[tuple[str, int], ...] = ()

    def fn_arity(self, name: str) -> int | None:
        for n, k in self.functions:
            if n == name:
                return k
        return None

    def rel_arity(self, name: str) -> int | None:
        for n, k in self.relations:
            if n == name:
                return k
        return None

    def constants(self) -> list[str]:
        return [n for n, k in self.functions if k == 0]

    @staticmethod
    def union(*sigs: "Signature") -> "Signature":
        fns: dict[str, int] = {}
        rels: dict[str, int] = {}
        for s in sigs:
            for n, k in s.functions:
                if fns.setdefault(n, k) != k:
                    raise ValueError(f"conflicting arity for function {n}")
            for n, k in s.relations:
                if rels.setdefault(n, k) != k:
                    raise ValueError(f"conflicting arity for relation {n}")
        return Signature(tuple(sorted(fns.items())), tuple(sorted(rels.items())))


def signature_of_formula(A: Formula) -> Signature:
    rels, fns = formula_symbols(A)
    return Signature(tuple(sorted(fns)), tuple(sorted(rels)))


### spec-level substitution API


def subst_fo(target, t: FoTerm, x: FoVar):
    """Capture-avoiding substitution of ``t`` for the free variable ``x``.

    Works uniformly on formulas, terms and first-order terms.
    """
    if isinstance(target, (Top, Bot, Atom, Imp, And, Forall)):
        return formula_subst(target, x.cls, x.name, t)
    if isinstance(target, (FoBound, FoVar, Fn)):
        return fo_subst(target, x.cls, x.name, t)
    return subst_fo_term(target, x.cls, x.name, t)


def subst_term(M: LmTerm, N: LmTerm, a: str) -> LmTerm:
    return subst_lam(M, a, N)


CtxItem = tuple  # ("app", LmTerm) | ("proj", int) | ("inst", FoTerm)


@dataclass(frozen=True)
class MuCtx:
    """Context for mu-reduction: ``[tail](.)`` surrounded by applications.

    ``items`` are applied left to right around the plugged term; ``tail`` is
    the receiving mu-name, or ``None`` for stack-induced contexts that drop
    the naming (empty-stack machine case).
    """

    items: tuple[CtxItem, ...] = ()
    tail: str | None = None

    def plug(self, L: LmTerm) -> LmTerm:
        out = L
        for kind, payload in self.items:
            if kind == "app":
                out = App(out, payload)
            elif kind == "proj":
                out = Proj(payload, out)
            elif kind == "inst":
                out = Inst(out, payload)
            else:
                raise ValueError(kind)
        if self.tail is not None:
            out = Named(self.tail, out)
        return out


def mu_subst(M: LmTerm, ctx: MuCtx, alpha: str) -> LmTerm:
    """Replace every sub-term ``[alpha]L`` of ``M`` by ``ctx.plug(L)``.

    ``alpha`` is a free mu-name; bound references are indices, so rebinding
    never captures.
    """
    match M:
        case Named(ref, b):
            b2 = mu_subst(b, ctx, alpha)
            if ref == alpha:
                return ctx.plug(b2)
            return Named(ref, b2)
        case Lam(h, ann, b):
            return Lam(h, ann, mu_subst(b, ctx, alpha))
        case Mu(h, ann, b):
            return Mu(h, ann, mu_subst(b, ctx, alpha))
        case FoLam(h, b):
            return FoLam(h, mu_subst(b, ctx, alpha))
        case App(f, a):
            return App(mu_subst(f, ctx, alpha), mu_subst(a, ctx, alpha))
        case Pair(l, r):
            return Pair(mu_subst(l, ctx, alpha), mu_subst(r, ctx, alpha))
        case Proj(i, b):
            return Proj(i, mu_subst(b, ctx, alpha))
        case Inst(b, t):
            return Inst(mu_subst(b, ctx, alpha), t)
        case _:
            return M


### fresh name supply


class NameSupply:
    """Deterministic fresh-name source, one counter per prefix."""

    def __init__(self) -> None:
        self.counters: dict[str, int] = {}

    def fresh(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0)
        self.counters[prefix] = n + 1
        return f"{prefix}{n}"


_global_supply = NameSupply()


def gensym(prefix: str = "_v") -> str:
    return _global_supply.fresh(prefix)
