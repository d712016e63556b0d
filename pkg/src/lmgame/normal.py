"""Canonical normal forms for lambda-mu terms, the syntactic route.

The pipeline: coerce the term along the canonicalization trace of its type
(every formula rewrite step is realized by an isomorphism witness, lifted
through the surrounding context), split into conjunct components, reduce to
beta-mu-rho normal form, eta/theta-expand into pre-canonical shape, sink the
remaining non-atomic mu-binders with nu-steps, and erase the mu and naming
constructs sitting at type bot.

The expansion and stripping phases are driven entirely by the goal formula,
rebuilding exact binder annotations as they go; input annotations are only
needed to typecheck the input.  Output terms are bare (annotations erased),
so they compare structurally with the terms read back from strategies.

Bare namings and mu-binders are packaged into ``mu al [be] M`` units around
a single reserved bottom-typed name before reduction, which keeps every
naming directly under a mu throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canon import RULES, canonicalize, conjuncts, is_canonical
from .syntax import (
    And,
    App,
    Atom,
    Bot,
    Fn,
    FoBound,
    FoLam,
    FoTerm,
    FoVar,
    Forall,
    Formula,
    Imp,
    Inst,
    Lam,
    LmTerm,
    Mu,
    MuCtx,
    Named,
    Pair,
    Proj,
    Star,
    Top,
    Var,
    close_fo,
    close_lam,
    close_mu,
    fo_funcs,
    formula_close,
    formula_map_fo,
    formula_open,
    formula_size,
    free_fo_vars,
    free_mu_vars,
    gensym,
    is_closed,
    mu_subst,
    open_fo,
    open_lam,
    open_mu,
    strip_annotations,
    subterms,
)
from .typing import typecheck

# reserved bottom-typed mu-name threaded through the simple-form packaging
XI = "_xi"

DEFAULT_FUEL = 20000

STEP_KINDS = frozenset({"beta", "mu", "rho", "eta-expand", "theta-expand", "nu"})

CanonicalTerm = LmTerm


@dataclass(frozen=True)
class NormStep:
    kind: str
    detail: str = ""


### one-step rewriting, outermost-leftmost, opening binders on the way down


def _descend(M: LmTerm, rule):
    out = rule(M)
    if out is not None:
        return out
    match M:
        case Lam(h, ann, b):
            g = gensym("_na")
            r = _descend(open_lam(b, Var(g)), rule)
            return None if r is None else (r[0], Lam(h, ann, close_lam(r[1], g)))
        case Mu(h, ann, b):
            g = gensym("_nm")
            r = _descend(open_mu(b, g), rule)
            return None if r is None else (r[0], Mu(h, ann, close_mu(r[1], g)))
        case FoLam(h, b):
            g = gensym("_nx")
            r = _descend(open_fo(b, FoVar("P", g)), rule)
            return None if r is None else (r[0], FoLam(h, close_fo(r[1], "P", g)))
        case Named(ref, b):
            r = _descend(b, rule)
            return None if r is None else (r[0], Named(ref, r[1]))
        case App(f, a):
            r = _descend(f, rule)
            if r is not None:
                return r[0], App(r[1], a)
            r = _descend(a, rule)
            return None if r is None else (r[0], App(f, r[1]))
        case Pair(l, rt):
            r = _descend(l, rule)
            if r is not None:
                return r[0], Pair(r[1], rt)
            r = _descend(rt, rule)
            return None if r is None else (r[0], Pair(l, r[1]))
        case Proj(i, b):
            r = _descend(b, rule)
            return None if r is None else (r[0], Proj(i, r[1]))
        case Inst(b, t):
            r = _descend(b, rule)
            return None if r is None else (r[0], Inst(r[1], t))
    return None


def _mu_ann_after(ann: Formula | None, kind: str, payload) -> Formula | None:
    match ann, kind:
        case Imp(_, r), "app":
            return r
        case And(l, r), "proj":
            return l if payload == 1 else r
        case Forall(_, b), "inst":
            return formula_open(b, payload)
    return None


def _mu_push(h: str, ann: Formula | None, b: LmTerm, kind: str, payload) -> LmTerm:
    al = gensym("_nm")
    body = mu_subst(open_mu(b, al), MuCtx(((kind, payload),), al), al)
    return Mu(h, _mu_ann_after(ann, kind, payload), close_mu(body, al))


def _bmr_rule(M: LmTerm):
    match M:
        case App(Lam(_, _, b), N):
            return "beta", open_lam(b, N)
        case Proj(i, Pair(l, r)):
            return "beta", (l if i == 1 else r)
        case Inst(FoLam(_, b), t):
            return "beta", open_fo(b, t)
        case App(Mu(h, ann, b), N):
            return "mu", _mu_push(h, ann, b, "app", N)
        case Proj(i, Mu(h, ann, b)):
            return "mu", _mu_push(h, ann, b, "proj", i)
        case Inst(Mu(h, ann, b), t):
            return "mu", _mu_push(h, ann, b, "inst", t)
        case Named(ref, Mu(_, _, b)) if isinstance(ref, str):
            return "rho", open_mu(b, ref)
    return None


def bmr_normalize(
    M: LmTerm, fuel: int = DEFAULT_FUEL, trace: list[NormStep] | None = None
) -> LmTerm:
    """Beta-mu-rho normal form, by leftmost-outermost one-step reduction."""
    for _ in range(fuel):
        hit = _descend(M, _bmr_rule)
        if hit is None:
            return M
        kind, M = hit
        if trace is not None:
            trace.append(NormStep(kind))
    raise RuntimeError("bmr_normalize: fuel exhausted (raise the bound, or the input loops)")


### simple form: every naming packaged directly under a mu


def make_simple(M: LmTerm) -> LmTerm:
    """Wrap bare namings and bare mu-bodies into mu[..] units.

    A naming without an enclosing mu gets a dummy binder ``mu xi``; a mu
    whose body is not a naming gets ``[xi]`` pointing at the reserved free
    bottom-typed name.  Pairs and projections are carried through untouched
    (the reductions remove them at product-free component types).
    """
    match M:
        case Mu(h, ann, b):
            al = gensym("_ms")
            inner = open_mu(b, al)
            if isinstance(inner, Named):
                out = Named(inner.ref, make_simple(inner.body))
            else:
                out = Named(XI, make_simple(inner))
            return Mu(h, ann, close_mu(out, al))
        case Named(ref, b):
            return Mu("_xi", Bot(), Named(ref, make_simple(b)))
        case Lam(h, ann, b):
            return Lam(h, ann, make_simple(b))
        case FoLam(h, b):
            return FoLam(h, make_simple(b))
        case App(f, a):
            return App(make_simple(f), make_simple(a))
        case Pair(l, r):
            return Pair(make_simple(l), make_simple(r))
        case Proj(i, b):
            return Proj(i, make_simple(b))
        case Inst(b, t):
            return Inst(make_simple(b), t)
        case _:
            return M


### eta/theta-expansion into pre-canonical shape, goal-directed


def _open_prefix(B: Formula, insts: list[FoTerm]) -> tuple[list[Formula], Formula]:
    """Premises and final atom of an arrow-canonical B instantiated by insts."""
    k = 0
    while isinstance(B, Forall):
        if k >= len(insts):
            raise ValueError("spine is missing first-order instantiations")
        B = formula_open(B.body, insts[k])
        k += 1
    if k != len(insts):
        raise ValueError("spine has too many first-order instantiations")
    prems: list[Formula] = []
    while isinstance(B, Imp):
        prems.append(B.left)
        B = B.right
    return prems, B


def _spine(M: LmTerm) -> tuple[LmTerm, list[FoTerm], list[LmTerm]]:
    args: list[LmTerm] = []
    while isinstance(M, App):
        args.append(M.arg)
        M = M.fn
    args.reverse()
    insts: list[FoTerm] = []
    while isinstance(M, Inst):
        insts.append(M.arg)
        M = M.body
    insts.reverse()
    return M, insts, args


def _pc(M, Q, gamma, delta, named, trace):
    match M:
        case Mu(h, _, body):
            al = gensym("_pm")
            inner = open_mu(body, al)
            if not isinstance(inner, Named):
                raise ValueError("mu-binder without a naming under it")
            beta = inner.ref
            delta[al] = Q
            if beta not in delta:
                raise ValueError(f"naming targets an unknown mu-variable {beta!r}")
            out = _pc(inner.body, delta[beta], gamma, delta, True, trace)
            del delta[al]
            return Mu(h, Q, close_mu(Named(beta, out), al))
        case Lam(h, _, b) if isinstance(Q, Imp):
            a = gensym("_pa")
            gamma[a] = Q.left
            out = _pc(open_lam(b, Var(a)), Q.right, gamma, delta, False, trace)
            del gamma[a]
            return Lam(h, Q.left, close_lam(out, a))
        case FoLam(h, b) if isinstance(Q, Forall):
            y = gensym("_py")
            out = _pc(
                open_fo(b, FoVar("P", y)),
                formula_open(Q.body, FoVar("P", y)),
                gamma,
                delta,
                False,
                trace,
            )
            return FoLam(h, close_fo(out, "P", y))
        case Lam(h, _, _):
            raise ValueError(f"lambda {h} against a non-arrow goal")
        case FoLam(h, _):
            raise ValueError(f"Lam {h} against a non-forall goal")
        case Named(_, _):
            raise ValueError("naming outside a mu unit")
        case Pair(_, _) | Proj(_, _) | Star():
            raise ValueError("product construct at a product-free component type")

    # a spine against the remaining goal: expand or wrap
    match Q:
        case Forall(hint, body):
            y = gensym("_py")
            if trace is not None:
                trace.append(NormStep("eta-expand", hint))
            out = _pc(
                Inst(M, FoVar("P", y)),
                formula_open(body, FoVar("P", y)),
                gamma,
                delta,
                named,
                trace,
            )
            return FoLam(hint, close_fo(out, "P", y))
        case Imp(dom, cod):
            a = gensym("_pa")
            gamma[a] = dom
            if trace is not None:
                trace.append(NormStep("eta-expand"))
            out = _pc(App(M, Var(a)), cod, gamma, delta, named, trace)
            del gamma[a]
            return Lam("a", dom, close_lam(out, a))
        case Atom(_, _) | Bot():
            head, insts, args = _spine(M)
            if not (isinstance(head, Var) and isinstance(head.ref, str)):
                raise ValueError("spine head is not a variable (input was not normal)")
            if head.ref not in gamma:
                raise ValueError(f"unbound spine head {head.ref!r}")
            prems, final = _open_prefix(gamma[head.ref], insts)
            if len(args) != len(prems):
                raise ValueError("spine arity disagrees with the head type")
            if final != Q:
                raise ValueError("final atom of the spine disagrees with the goal")
            out: LmTerm = Var(head.ref)
            for t in insts:
                out = Inst(out, t)
            for arg, P in zip(args, prems):
                out = App(out, _pc(arg, P, gamma, delta, False, trace))
            if named:
                return out
            if trace is not None:
                trace.append(NormStep("theta-expand"))
            z = gensym("_pm")
            return Mu("m", Q, close_mu(Named(z, out), z))
    raise ValueError(f"no expansion against goal {type(Q).__name__}")


### nu: sink mu-binders of non-atomic type under a fresh binder


def _is_atomic(A: Formula | None) -> bool:
    return isinstance(A, (Atom, Bot))


def _strip_named(M: LmTerm, al: str, want, opener) -> LmTerm:
    """Strip the binder ``want`` from under every naming ``[al]``.

    Crossed binders are opened and re-closed so that removing the stripped
    binder never shifts an index.
    """
    go = lambda N: _strip_named(N, al, want, opener)
    match M:
        case Named(ref, b):
            b2 = go(b)
            if ref != al:
                return Named(ref, b2)
            if not isinstance(b2, want):
                raise ValueError("nu-step: a named subterm does not start with the binder")
            return Named(al, opener(b2))
        case Lam(h, ann, b):
            g = gensym("_sn")
            return Lam(h, ann, close_lam(go(open_lam(b, Var(g))), g))
        case Mu(h, ann, b):
            g = gensym("_sn")
            return Mu(h, ann, close_mu(go(open_mu(b, g)), g))
        case FoLam(h, b):
            g = gensym("_sn")
            return FoLam(h, close_fo(go(open_fo(b, FoVar("P", g))), "P", g))
        case App(f, a):
            return App(go(f), go(a))
        case Pair(l, r):
            return Pair(go(l), go(r))
        case Proj(i, b):
            return Proj(i, go(b))
        case Inst(b, t):
            return Inst(go(b), t)
        case _:
            return M


def _nu_rule(M: LmTerm):
    match M:
        case Mu(h, Imp(dom, cod), b):
            al = gensym("_nm")
            v = gensym("_va")
            body = _strip_named(open_mu(b, al), al, Lam, lambda L: open_lam(L.body, Var(v)))
            return "nu", Lam("a", dom, close_lam(Mu(h, cod, close_mu(body, al)), v))
        case Mu(h, Forall(hint, cod), b):
            al = gensym("_nm")
            y = gensym("_vy")
            body = _strip_named(
                open_mu(b, al), al, FoLam, lambda L: open_fo(L.body, FoVar("P", y))
            )
            inner = Mu(h, formula_open(cod, FoVar("P", y)), close_mu(body, al))
            return "nu", FoLam(hint, close_fo(inner, "P", y))
        case Mu(_, And(_, _) | Top(), _):
            raise ValueError("mu-binder at a product type inside a component")
    return None


def _mu_measure(M: LmTerm) -> int:
    return sum(formula_size(s.ann) for s in subterms(M) if isinstance(s, Mu) and s.ann)


def _nu_phase(M: LmTerm, fuel: int, trace: list[NormStep] | None) -> LmTerm:
    while True:
        before = _mu_measure(M)
        hit = _descend(M, _nu_rule)
        if hit is None:
            return M
        if trace is not None:
            trace.append(NormStep("nu"))
        M = bmr_normalize(hit[1], fuel, trace)
        assert _mu_measure(M) < before, "nu-step did not shrink the mu-type measure"


### erase mu and naming at type bot


def _strip_bottom(M: LmTerm, bottoms: set[str]) -> LmTerm:
    match M:
        case Mu(h, ann, b):
            al = gensym("_sb")
            inner = open_mu(b, al)
            if ann == Bot():
                bottoms.add(al)
                out = _strip_bottom(inner, bottoms)
                bottoms.discard(al)
                if al in free_mu_vars(out):
                    raise AssertionError("bottom-typed mu-binder still referenced")
                return out
            return Mu(h, ann, close_mu(_strip_bottom(inner, bottoms), al))
        case Named(ref, b):
            out = _strip_bottom(b, bottoms)
            if ref in bottoms or ref == XI:
                return out
            return Named(ref, out)
        case Lam(h, ann, b):
            return Lam(h, ann, _strip_bottom(b, bottoms))
        case FoLam(h, b):
            return FoLam(h, _strip_bottom(b, bottoms))
        case App(f, a):
            return App(_strip_bottom(f, bottoms), _strip_bottom(a, bottoms))
        case Proj(i, b):
            return Proj(i, _strip_bottom(b, bottoms))
        case Inst(b, t):
            return Inst(_strip_bottom(b, bottoms), t)
        case Pair(l, r):
            return Pair(_strip_bottom(l, bottoms), _strip_bottom(r, bottoms))
        case _:
            return M


### isomorphism witnesses


def _l(name: str, body: LmTerm, hint: str | None = None) -> LmTerm:
    return Lam(hint or name, None, close_lam(body, name))


def _fl(hint: str, name: str, body: LmTerm) -> LmTerm:
    return FoLam(hint, close_fo(body, "P", name))


def _p1(M):
    return Proj(1, M)


def _p2(M):
    return Proj(2, M)


def _hint(A: Formula, default: str = "x") -> str:
    return A.hint if isinstance(A, Forall) else default


def _witness(rule: str, A: Formula, forward: bool) -> LmTerm:
    a, b, c, d = Var("a"), Var("b"), Var("c"), Var("d")
    match rule, forward:
        case "and-assoc", True:
            return _l("a", Pair(Pair(_p1(a), _p1(_p2(a))), _p2(_p2(a))))
        case "and-assoc", False:
            return _l("a", Pair(_p1(_p1(a)), Pair(_p2(_p1(a)), _p2(a))))
        case "and-top-r", True:
            return _l("a", _p1(a))
        case "and-top-r", False:
            return _l("a", Pair(a, Star()))
        case "and-top-l", True:
            return _l("a", _p2(a))
        case "and-top-l", False:
            return _l("a", Pair(Star(), a))
        case "curry", True:
            return _l("a", _l("b", _l("c", App(a, Pair(b, c)))))
        case "curry", False:
            return _l("a", _l("b", App(App(a, _p1(b)), _p2(b))))
        case "imp-top-l", True:
            return _l("a", App(a, Star()))
        case "imp-top-l", False:
            return _l("a", _l("d", a))
        case "imp-and", True:
            return _l("a", Pair(_l("b", _p1(App(a, b))), _l("b", _p2(App(a, b)))))
        case "imp-and", False:
            return _l("a", _l("b", Pair(App(_p1(a), b), App(_p2(a), b))))
        case "imp-top-r", True:
            return _l("a", Star())
        case "imp-top-r", False:
            return _l("a", _l("d", a))
        case "forall-and", True:
            h = _hint(A)
            g1, g2 = gensym("_wx"), gensym("_wx")
            return _l(
                "a",
                Pair(
                    _fl(h, g1, _p1(Inst(a, FoVar("P", g1)))),
                    _fl(h, g2, _p2(Inst(a, FoVar("P", g2)))),
                ),
            )
        case "forall-and", False:
            h = _hint(A)
            g = gensym("_wx")
            x = FoVar("P", g)
            return _l("a", _fl(h, g, Pair(Inst(_p1(a), x), Inst(_p2(a), x))))
        case "forall-top", True:
            return _l("a", Star())
        case "forall-top", False:
            return _l("a", _fl(_hint(A), gensym("_wx"), a))
        case "imp-forall", True:
            h = _hint(A.right if isinstance(A, Imp) else A)
            g = gensym("_wx")
            return _l("a", _fl(h, g, _l("b", Inst(App(a, b), FoVar("P", g)))))
        case "imp-forall", False:
            h = _hint(A)
            g = gensym("_wx")
            return _l("a", _l("b", _fl(h, g, App(Inst(a, FoVar("P", g)), b))))
        case "and-comm", _:
            return _l("a", Pair(_p2(a), _p1(a)))
        case "forall-comm", True:
            hx = _hint(A)
            hy = _hint(A.body if isinstance(A, Forall) else A, "y")
            gx, gy = gensym("_wx"), gensym("_wy")
            return _l(
                "a",
                _fl(hy, gy, _fl(hx, gx, Inst(Inst(a, FoVar("P", gx)), FoVar("P", gy)))),
            )
        case "forall-comm", False:
            hx = _hint(A)
            hy = _hint(A.body if isinstance(A, Forall) else A, "y")
            gx, gy = gensym("_wx"), gensym("_wy")
            return _l(
                "a",
                _fl(hx, gx, _fl(hy, gy, Inst(Inst(a, FoVar("P", gy)), FoVar("P", gx)))),
            )
    raise ValueError(f"unknown isomorphism equation {rule!r}")


def _swap_forall(C: Formula) -> Formula:
    assert isinstance(C, Forall) and isinstance(C.body, Forall)

    def go(leaf, dd):
        if isinstance(leaf, FoBound):
            if leaf.k == dd:
                return FoBound(dd + 1)
            if leaf.k == dd + 1:
                return FoBound(dd)
        return leaf

    return Forall(C.body.hint, Forall(C.hint, formula_map_fo(C.body.body, go)))


def _apply_equation(rule: str, C: Formula) -> Formula:
    if rule == "and-comm":
        if not isinstance(C, And):
            raise ValueError("and-comm needs a conjunction")
        return And(C.right, C.left)
    if rule == "forall-comm":
        if not (isinstance(C, Forall) and isinstance(C.body, Forall)):
            raise ValueError("forall-comm needs two quantifiers")
        return _swap_forall(C)
    for name, fn in RULES:
        if name == rule:
            out = fn(C)
            if out is None:
                raise ValueError(f"formula does not match the {rule} pattern")
            return out
    raise ValueError(f"unknown isomorphism equation {rule!r}")


def iso_witness(rule: str, instance: Formula, direction: str = "fwd") -> LmTerm:
    """Closed bare term witnessing one type-isomorphism equation.

    ``instance`` is the concrete left-hand side; the forward witness has type
    instance -> rewritten, the backward one the reverse.  Witnesses carry no
    annotations; they typecheck in checking mode against those arrow types.
    """
    _apply_equation(rule, instance)  # validates the shape
    if direction not in ("fwd", "bwd"):
        raise ValueError(f"direction must be fwd or bwd, not {direction!r}")
    return _witness(rule, instance, direction == "fwd")


def _lift(C: Formula, path: tuple[int, ...], rule: str, fwd: bool) -> tuple[LmTerm, Formula]:
    """Witness between C and C rewritten by ``rule`` at ``path``.

    Returns (W, C') with W : C -> C' when ``fwd`` and W : C' -> C otherwise.
    Descending left of an arrow flips the direction.
    """
    if not path:
        return iso_witness(rule, C, "fwd" if fwd else "bwd"), _apply_equation(rule, C)
    i, rest = path[0], path[1:]
    cv, dv = gensym("_wc"), gensym("_wd")
    match C:
        case Imp(l, r) if i == 0:
            W, l2 = _lift(l, rest, rule, not fwd)
            out = _l(cv, _l(dv, App(Var(cv), App(W, Var(dv))), "d"), "c")
            return out, Imp(l2, r)
        case Imp(l, r):
            W, r2 = _lift(r, rest, rule, fwd)
            out = _l(cv, _l(dv, App(W, App(Var(cv), Var(dv))), "d"), "c")
            return out, Imp(l, r2)
        case And(l, r) if i == 0:
            W, l2 = _lift(l, rest, rule, fwd)
            out = _l(cv, Pair(App(W, _p1(Var(cv))), _p2(Var(cv))), "c")
            return out, And(l2, r)
        case And(l, r):
            W, r2 = _lift(r, rest, rule, fwd)
            out = _l(cv, Pair(_p1(Var(cv)), App(W, _p2(Var(cv)))), "c")
            return out, And(l, r2)
        case Forall(h, b):
            g = gensym("_wx")
            W, b2 = _lift(formula_open(b, FoVar("P", g)), rest, rule, fwd)
            out = _l(cv, _fl(h, g, App(W, Inst(Var(cv), FoVar("P", g)))), "c")
            return out, Forall(h, formula_close(b2, "P", g))
    raise ValueError(f"path {path} does not enter the formula")


def coerce_canonical(M: LmTerm, A: Formula) -> tuple[LmTerm, Formula]:
    """Apply lifted witnesses along the canonicalization trace of A."""
    A0, trace = canonicalize(A)
    cur = A
    for step in trace:
        W, cur = _lift(cur, step.path, step.rule, True)
        M = App(W, M)
    assert cur == A0, "witness lifting drifted from the canonicalization trace"
    return M, A0


### the full pipeline


def _cnf_component(M: LmTerm, Q: Formula, fuel: int, trace: list[NormStep] | None) -> LmTerm:
    M = make_simple(M)
    M = bmr_normalize(M, fuel, trace)
    for s in subterms(M):
        if isinstance(s, (Pair, Proj, Star)):
            raise AssertionError("product constructs survived reduction at a product-free type")
    M = _pc(M, Q, {}, {XI: Bot()}, False, trace)
    M = _nu_phase(M, fuel, trace)
    M = _strip_bottom(M, set())
    return strip_annotations(M)


def canonical_normal_form(
    M: LmTerm,
    A: Formula,
    fuel: int = DEFAULT_FUEL,
    trace: list[NormStep] | None = None,
) -> tuple[LmTerm, Formula]:
    """Canonical normal form of a closed typed term, with its canonical type.

    The result is bare and matches the canonical grammar: Star at top, and
    otherwise a tuple of fully expanded components whose mu-units carry a
    naming exactly when the spine type is not bot and a binder exactly when
    the component's final atom is not bot.
    """
    if not is_closed(M):
        raise ValueError("canonical normal form needs a lam/mu-closed term")
    _, M = typecheck(None, M, goal=A)
    M0, A0 = coerce_canonical(M, A)
    comps = conjuncts(A0)
    if not comps:
        return Star(), A0
    n = len(comps)
    parts: list[LmTerm] = []
    for j, Q in enumerate(comps):
        t = M0
        for _ in range(n - 1 - j):
            t = Proj(1, t)
        if j > 0:
            t = Proj(2, t)
        parts.append(_cnf_component(t, Q, fuel, trace))
    out = parts[0]
    for t in parts[1:]:
        out = Pair(out, t)
    typecheck(None, out, goal=A0)
    return out, A0


### canonical-shape predicate (independent of the forest validator)


def _check_component_shape(M: LmTerm, Q: Formula, gamma: dict, delta: dict) -> None:
    while isinstance(Q, Forall):
        if not isinstance(M, FoLam):
            raise ValueError("missing first-order abstraction")
        y = gensym("_cy")
        Q = formula_open(Q.body, FoVar("P", y))
        M = open_fo(M.body, FoVar("P", y))
    prems: list[Formula] = []
    while isinstance(Q, Imp):
        prems.append(Q.left)
        Q = Q.right
    names = []
    for P in prems:
        if not isinstance(M, Lam) or M.ann is not None:
            raise ValueError("missing or annotated lambda")
        a = gensym("_ca")
        gamma[a] = P
        names.append(a)
        M = open_lam(M.body, Var(a))
    spine_goal: Formula
    if Q != Bot():
        if not isinstance(M, Mu) or M.ann is not None:
            raise ValueError("missing mu-binder at a non-bot final atom")
        al = gensym("_cm")
        delta[al] = Q
        M = open_mu(M.body, al)
    if isinstance(M, Named):
        if M.ref not in delta:
            raise ValueError("naming targets an unbound mu-variable")
        spine_goal = delta[M.ref]
        M = M.body
        if spine_goal == Bot():
            raise ValueError("naming at type bot must be erased")
    else:
        spine_goal = Bot()
    head, insts, args = _spine(M)
    if not (isinstance(head, Var) and isinstance(head.ref, str) and head.ref in gamma):
        raise ValueError("spine head is not a bound variable")
    hprems, final = _open_prefix(gamma[head.ref], insts)
    if final != spine_goal or len(args) != len(hprems):
        raise ValueError("spine does not saturate its head")
    for arg, P in zip(args, hprems):
        _check_component_shape(arg, P, gamma, delta)
    for a in names:
        del gamma[a]


def is_canonical_term(M: LmTerm, A: Formula) -> bool:
    """Shape test against the canonical grammar (bare terms, canonical A)."""
    if not is_canonical(A):
        return False
    comps = conjuncts(A)
    if not comps:
        return isinstance(M, Star)
    parts: list[LmTerm] = []
    cur = M
    for _ in range(len(comps) - 1):
        if not isinstance(cur, Pair):
            return False
        parts.append(cur.right)
        cur = cur.left
    parts.append(cur)
    parts.reverse()
    try:
        for t, Q in zip(parts, comps):
            _check_component_shape(t, Q, {}, {})
    except (ValueError, KeyError):
        return False
    return True


### translation into the simply typed fragment

O_ATOM = Atom("O")
F_ATOM = Atom("F")


def simple_type(A: Formula) -> Formula:
    """Collapse a product-free formula onto propositional atoms O and F."""
    match A:
        case Bot():
            return F_ATOM
        case Atom(rel, _):
            if rel in ("O", "F"):
                raise ValueError(f"relation name {rel!r} is reserved by the translation")
            return Atom(rel)
        case Imp(l, r):
            return Imp(simple_type(l), simple_type(r))
        case Forall(_, b):
            return Imp(O_ATOM, simple_type(b))
        case Top() | And(_, _):
            raise ValueError("simple-types translation excludes products and top")
    raise TypeError(A)


def _simple_fo(t: FoTerm) -> LmTerm:
    match t:
        case FoVar(_, name):
            return Var(name)
        case Fn(name, args):
            out: LmTerm = Var(name)
            for u in args:
                out = App(out, _simple_fo(u))
            return out
    raise AssertionError("first-order binders are opened before translation")


def to_simple_types(
    M: LmTerm, A: Formula, sig=None
) -> tuple[LmTerm, Formula, dict[str, Formula]]:
    """Translate a simple product-free term into the simply typed calculus.

    First-order abstraction becomes lambda over the atom O, instantiation
    becomes application, and first-order terms are curried variable spines.
    Returns the image term, the image type, and the context declaring the
    function symbols (arity k at O^k -> O) and the free first-order
    variables (at O) that occur.  Variable names are carried over verbatim,
    so the input must not reuse a first-order name as a lambda-variable.
    """

    def go(N: LmTerm) -> LmTerm:
        match N:
            case Var(_):
                return N
            case Lam(h, ann, b):
                g = gensym("_sa")
                ann2 = None if ann is None else simple_type(ann)
                return Lam(h, ann2, close_lam(go(open_lam(b, Var(g))), g))
            case App(f, a):
                return App(go(f), go(a))
            case Mu(h, ann, b):
                g = gensym("_sm")
                ann2 = None if ann is None else simple_type(ann)
                return Mu(h, ann2, close_mu(go(open_mu(b, g)), g))
            case Named(ref, b):
                return Named(ref, go(b))
            case FoLam(h, b):
                g = gensym("_sx")
                body = go(open_fo(b, FoVar("P", g)))
                return Lam(h, O_ATOM, close_lam(body, g))
            case Inst(b, t):
                return App(go(b), _simple_fo(t))
        raise ValueError("simple terms exclude pairs, projections and star")

    out = go(M)
    ctx: dict[str, Formula] = {}
    for cls, name in sorted(free_fo_vars(M)):
        if cls != "P":
            raise ValueError(f"translation input carries a reserved {cls}-variable {name!r}")
        ctx[name] = O_ATOM
    fns: set[tuple[str, int]] = set()
    for s in subterms(M):
        if isinstance(s, Inst):
            fns |= fo_funcs(s.arg)
    for name, k in sorted(fns):
        if sig is not None and sig.fn_arity(name) not in (None, k):
            raise ValueError(f"function {name!r} used at arity {k}")
        ty: Formula = O_ATOM
        for _ in range(k):
            ty = Imp(O_ATOM, ty)
        ctx[name] = ty
    return out, simple_type(A), ctx
