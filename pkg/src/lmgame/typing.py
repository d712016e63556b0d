"""Type synthesis for Church-style first-order lambda-mu terms.

Bidirectional: binder annotations (or a checking goal) make the ten rules
syntax-directed.  ``typecheck`` returns the synthesized type together with a
fully annotated elaboration of the subject, which downstream passes
(normalization, denotation) rely on.

Also the two erasures: dropping first-order structure yields a simply typed
term over the propositional atoms; dropping classical structure on top of
that yields a pure lambda-term over the single atom ``bot``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    And,
    App,
    Atom,
    Bot,
    FoLam,
    FoTerm,
    FoVar,
    Formula,
    Forall,
    Imp,
    Inst,
    Lam,
    LmTerm,
    Mu,
    Named,
    Pair,
    Proj,
    Star,
    Top,
    Var,
    close_fo,
    close_lam,
    close_mu,
    formula_map_fo,
    formula_close,
    formula_open,
    fo_map,
    fo_vars,
    gensym,
    open_fo,
    open_lam,
    open_mu,
)


class TypingError(ValueError):
    pass


@dataclass
class TypingJudgment:
    gamma: dict[str, Formula]
    subject: LmTerm
    type: Formula
    delta: dict[str, Formula] = field(default_factory=dict)


def _is_op_term(t: FoTerm) -> bool:
    return all(cls != "A" for cls, _ in fo_vars(t))


def _no_ovars(t: FoTerm) -> bool:
    return all(cls != "O" for cls, _ in fo_vars(t))


class _Checker:
    def __init__(self, gamma: dict[str, Formula], delta: dict[str, Formula]):
        self.gamma = dict(gamma)
        self.delta = dict(delta)

    def fail(self, msg: str) -> TypingError:
        return TypingError(msg)

    def infer(self, M: LmTerm) -> tuple[Formula, LmTerm]:
        match M:
            case Var(ref):
                if not isinstance(ref, str):
                    raise self.fail("dangling bound variable")
                if ref not in self.gamma:
                    raise self.fail(f"unbound variable {ref!r}")
                return self.gamma[ref], M
            case Star():
                return Top(), M
            case Lam(h, ann, b):
                if ann is None:
                    raise self.fail(f"lam {h} needs an annotation or a checking goal")
                a = gensym("_a")
                self.gamma[a] = ann
                B, b2 = self.infer(open_lam(b, Var(a)))
                del self.gamma[a]
                return Imp(ann, B), Lam(h, ann, close_lam(b2, a))
            case App(f, arg):
                F, f2 = self.infer(f)
                if not isinstance(F, Imp):
                    raise self.fail("applying a term of non-arrow type")
                a2 = self.check(arg, F.left)
                return F.right, App(f2, a2)
            case Pair(l, r):
                A, l2 = self.infer(l)
                B, r2 = self.infer(r)
                return And(A, B), Pair(l2, r2)
            case Proj(i, b):
                B, b2 = self.infer(b)
                if not isinstance(B, And):
                    raise self.fail("projecting a term of non-conjunction type")
                return (B.left if i == 1 else B.right), Proj(i, b2)
            case Named(ref, b):
                if not isinstance(ref, str):
                    raise self.fail("dangling mu reference")
                if ref not in self.delta:
                    raise self.fail(f"unbound mu-variable {ref!r}")
                b2 = self.check(b, self.delta[ref])
                return Bot(), Named(ref, b2)
            case Mu(h, ann, b):
                if ann is None:
                    raise self.fail(f"mu {h} needs an annotation or a checking goal")
                al = gensym("_mu")
                self.delta[al] = ann
                b2 = self.check(open_mu(b, al), Bot())
                del self.delta[al]
                return ann, Mu(h, ann, close_mu(b2, al))
            case FoLam(h, b):
                y = gensym("_y")
                B, b2 = self.infer(open_fo(b, FoVar("P", y)))
                return Forall(h, formula_close(B, "P", y)), FoLam(h, close_fo(b2, "P", y))
            case Inst(b, t):
                if not _is_op_term(t):
                    raise self.fail("first-order argument contains an arena variable")
                if not _no_ovars(t):
                    raise self.fail("first-order argument contains a reserved move variable")
                B, b2 = self.infer(b)
                if not isinstance(B, Forall):
                    raise self.fail("instantiating a term of non-forall type")
                return formula_open(B.body, t), Inst(b2, t)
        raise self.fail(f"cannot infer {type(M).__name__}")

    def check(self, M: LmTerm, A: Formula) -> LmTerm:
        match M, A:
            case Lam(h, ann, b), Imp(dom, cod):
                if ann is not None and ann != dom:
                    raise self.fail("annotation disagrees with expected argument type")
                a = gensym("_a")
                self.gamma[a] = dom
                b2 = self.check(open_lam(b, Var(a)), cod)
                del self.gamma[a]
                return Lam(h, dom, close_lam(b2, a))
            case Lam(h, _, _), _:
                raise self.fail(f"lam {h} against non-arrow type")
            case Mu(h, ann, b), _:
                if ann is not None and ann != A:
                    raise self.fail("annotation disagrees with expected type")
                al = gensym("_mu")
                self.delta[al] = A
                b2 = self.check(open_mu(b, al), Bot())
                del self.delta[al]
                return Mu(h, A, close_mu(b2, al))
            case Pair(l, r), And(Al, Ar):
                return Pair(self.check(l, Al), self.check(r, Ar))
            case Pair(_, _), _:
                raise self.fail("pair against non-conjunction type")
            case FoLam(h, b), Forall(_, body):
                # the freshness side condition: a brand new P-variable
                y = gensym("_y")
                b2 = self.check(open_fo(b, FoVar("P", y)), formula_open(body, FoVar("P", y)))
                return FoLam(h, close_fo(b2, "P", y))
            case FoLam(h, _), _:
                raise self.fail(f"Lam {h} against non-forall type")
            case _, _:
                B, M2 = self.infer(M)
                if B != A:
                    raise self.fail("synthesized type does not match the goal")
                return M2


def typecheck(
    gamma: dict[str, Formula] | None,
    M: LmTerm,
    delta: dict[str, Formula] | None = None,
    goal: Formula | None = None,
) -> tuple[Formula, LmTerm]:
    """Synthesize (or check against ``goal``) the type of ``M``.

    Returns the type and the elaboration of ``M`` with every binder
    annotated.  Raises :class:`TypingError` when no rule applies.
    """
    c = _Checker(gamma or {}, delta or {})
    if goal is not None:
        return goal, c.check(M, goal)
    return c.infer(M)


def synth_type(M: LmTerm, gamma: dict[str, Formula] | None = None, delta=None) -> Formula:
    return typecheck(gamma, M, delta)[0]


### erasures


def _erase_fo_formula(A: Formula) -> Formula:
    match A:
        case Forall(_, b):
            return _erase_fo_formula(b)
        case Atom(rel, _):
            return Atom(rel, ())
        case Imp(l, r):
            return Imp(_erase_fo_formula(l), _erase_fo_formula(r))
        case And(l, r):
            return And(_erase_fo_formula(l), _erase_fo_formula(r))
        case _:
            return A


def _erase_fo_term(M: LmTerm) -> LmTerm:
    match M:
        case FoLam(_, b):
            return _erase_fo_term(b)
        case Inst(b, _):
            return _erase_fo_term(b)
        case Lam(h, ann, b):
            return Lam(h, _erase_fo_formula(ann) if ann else None, _erase_fo_term(b))
        case Mu(h, ann, b):
            return Mu(h, _erase_fo_formula(ann) if ann else None, _erase_fo_term(b))
        case App(f, a):
            return App(_erase_fo_term(f), _erase_fo_term(a))
        case Pair(l, r):
            return Pair(_erase_fo_term(l), _erase_fo_term(r))
        case Proj(i, b):
            return Proj(i, _erase_fo_term(b))
        case Named(ref, b):
            return Named(ref, _erase_fo_term(b))
        case _:
            return M


def erase_first_order(M: LmTerm, A: Formula) -> tuple[LmTerm, Formula]:
    """Drop `Lam x.` and `{t}`; collapse forall and atom arguments in the type."""
    return _erase_fo_term(M), _erase_fo_formula(A)


def _erase_classical_formula(A: Formula) -> Formula:
    match A:
        case Atom(_, _):
            return Bot()
        case Imp(l, r):
            return Imp(_erase_classical_formula(l), _erase_classical_formula(r))
        case And(l, r):
            return And(_erase_classical_formula(l), _erase_classical_formula(r))
        case Forall(h, b):
            return Forall(h, _erase_classical_formula(b))
        case _:
            return A


def _erase_classical_term(M: LmTerm) -> LmTerm:
    match M:
        case Mu(_, _, b):
            return _erase_classical_term(b)
        case Named(_, b):
            return _erase_classical_term(b)
        case Lam(h, ann, b):
            return Lam(h, _erase_classical_formula(ann) if ann else None, _erase_classical_term(b))
        case App(f, a):
            return App(_erase_classical_term(f), _erase_classical_term(a))
        case Pair(l, r):
            return Pair(_erase_classical_term(l), _erase_classical_term(r))
        case Proj(i, b):
            return Proj(i, _erase_classical_term(b))
        case FoLam(h, b):
            return FoLam(h, _erase_classical_term(b))
        case Inst(b, t):
            return Inst(_erase_classical_term(b), t)
        case _:
            return M


def erase_classical(M: LmTerm, A: Formula) -> tuple[LmTerm, Formula]:
    """Drop `mu` and `[.]`; map every atom of the type to bot.

    On a mu-binder the erasure keeps the body of the first named subterm;
    since the propositional image collapses all atoms, the result is a plain
    lambda-term typed over bot.
    """
    return _erase_classical_term(M), _erase_classical_formula(A)
