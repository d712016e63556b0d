"""Folding and unfolding between the one-move and question/answer models.

Unfolding an arena moves atomic labels onto fresh answer leaves; unfolding a
strategy replays its mu-pointers as answer pairs.  The two directions are
mutually inverse bijections between total mu-strategies and total
label-rigid QA-strategies, and the QA denotation of a term is by definition
the unfolding of its one-move denotation, so folding it back must return
the one-move denotation on the nose.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from lmgame.arena import ANode, Arena, find_arena_iso, interp_arena
from lmgame.canon import canonicalize
from lmgame.denote import denote
from lmgame.forest import readback
from lmgame.plays import MoveOcc
from lmgame.qa import (
    QaFlags,
    fold_arena,
    fold_strategy,
    is_qa_arena,
    qa_classify,
    translate_lm_to_lambda,
    unfold_arena,
    unfold_strategy,
)
from lmgame.strategy import ViewFunction, identity, is_total
from lmgame.syntax import (
    And,
    App,
    Atom,
    Bot,
    FoLam,
    Imp,
    Inst,
    Lam,
    Mu,
    Named,
    Pair,
    Proj,
    Star,
    Top,
    Var,
    free_mu_vars,
    gensym,
    open_mu,
    strip_annotations,
    subterms,
)
from lmgame.typing import synth_type

from corpus import CLASSICAL, CLASSICAL_TY, CNF_CORPUS, GENERAL_CORPUS, PEIRCE, F, T

PEIRCE_TY = "((Y -> Z) -> Y) -> Y"
DNE = "lam f. mu al. (f) (lam a. [al] a)"
DNE_TY = "((Y -> bot) -> bot) -> Y"


def _propositional(A) -> bool:
    match A:
        case Atom(_, args):
            return not args
        case Bot() | Top():
            return True
        case Imp(left, right) | And(left, right):
            return _propositional(left) and _propositional(right)
    return False


def _arrow_only(A, with_bot: bool) -> bool:
    match A:
        case Atom(_, args):
            return not args
        case Bot():
            return with_bot
        case Imp(left, right):
            return _arrow_only(left, with_bot) and _arrow_only(right, with_bot)
    return False


PROP_CORPUS = [(t, ty) for t, ty in GENERAL_CORPUS + CNF_CORPUS if _propositional(F(ty))]
ARROW_CORPUS = [(t, ty) for t, ty in GENERAL_CORPUS + CNF_CORPUS if _arrow_only(F(ty), True)]


### arenas


def test_unfold_of_an_atom():
    A = interp_arena(F("Y"))
    Q = unfold_arena(A)
    assert len(Q) == 2
    assert Q.nodes[0] == ANode(0, None, (), ())
    assert Q.nodes[1] == ANode(1, 0, (), (Atom("Y", ()),))
    assert Q.children == ((1,), ())
    assert is_qa_arena(Q) and not is_qa_arena(A)
    assert fold_arena(Q) == A


def test_bot_is_its_own_unfolding():
    A = interp_arena(F("bot"))
    assert unfold_arena(A) == A
    assert fold_arena(A) == A


def test_unfold_of_the_peirce_arena():
    A = interp_arena(F(PEIRCE_TY))
    Q = unfold_arena(A)
    assert len(Q) == 8
    labels = {n.id: [a.rel for a in n.at] for n in Q.nodes}
    assert labels == {0: [], 1: [], 2: [], 3: [], 4: ["Y"], 5: ["Y"], 6: ["Z"], 7: ["Y"]}
    parents = {n.id: n.parent for n in Q.nodes}
    assert parents == {0: None, 1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 3}
    assert Q.children == ((1, 4), (2, 5), (3, 6), (7,), (), (), (), ())
    assert fold_arena(Q) == A
    assert unfold_arena(fold_arena(Q)) == Q


@pytest.mark.parametrize("text", ["Y -> Z", "(Y /\\ Z) -> bot", "Y -> Y -> Y", DNE_TY])
def test_fold_inverts_unfold_on_interpreted_arenas(text):
    A = interp_arena(F(text))
    Q = unfold_arena(A)
    assert is_qa_arena(Q)
    assert fold_arena(Q) == A
    assert unfold_arena(fold_arena(Q)) == Q
    # folding keeps the question skeleton: same parents on the question part
    assert [n.parent for n in A.nodes] == [Q.nodes[n.id].parent for n in A.nodes]


def test_fold_of_an_interleaved_qa_arena():
    # a legal QA-arena whose answer does not come last in the id order folds
    # fine; re-unfolding normalizes the layout to an isomorphic copy
    Q = Arena(
        nodes=(
            ANode(0, None, (), ()),
            ANode(1, 0, (), (Atom("Y", ()),)),
            ANode(2, 0, (), ()),
        ),
        roots=(0,),
        children=((1, 2), (), ()),
    )
    assert is_qa_arena(Q)
    A = fold_arena(Q)
    assert [(n.parent, n.at) for n in A.nodes] == [(None, (Atom("Y", ()),)), (0, ())]
    R = unfold_arena(A)
    assert R != Q and find_arena_iso(R, Q) is not None


def test_qa_arena_validation():
    assert not is_qa_arena(interp_arena(F("Y")))  # labelled root
    labelled_inner = Arena(
        nodes=(ANode(0, None, (), ()), ANode(1, 0, (), (Atom("Y", ()),)), ANode(2, 1, (), ())),
        roots=(0,),
        children=((1,), (2,), ()),
    )
    assert not is_qa_arena(labelled_inner)
    two_atoms = Arena(
        nodes=(ANode(0, None, (), ()), ANode(1, 0, (), (Atom("Y", ()), Atom("Z", ())))),
        roots=(0,),
        children=((1,), ()),
    )
    assert not is_qa_arena(two_atoms)
    fo = interp_arena(F("forall x. X(x)"))
    assert not is_qa_arena(fo)
    with pytest.raises(ValueError, match="first-order"):
        unfold_arena(fo)
    with pytest.raises(ValueError, match="root"):
        fold_arena(interp_arena(F("Y")))


### strategies


def test_unfold_of_the_peirce_strategy():
    sigma = denote(T(PEIRCE), goal=F(PEIRCE_TY))
    tau = unfold_strategy(sigma)
    short = (
        MoveOcc(0, None, (), ()),
        MoveOcc(1, 0, (), ()),
        MoveOcc(5, 1, (None,), ()),
        MoveOcc(4, 0, ((2, 0),), ()),
    )
    long = (
        MoveOcc(0, None, (), ()),
        MoveOcc(1, 0, (), ()),
        MoveOcc(2, 1, (), ()),
        MoveOcc(3, 2, (), ()),
        MoveOcc(7, 3, (None,), ()),
        MoveOcc(4, 0, ((4, 0),), ()),
    )
    assert set(tau.maximal_views()) == {short, long}
    # the long view answers the initial question while a later question is
    # still pending, so the unfolding is not well bracketed
    assert qa_classify(tau) == QaFlags(rigid=True, label_rigid=True, well_bracketed=False)


def test_unfold_of_a_pure_lambda_term_is_well_bracketed():
    sigma = denote(T("lam f. lam a. (f) ((f) a)"), goal=F("(Y -> Y) -> Y -> Y"))
    assert qa_classify(unfold_strategy(sigma)) == QaFlags(True, True, True)


@pytest.mark.parametrize("text,ty", PROP_CORPUS, ids=[t for t, _ in PROP_CORPUS])
def test_fold_inverts_unfold_on_the_corpus(text, ty):
    A = F(ty)
    sigma = denote(T(text), goal=A)
    assert is_total(sigma)
    tau = unfold_strategy(sigma)
    assert qa_classify(tau).label_rigid
    assert is_total(tau)
    back = fold_strategy(tau)
    assert back.arena == sigma.arena
    assert back == sigma
    assert unfold_strategy(back) == tau
    # two views of a strategy never differ only in their mu-pointers
    seen = {}
    for v in sigma.views:
        key = tuple((m.node, m.justifier, m.inst) for m in v)
        assert seen.setdefault(key, v) == v


def test_fold_of_the_identity_on_an_unfolded_arena():
    A = interp_arena(F(PEIRCE_TY))
    Q = unfold_arena(A)
    idq = identity(Q)
    assert qa_classify(idq) == QaFlags(True, True, True)
    ida = identity(A)
    back = fold_strategy(idq)
    assert back.arena == ida.arena
    assert back == ida
    # the canonical-layout round trip closes on the nose
    assert fold_strategy(unfold_strategy(ida)) == ida


def test_unfold_of_the_empty_strategy():
    sigma = ViewFunction(interp_arena(F("Y")), [()])
    assert unfold_strategy(sigma).views == frozenset({()})


def test_fold_rejects_a_non_label_rigid_strategy():
    Q = unfold_arena(interp_arena(F("Y -> Y")))
    v1 = (MoveOcc(0, None, (), ()), MoveOcc(1, 0, (), ()))
    v2 = v1 + (MoveOcc(3, 1, (None,), ()), MoveOcc(1, 0, (), ()))
    v3 = v2 + (MoveOcc(3, 3, (None,), ()), MoveOcc(2, 0, ((4, 0),), ()))
    tau = ViewFunction(Q, [v1, v2, v3])
    assert is_total(tau)
    # answering late keeps the brackets but breaks rigidity
    assert qa_classify(tau) == QaFlags(rigid=False, label_rigid=False, well_bracketed=True)
    with pytest.raises(ValueError, match="label-rigid"):
        fold_strategy(tau)


def test_fold_rejects_a_partial_strategy():
    Q = unfold_arena(interp_arena(F("Y -> Y")))
    tau = ViewFunction(Q, [(MoveOcc(0, None, (), ()), MoveOcc(1, 0, (), ()))])
    assert qa_classify(tau).label_rigid
    with pytest.raises(ValueError, match="total"):
        fold_strategy(tau)


def test_unfold_rejects_first_order_strategies():
    sigma = denote(T(CLASSICAL), goal=F(CLASSICAL_TY))
    with pytest.raises(ValueError, match="first-order"):
        unfold_strategy(sigma)


### the lambda fragment

# Collapse every mu-binder that just names its own body.  On canonical
# readbacks this succeeds exactly when each naming targets the innermost
# binder; the result, when defined, is a pure lambda term.


def _purify(M):
    match M:
        case Var(_):
            return M
        case Lam(h, ann, b):
            rb = _purify(b)
            return None if rb is None else Lam(h, ann, rb)
        case App(f, a):
            rf, ra = _purify(f), _purify(a)
            return None if rf is None or ra is None else App(rf, ra)
        case Mu(_, _, b):
            al = gensym("_wb")
            ob = open_mu(b, al)
            if not (isinstance(ob, Named) and ob.ref == al):
                return None
            rb = _purify(ob.body)
            if rb is None or al in free_mu_vars(rb):
                return None
            return rb
        case _:
            return None


@pytest.mark.parametrize("text,ty", ARROW_CORPUS, ids=[t for t, _ in ARROW_CORPUS])
def test_well_bracketing_matches_the_lambda_fragment(text, ty):
    A = F(ty)
    sigma = denote(T(text), goal=A)
    wb = qa_classify(unfold_strategy(sigma)).well_bracketed
    pure = _purify(readback(sigma, canonicalize(A)[0]))
    if pure is not None:
        # a lambda-term denotation is always well bracketed
        assert wb
        assert denote(pure, goal=A) == sigma
    if _arrow_only(A, with_bot=False):
        # over bot-free types the converse holds as well
        assert wb == (pure is not None)


def test_mu_weakening_is_well_bracketed_but_not_a_lambda_term():
    # mu d. a never names d, so no answer pair witnesses the pending
    # question: bracketing holds vacuously while bot -> Y has no pure
    # lambda inhabitant
    A = F("bot -> Y")
    sigma = denote(T("lam a. mu d. a"), goal=A)
    assert qa_classify(unfold_strategy(sigma)).well_bracketed
    assert _purify(readback(sigma, canonicalize(A)[0])) is None


### translation to the lambda calculus


def test_translation_of_double_negation_elimination():
    N, B, ctx = translate_lm_to_lambda(T(DNE), F(DNE_TY))
    assert ctx == {}
    assert B == F("(((Y -> bot) -> bot) -> bot) -> (Y -> bot)")
    assert strip_annotations(N) == T("lam f. lam al. (f) (lam a. (a) al)")
    assert synth_type(N) == B


def test_translation_of_peirce():
    N, B, ctx = translate_lm_to_lambda(T(PEIRCE), F(PEIRCE_TY))
    assert ctx == {}
    assert strip_annotations(N) == T("lam f. lam al. ((f) (lam a. lam d. (a) al)) al")
    assert synth_type(N) == B


def test_translation_expands_the_mu_context():
    N, B, ctx = translate_lm_to_lambda(
        T("[al] a"), F("bot"), gamma={"a": F("Z -> Y")}, delta={"al": F("Z -> Y")}
    )
    assert B == F("bot")
    assert ctx == {"a": F("(Z -> bot) -> (Y -> bot)"), "al1": F("Z -> bot"), "al": F("Y")}
    assert strip_annotations(N) == App(App(Var("a"), Var("al1")), Var("al"))
    assert synth_type(N, ctx) == B


def test_translation_drops_the_tail_for_bot_ended_mu_variables():
    N, B, ctx = translate_lm_to_lambda(
        T("mu al. [al] a"), F("Y -> bot"), gamma={"a": F("Y -> bot")}
    )
    assert ctx == {"a": F("(Y -> bot) -> bot")}
    assert strip_annotations(N) == T("lam al1. (a) al1")
    assert synth_type(N, ctx) == B == F("(Y -> bot) -> bot")


def test_translated_terms_typecheck_across_the_corpus():
    for text, ty in ARROW_CORPUS:
        if any(isinstance(s, (FoLam, Inst, Pair, Proj, Star)) for s in subterms(T(text))):
            continue
        N, B, ctx = translate_lm_to_lambda(T(text), F(ty))
        assert ctx == {}
        assert synth_type(N) == B


def test_translation_input_validation():
    with pytest.raises(ValueError):
        translate_lm_to_lambda(T(CLASSICAL), F(CLASSICAL_TY))  # quantifiers
    with pytest.raises(ValueError):
        translate_lm_to_lambda(T("lam a. a"), F("(Y /\\ Z) -> (Y /\\ Z)"))
    with pytest.raises(ValueError):
        translate_lm_to_lambda(T("*"), F("top"))
    with pytest.raises(ValueError):
        translate_lm_to_lambda(T("lam a. a"), F("X(c()) -> X(c())"))
    with pytest.raises(ValueError, match="clash"):
        translate_lm_to_lambda(
            T("[al] a"),
            F("bot"),
            gamma={"a": F("Z -> Y"), "al1": F("Y")},
            delta={"al": F("Z -> Y")},
        )


### random propositional arenas

_atoms = hst.sampled_from([Atom("Y", ()), Atom("Z", ()), Bot(), Top()])
_prop = hst.recursive(
    _atoms,
    lambda kids: hst.builds(Imp, kids, kids) | hst.builds(And, kids, kids),
    max_leaves=8,
)


@given(_prop)
@settings(max_examples=40, deadline=None)
def test_identity_strategies_fold_back_everywhere(A):
    ida = identity(interp_arena(A))
    tau = unfold_strategy(ida)
    flags = qa_classify(tau)
    assert flags.label_rigid and flags.well_bracketed
    assert is_total(tau) == is_total(ida)
    if is_total(tau):
        back = fold_strategy(tau)
        assert back.arena == ida.arena
        assert back == ida
