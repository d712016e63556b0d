"""Denotations of terms as innocent strategies.

The worked examples pin exact views (nodes, pointers, instantiations);
the equality battery checks that the beta, eta, mu, rho and theta
conversions are invisible to the interpretation.
"""

import pytest

from lmgame.arena import build_judgment, interp_arena
from lmgame.denote import denote
from lmgame.parser import parse_formula, parse_term
from lmgame.strategy import identity, is_mu_rigid, is_total
from lmgame.syntax import FoVar, Fn, Signature

SIG = Signature(functions=(("f", 1), ("c", 0)), relations=(("X", 1), ("Y", 0)))


def F(text):
    return parse_formula(text, SIG)


def den(term_text, goal_text, gamma=None, delta=None):
    g = [(x, F(a)) for x, a in (gamma or [])]
    d = [(x, F(a)) for x, a in (delta or [])]
    return denote(parse_term(term_text, SIG), F(goal_text), gamma=g, delta=d)


### worked examples, move for move


def test_instantiation_example():
    s = den("lam a. a{c()}", "(forall x. X(x)) -> X(c())")
    assert s.arena == interp_arena(F("(forall x. X(x)) -> X(c())"))
    vs = sorted(s.views, key=len)
    assert len(vs) == 2 and vs[0] == ()
    root, answer = vs[1]
    assert (root.node, root.justifier, root.inst) == (0, None, ())
    assert (answer.node, answer.justifier) == (1, 0)
    assert answer.inst == (Fn("c", ()),)
    assert answer.mu == ((0, 0),)


def test_classical_example():
    s = den(
        "lam f. (f{x}) Lam y. lam d. mu al. (f{y}) Lam z. lam a. mu de. [al] a",
        "(forall x. ((forall y. (X(x) -> X(y))) -> bot)) -> bot",
    )
    assert len(s.views) == 4
    v = max(s.views, key=len)
    shape = [(m.node, m.justifier, m.inst, m.mu) for m in v]
    o0, o1, x = FoVar("O", "o0"), FoVar("O", "o1"), FoVar("P", "x")
    assert shape == [
        (0, None, (), ()),
        (1, 0, (x,), ()),
        (2, 1, (o0,), (None,)),
        (1, 0, (o0,), ()),
        (2, 3, (o1,), (None,)),
        (3, 4, (), ((2, 0),)),
    ]


def test_weakening_example():
    s = den("lam a. lam b. b", "X(c()) -> Y -> Y")
    vs = sorted(s.views, key=len)
    assert len(vs) == 2
    root, answer = vs[1]
    assert (root.node, answer.node) == (0, 2)
    assert answer.mu == ((0, 0),)


### identities and copycats


@pytest.mark.parametrize(
    "ty",
    ["Y", "X(c())", "Y /\\ X(c())", "forall x. (X(f(x)) -> Y) -> Y"],
    ids=["atom", "ground", "pair", "quant"],
)
def test_identity_is_copycat(ty):
    s = den("lam a. a", f"({ty}) -> ({ty})")
    assert s == identity(interp_arena(F(ty)))
    assert is_total(s) and is_mu_rigid(s)


def test_denotation_lands_on_judgment_arena():
    g = [("a", F("Y -> Y")), ("b", F("X(c())"))]
    d = [("k", F("Y"))]
    s = denote(parse_term("mu al. [k] (a) mu be. [k] (a) b2", SIG), F("Y"),
               gamma=[("a", F("Y -> Y")), ("b2", F("Y"))], delta=d)
    ja = build_judgment([("a", F("Y -> Y")), ("b2", F("Y"))], F("Y"), d)
    assert s.arena == ja.arena
    assert is_total(s)
    assert g  # silence the unused helper binding above


### conversion battery: each equation names the rule it witnesses


EQUATIONS = [
    # beta
    ("(lam a:Y. a) b", "b", "Y", [("b", "Y")], []),
    ("(lam a:(Y -> Y). lam c:Y. (a) c) g", "lam c:Y. (g) c", "Y -> Y",
     [("g", "Y -> Y")], []),
    # eta
    ("lam a. lam b. (a) b",
     "lam a. a",
     "((forall x. (X(f(x)) -> Y) -> Y) -> Y) -> ((forall x. (X(f(x)) -> Y) -> Y) -> Y)",
     [], []),
    # pair rules
    ("p1 <lam a:Y. a, b>", "lam a:Y. a", "Y -> Y", [("b", "X(c())")], []),
    ("p2 <b, lam a:Y. a>", "lam a:Y. a", "Y -> Y", [("b", "X(c())")], []),
    ("<p1 p, p2 p>", "p", "Y /\\ X(c())", [("p", "Y /\\ X(c())")], []),
    # first-order rules
    ("(Lam x. lam a:X(x). a){c()}", "lam a:X(c()). a", "X(c()) -> X(c())", [], []),
    ("Lam y. g{y}", "g", "forall x. X(x)", [("g", "forall x. X(x)")], []),
    ("(mu al:(forall x. X(x)). [al] g){c()}", "mu be:X(c()). [be] g{c()}", "X(c())",
     [("g", "forall x. X(x)")], []),
    # mu, rho, theta
    ("mu al. [al] b", "b", "Y", [("b", "Y")], []),
    ("mu be. [k] mu al. [al] b", "mu be. [k] b", "X(c())",
     [("b", "Y")], [("k", "Y")]),
    ("(mu al:(Y -> Y). [al] g) b", "mu be:Y. [be] (g) b", "Y",
     [("g", "Y -> Y"), ("b", "Y")], []),
    ("(mu al:(Y -> Y). [k] g) b", "mu be:Y. [k] g", "Y",
     [("g", "Y -> Y"), ("b", "Y")], [("k", "Y -> Y")]),
    ("mu al. [al] mu be. [al] b", "b", "Y", [("b", "Y")], []),
]

IDS = [
    "beta-ground", "beta-arrow", "eta", "pair-beta-1", "pair-beta-2",
    "pair-eta", "fo-beta", "fo-eta", "fo-mu", "theta", "rho",
    "mu-app-used", "mu-app-dead", "mu-contraction",
]


@pytest.mark.parametrize("lhs,rhs,goal,gamma,delta", EQUATIONS, ids=IDS)
def test_conversion(lhs, rhs, goal, gamma, delta):
    assert den(lhs, goal, gamma, delta) == den(rhs, goal, gamma, delta)


### classical strategies


def test_peirce_is_total_not_mu_rigid():
    s = den("lam a. mu k. [k] (a) lam b. mu d. [k] b",
            "((X(c()) -> Y) -> X(c())) -> X(c())")
    assert is_total(s) and not is_mu_rigid(s)


def test_dne_reroutes_to_the_conclusion():
    s = den("lam a. mu k. (a) lam b. mu d. [k] b", "((Y -> bot) -> bot) -> Y")
    assert is_total(s) and not is_mu_rigid(s)
    v = max(s.views, key=len)
    assert v[-1].mu == ((0, 0),)


def test_hint_names_do_not_matter():
    a = den("lam fresh. fresh", "Y -> Y")
    b = den("lam other. other", "Y -> Y")
    assert a == b


### totality over a small closed corpus


CLOSED = [
    ("*", "top"),
    ("lam a. a", "bot -> bot"),
    ("<*, lam a. a>", "top /\\ (Y -> Y)"),
    ("lam a. a{c()}", "(forall x. X(x)) -> X(c())"),
    ("Lam x. lam a. a{x}", "forall x. ((forall y. X(y)) -> X(x))"),
    ("lam a. mu k. [k] (a) lam b. mu d. [k] b", "((X(c()) -> Y) -> X(c())) -> X(c())"),
    ("lam f. (f{x}) Lam y. lam d. mu al. (f{y}) Lam z. lam a. mu de. [al] a",
     "(forall x. ((forall y. (X(x) -> X(y))) -> bot)) -> bot"),
    ("lam a. lam b. (a) ((a) b)", "(Y -> Y) -> Y -> Y"),
    ("lam p. <p2 p, p1 p>", "(Y /\\ X(c())) -> (X(c()) /\\ Y)"),
]


@pytest.mark.parametrize("term,ty", CLOSED, ids=[t for t, _ in CLOSED])
def test_closed_terms_are_total(term, ty):
    s = den(term, ty)
    assert is_total(s)
    assert s.arena == interp_arena(F(ty))


def test_mu_rigidity_tracks_instantiation_mirroring():
    # the identity and the eta-expanded instantiator replay the previous
    # instantiation verbatim; a literal witness breaks clause three
    assert is_mu_rigid(den("Lam x. lam a. a{x}",
                           "forall x. ((forall y. X(y)) -> X(x))"))
    assert not is_mu_rigid(den("lam a. a{c()}", "(forall x. X(x)) -> X(c())"))
