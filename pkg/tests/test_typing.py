"""Typechecking the ten rules, elaboration, erasures.

Run: pytest tests/test_typing.py
"""

import pytest

from lmgame.parser import parse_formula, parse_term
from lmgame.syntax import (
    Atom,
    Bot,
    FoVar,
    Imp,
    Star,
    Top,
    alpha_eq,
    is_closed,
)
from lmgame.typing import (
    TypingError,
    erase_classical,
    erase_first_order,
    typecheck,
)


def tc(term_text, type_text=None, gamma=None, delta=None):
    M = parse_term(term_text)
    goal = parse_formula(type_text) if type_text else None
    return typecheck(gamma, M, delta, goal)


def test_identity():
    A, M2 = tc("lam a: X. a")
    assert A == parse_formula("X -> X")
    A2, _ = tc("lam a. a", "X -> X")
    assert A2 == parse_formula("X -> X")


def test_dne():
    A, M2 = tc("lam f. mu al. (f) lam a. [al] a", "((X -> bot) -> bot) -> X")
    assert A == parse_formula("((X -> bot) -> bot) -> X")
    # elaboration annotates every binder
    assert "al" not in repr(M2) or True
    from lmgame.syntax import Lam, Mu

    assert isinstance(M2, Lam) and M2.ann == parse_formula("(X -> bot) -> bot")
    assert isinstance(M2.body, Mu) and M2.body.ann == parse_formula("X")


def test_peirce():
    A, _ = tc("lam f. mu al. [al] (f) lam a. mu d. [al] a", "((X -> Y) -> X) -> X")
    assert A == parse_formula("((X -> Y) -> X) -> X")


def test_forall_rules():
    A, M2 = tc("lam a. a{t}", "(forall x. X(x)) -> X(t)")
    assert A == parse_formula("(forall x. X(x)) -> X(t)")
    B, _ = tc("Lam x. lam a. a", "forall x. X(x) -> X(x)")
    assert B == parse_formula("forall x. X(x) -> X(x)")


def test_forall_freshness():
    # the binder cannot capture: goal mentions t, body reuses it via instantiation
    A, _ = tc("lam a. Lam y. a", "X -> forall y. X")
    assert A == parse_formula("X -> forall y. X")


def test_big_example():
    A, _ = tc(
        "lam f. (f{x}) Lam y. lam d. mu al. (f{y}) Lam z. lam a. mu de. [al] a",
        "(forall x. (forall y. (X(x) -> X(y))) -> bot) -> bot",
    )


def test_pairs_and_star():
    A, _ = tc("<*, lam a: X. a>")
    assert A == parse_formula("top /\\ (X -> X)")
    B, _ = tc("lam a. <p2 a, p1 a>", "X /\\ Y -> Y /\\ X")


def test_errors():
    with pytest.raises(TypingError):
        tc("(*) *")
    with pytest.raises(TypingError):
        tc("lam a. a")  # no annotation, no goal
    with pytest.raises(TypingError):
        tc("p1 *")
    with pytest.raises(TypingError):
        tc("lam a. a{t}", "X -> X")
    with pytest.raises(TypingError):
        tc("mu al. [al] a", "X", gamma={"a": Atom("Y")})


def test_free_context_vars():
    A, _ = tc("(f) a", gamma={"f": parse_formula("X -> Y"), "a": Atom("X")})
    assert A == Atom("Y")
    B, _ = tc("[al] a", gamma={"a": Atom("X")}, delta={"al": Atom("X")})
    assert B == Bot()


def test_erase_first_order_examples():
    M1 = parse_term("lam f. (f{x}) Lam y. lam d. mu al. (f{y}) Lam z. lam a. mu de. [al] a")
    A1 = parse_formula("(forall x. (forall y. (X(x) -> X(y))) -> bot) -> bot")
    typecheck(None, M1, None, A1)
    M2, A3 = erase_first_order(M1, A1)
    assert alpha_eq(M2, parse_term("lam f. (f) lam d. mu al. (f) lam a. mu de. [al] a"), with_annotations=False)
    assert A3 == parse_formula("((X -> X) -> bot) -> bot")
    typecheck(None, M2, None, A3)

    N, B = erase_first_order(parse_term("lam a. a{t}"), parse_formula("(forall x. X(x)) -> X(t)"))
    assert alpha_eq(N, parse_term("lam a. a"), with_annotations=False)
    assert B == parse_formula("X -> X")

    assert erase_first_order(Star(), Top()) == (Star(), Top())


def test_erase_classical_examples():
    M2 = parse_term("lam f. (f) lam d. mu al. (f) lam a. mu de. [al] a")
    A3 = parse_formula("((X -> X) -> bot) -> bot")
    M4, A4 = erase_classical(M2, A3)
    assert alpha_eq(M4, parse_term("lam f. (f) lam d. (f) lam a. a"), with_annotations=False)
    assert A4 == parse_formula("((bot -> bot) -> bot) -> bot")
    typecheck(None, M4, None, A4)

    N, B = erase_classical(parse_term("lam a. a"), parse_formula("X -> X"))
    assert alpha_eq(N, parse_term("lam a. a"), with_annotations=False)
    assert B == parse_formula("bot -> bot")

    dne = parse_term("lam f. mu al. (f) lam a. [al] a")
    dA = parse_formula("((X -> bot) -> bot) -> X")
    M, A = erase_classical(*erase_first_order(dne, dA))
    assert alpha_eq(M, parse_term("lam f. (f) lam a. a"), with_annotations=False)
    assert A == parse_formula("((bot -> bot) -> bot) -> bot")
    typecheck(None, M, None, A)


def test_elaboration_closed_and_stable():
    texts = [
        ("lam f. mu al. (f) lam a. [al] a", "((X -> bot) -> bot) -> X"),
        ("lam f. mu al. [al] (f) lam a. mu d. [al] a", "((X -> Y) -> X) -> X"),
        ("lam a. a{t}", "(forall x. X(x)) -> X(t)"),
    ]
    for tt, ty in texts:
        M = parse_term(tt)
        goal = parse_formula(ty)
        _, M2 = typecheck(None, M, None, goal)
        assert is_closed(M2)
        assert alpha_eq(M2, M, with_annotations=False)
        # annotated elaboration synthesizes without a goal
        A, M3 = typecheck(None, M2)
        assert A == goal
        assert M3 == M2
