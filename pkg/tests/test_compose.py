"""Interaction machine: identity laws, isomorphism round trips, erasure."""

import pytest

from lmgame.arena import a_graft, find_arena_iso, gr, interp_arena
from lmgame.parser import parse_formula
from lmgame.strategy import (
    ViewFunction,
    copycat_iso,
    gr_erase_vf,
    identity,
    is_mu_rigid,
    is_total,
)
from lmgame.compose import compose
from lmgame.syntax import Signature

SIG = Signature(functions=(("f", 1), ("c", 0)), relations=(("X", 1), ("Y", 0)))

BOT = interp_arena(parse_formula("bot", SIG))
Y = interp_arena(parse_formula("Y -> bot", SIG))
B = interp_arena(
    parse_formula(
        "forall x. (X(f(x)) -> bot) -> (forall y. forall z. ((X(f(z)) -> bot) -> X(y))) -> bot",
        SIG,
    )
)
A1 = interp_arena(parse_formula("X(c) /\\ Y", SIG))
A2 = interp_arena(parse_formula("Y /\\ X(c)", SIG))


def swap_pair():
    fwd = copycat_iso(A1, A2, find_arena_iso(A1, A2))
    bwd = copycat_iso(A2, A1, find_arena_iso(A2, A1))
    return fwd, bwd


@pytest.mark.parametrize("A", [BOT, Y, B, A1], ids=["bot", "arrow", "quant", "pair"])
def test_identity_absorbs_identity(A):
    assert compose(A, A, A, identity(A), identity(A)) == identity(A)


def test_identity_left_right():
    fwd, bwd = swap_pair()
    assert compose(A1, A1, A2, identity(A1), fwd) == fwd
    assert compose(A1, A2, A2, fwd, identity(A2)) == fwd
    assert compose(A2, A2, A1, identity(A2), bwd) == bwd


def test_iso_round_trip_is_identity():
    fwd, bwd = swap_pair()
    assert compose(A1, A2, A1, fwd, bwd) == identity(A1)
    assert compose(A2, A1, A2, bwd, fwd) == identity(A2)


def test_associativity():
    fwd, bwd = swap_pair()
    left = compose(A1, A1, A2, compose(A1, A2, A1, fwd, bwd), fwd)
    right = compose(A1, A2, A2, fwd, compose(A2, A1, A2, bwd, fwd))
    assert left == right == fwd


def test_mu_rigid_closure_and_totality():
    fwd, bwd = swap_pair()
    comp = compose(A1, A2, A1, fwd, bwd)
    assert is_mu_rigid(comp) and is_total(comp)


def test_gr_preserved():
    fwd, bwd = swap_pair()
    comp = compose(A1, A2, A1, fwd, bwd)
    ground = compose(gr(A1), gr(A2), gr(A1), gr_erase_vf(fwd), gr_erase_vf(bwd))
    assert gr_erase_vf(comp) == ground


def test_silent_partner_kills_branch():
    arrow = a_graft(A1, A1)[0]
    empty = ViewFunction(arrow, [()])
    comp = compose(A1, A1, A1, empty, identity(A1))
    assert comp.views == frozenset({()})
    comp2 = compose(A1, A1, A1, identity(A1), empty)
    assert comp2.views == frozenset({()})


def test_arena_mismatch_rejected():
    with pytest.raises(ValueError):
        compose(A1, A2, A1, identity(A1), identity(A1))
