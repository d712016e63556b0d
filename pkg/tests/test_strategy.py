"""View functions: identity copycat, classification, view closure."""

import pytest

from lmgame.arena import a_graft, gr, interp_arena
from lmgame.parser import parse_formula
from lmgame.plays import MoveOcc, check_play, o_rename, view_of
from lmgame.strategy import (
    ViewFunction,
    classify,
    gr_erase_vf,
    identity,
    is_linear,
    is_mu_rigid,
    is_total,
    materialize,
    respond_in_play,
    view_closure,
    view_o_extensions,
)
from lmgame.syntax import Signature, ovar

SIG = Signature(functions=(("f", 1), ("c", 0)), relations=(("X", 1), ("Y", 0)))

BOT = interp_arena(parse_formula("bot", SIG))
Y = interp_arena(parse_formula("Y", SIG))
B = interp_arena(
    parse_formula(
        "forall x. (X(f(x)) -> bot) -> (forall y. forall z. ((X(f(z)) -> bot) -> X(y))) -> bot",
        SIG,
    )
)


def test_identity_on_unit():
    sigma = identity(BOT)
    # views: empty and the single copy pair
    assert len(sigma.views) == 2
    (v,) = [w for w in sigma.views if w]
    assert [m.node for m in v] == [0, 1]
    assert v[1].justifier == 0 and v[1].mu == () and v[1].inst == ()


def test_identity_total_mu_rigid():
    sigma = identity(B)
    info = classify(sigma)
    assert info.mu_rigid and info.total
    assert info.size == sigma.size() > 0
    arrow, fmap, tmap = a_graft(B, B)
    assert sigma.arena == arrow
    assert is_linear(sigma, frozenset(fmap.values()))


def test_identity_views_copy_instantiations():
    sigma = identity(B)
    arrow, fmap, tmap = a_graft(B, B)
    for v in sigma.views:
        for i in range(1, len(v), 2):
            assert v[i].inst == v[i - 1].inst
            assert v[i].mu == tuple((i - 1, k) for k in range(len(v[i].mu)))


def test_identity_gr_commutes():
    assert gr_erase_vf(identity(B)) == identity(gr(B))


def test_view_closure_identity_projections():
    sigma = identity(BOT)
    plays = view_closure(sigma, bound=8)
    arrow, fmap, tmap = a_graft(BOT, BOT)
    cod_of = {v: k for k, v in tmap.items()}
    dom_of = {v: k[0] for k, v in fmap.items()}
    assert () in plays
    assert len(plays) > 1
    for s in plays:
        assert check_play(arrow, s).kind == "Play"
        left = [dom_of[m.node] for m in s if m.node in dom_of]
        right = [cod_of[m.node] for m in s if m.node in cod_of]
        assert left == right  # copycat: projections agree move for move


def test_view_closure_bound():
    sigma = identity(BOT)
    assert view_closure(sigma, bound=0) == {()}
    assert len(view_closure(sigma, bound=2)) == 2


def test_respond_uniformity():
    sigma = identity(B)
    arrow, fmap, tmap = a_graft(B, B)
    m = MoveOcc(tmap[0], None, (), (ovar(5),))
    r = respond_in_play(sigma, (), m)
    assert r is not None and r.inst == (ovar(5),)
    # renaming the O-move renames the response
    m2 = o_rename((m,), {"o5": "o2"})[0]
    r2 = respond_in_play(sigma, (), m2)
    assert r2.inst == (ovar(2),)


def test_total_fails_on_empty():
    empty = ViewFunction(B, [()])
    assert not is_total(empty)
    info = classify(empty)
    assert not info.total and info.mu_rigid  # vacuously rigid
    assert info.size == 0


def test_nondeterminism_rejected():
    arrow, fmap, tmap = a_graft(BOT, BOT)
    m = MoveOcc(tmap[0], None, (), ())
    a = m, MoveOcc(fmap[(0, 0)], 0, (), ())
    with pytest.raises(ValueError):
        ViewFunction(arrow, [a, (m, MoveOcc(tmap[0], 0, (), ()))])


def test_view_o_extensions():
    exts = view_o_extensions(B, ())
    assert [m.node for m in exts] == [0]
    assert exts[0].inst == (ovar(0),)
    v = (
        MoveOcc(0, None, (), (ovar(0),)),
        MoveOcc(1, 0, (), ()),
    )
    exts2 = view_o_extensions(B, v)
    assert [m.node for m in exts2] == [2]
    assert exts2[0].justifier == 1


def test_materialize_depthation():
    # respond only to the first branch: partial strategy
    def respond(v, m):
        if m.node == 0:
            return MoveOcc(1, len(v), (), ())
        return None

    sigma = materialize(B, respond)
    assert not is_total(sigma)
    assert any(len(v) == 2 for v in sigma.views)
