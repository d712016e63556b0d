"""Krivine machine: steps, protocol runs, UVA games, play extraction.

The machine is checked three ways: pinned single steps and whole traces,
per-step embedding of states into lambda-mu terms with beta-mu-rho
reachability, and the game reading, where exhaustive Opponent choice trees
must rebuild exactly the denotation's view tree.  UVA trails recorded
along protocol runs are replayed through the transition function and must
reach a final position, which is the term-implemented half of the
provability theorem.
"""

import pytest
from hypothesis import given, settings, strategies as st

from lmgame.canon import conjuncts, is_canonical
from lmgame.denote import denote
from lmgame.kam import (
    FUEL,
    KamState,
    KamStuck,
    MachineRun,
    OutOfFuel,
    Stack,
    Stopped,
    UvaMove,
    UvaPosition,
    extract_play,
    instantiate_prime,
    kam_run,
    kam_step,
    pp_stack,
    pp_state,
    split_stack,
    state_to_term,
    uva_initial,
    uva_transition,
)
from lmgame.normal import _bmr_rule, _descend
from lmgame.plays import MoveOcc, is_view
from lmgame.syntax import (
    App,
    FoBound,
    FoLam,
    Fn,
    FoVar,
    Inst,
    Lam,
    Mu,
    MuCtx,
    Named,
    Pair,
    Proj,
    Star,
    Var,
    gensym,
    mu_subst,
    open_mu,
    strip_annotations,
    subterms,
)
from lmgame.typing import TypingError, erase_first_order, typecheck

from corpus import CLASSICAL, CLASSICAL_TY, CNF_CORPUS, GENERAL_CORPUS, F, T

DNE = "lam f. mu al. (f) (lam a. [al] a)"
DNE_TY = "((Y -> bot) -> bot) -> Y"


def _machine_corpus():
    """Corpus entries the protocol covers: one canonical component, no products."""
    out = []
    for src, ty in CNF_CORPUS + GENERAL_CORPUS:
        M, A = T(src), F(ty)
        if not is_canonical(A) or len(conjuncts(A)) != 1:
            continue
        if any(isinstance(s, (Pair, Proj, Star)) for s in subterms(M)):
            continue
        out.append((src, ty))
    return out


MACHINE_CORPUS = _machine_corpus()


def _trace(state, fuel=FUEL):
    states = [state]
    for _ in range(fuel):
        nxt = kam_step(states[-1])
        if nxt is None:
            return states
        states.append(nxt)
    raise RuntimeError("trace fuel exhausted")


def _branches(src, ty):
    """All complete protocol plays of a term, by exhaustive Opponent choices."""
    out = []

    def go(choices):
        run = MachineRun(T(src), F(ty))
        run.start()
        run.p_reply()
        for j in choices:
            run.o_move(j)
            run.p_reply()
        k = run.o_options()
        if k == 0:
            out.append((tuple(run.play), run, choices))
            return
        for j in range(1, k + 1):
            go(choices + [j])

    go([])
    return out


### single steps


def test_application_pushes_and_lambda_pops():
    f, a, b = T("lam a. lam b. a"), Var("p"), Var("q")
    s = KamState(App(App(f, a), b), Stack())
    s1 = kam_step(s)
    assert s1 == KamState(App(f, a), Stack((b,)))
    s2 = kam_step(s1)
    assert s2 == KamState(f, Stack((a, b)))
    s3 = kam_step(s2)
    assert s3 == KamState(Lam("b", None, Var("p")), Stack((b,)))
    assert kam_step(s3) == KamState(Var("p"), Stack())
    assert kam_step(KamState(Var("p"), Stack())) is None


def test_instantiation_pushes_and_folam_pops():
    t = Fn("c", ())
    M = T("Lam x. lam a. a{x}")
    s = KamState(Inst(M, t), Stack((), "al"))
    s1 = kam_step(s)
    assert s1 == KamState(M, Stack((t,), "al"))
    s2 = kam_step(s1)
    assert s2 == KamState(Lam("a", None, Inst(Var(0), t)), Stack((), "al"))


def test_mu_captures_the_stack():
    M = T("mu k. [k] lam a. a")
    ident = T("lam a. a")
    s = KamState(M, Stack((Var("b"),), "al"))
    s1 = kam_step(s)
    assert s1 == KamState(Named("al", App(ident, Var("b"))), Stack())
    # the eps tail drops the naming instead
    s2 = kam_step(KamState(M, Stack((Var("b"),), None)))
    assert s2 == KamState(App(ident, Var("b")), Stack())


def test_naming_restores_the_tail():
    s = KamState(Named("al", Var("b")), Stack())
    assert kam_step(s) == KamState(Var("b"), Stack((), "al"))
    # only on the empty stack
    assert kam_step(KamState(Named("al", Var("b")), Stack((Var("c"),)))) is None
    assert kam_step(KamState(Named("al", Var("b")), Stack((), "bt"))) is None


def test_run_stops_at_a_head_variable():
    out = kam_run(KamState(T("lam a. a"), Stack((Var("b"),))))
    assert out == Stopped("b", Stack())


def test_run_out_of_fuel_and_stuck():
    omega = T("(lam a. (a) a) (lam a. (a) a)")
    out = kam_run(KamState(omega, Stack()), fuel=50)
    assert isinstance(out, OutOfFuel)
    with pytest.raises(KamStuck):
        kam_run(KamState(Star(), Stack()))
    with pytest.raises(KamStuck):
        kam_run(KamState(T("lam a. a"), Stack()))  # nothing to pop
    with pytest.raises(KamStuck):
        kam_run(KamState(T("lam a. a"), Stack((Fn("c", ()),))))  # fo head for a lam


def test_step_determinism_is_rule_exclusive():
    def applicable(s):
        rules = [
            isinstance(s.code, App),
            isinstance(s.code, Inst),
            isinstance(s.code, Lam)
            and bool(s.stack.entries)
            and not isinstance(s.stack.entries[0], (FoBound, FoVar, Fn)),
            isinstance(s.code, FoLam)
            and bool(s.stack.entries)
            and isinstance(s.stack.entries[0], (FoBound, FoVar, Fn)),
            isinstance(s.code, Mu),
            isinstance(s.code, Named) and s.stack == Stack(),
        ]
        return sum(rules)

    for src, ty in MACHINE_CORPUS:
        run = MachineRun(T(src), F(ty))
        run.start()
        while True:
            for s in _trace(run.pending):
                n = applicable(s)
                assert n <= 1
                assert (n == 0) == (kam_step(s) is None)
            run.p_reply()
            if run.o_options() == 0:
                break
            run.o_move(1)


### the state embedding


def _step_relation(s, s2):
    """How one machine step reads under the lambda-mu embedding."""
    e, e2 = state_to_term(s), state_to_term(s2)
    match s.code:
        case App(_, _) | Inst(_, _) | Named(_, _):
            return e == e2
        case Lam(_, _, _) | FoLam(_, _):
            hit = _descend(e, _bmr_rule)
            return hit is not None and hit[0] == "beta" and hit[1] == e2
        case Mu(_, _, _):
            cur = e
            for _ in range(len(s.stack.entries)):
                hit = _descend(cur, _bmr_rule)
                if hit is None or hit[0] != "mu":
                    return False
                cur = hit[1]
            if s.stack.tail is not None:
                hit = _descend(cur, _bmr_rule)
                return hit is not None and hit[0] == "rho" and hit[1] == e2
            # the eps tail erases the namings of the captured mu-variable
            if not isinstance(cur, Mu):
                return False
            g = gensym("_emb")
            return mu_subst(open_mu(cur.body, g), MuCtx((), None), g) == e2
    return False


def test_state_to_term():
    s = KamState(Var("f"), Stack((Var("b"), Fn("c", ())), "al"))
    assert state_to_term(s) == Named("al", Inst(App(Var("f"), Var("b")), Fn("c", ())))
    assert state_to_term(KamState(Var("f"), Stack())) == Var("f")


def test_protocol_steps_embed_into_beta_mu_rho():
    extra = [
        ("lam b. (mu k: bot -> bot. [k] lam a. a) b", "bot -> bot"),  # eps-tail mu
        ("lam b. (mu k: Y -> Y. [k] lam a. a) b", "Y -> Y"),  # applied mu, named tail
    ]
    for src, ty in MACHINE_CORPUS + extra:
        run = MachineRun(T(src), F(ty))
        run.start()
        while True:
            states = _trace(run.pending)
            for a, b in zip(states, states[1:]):
                assert _step_relation(a, b), (src, pp_state(a), pp_state(b))
            run.p_reply()
            if run.o_options() == 0:
                break
            run.o_move(1)


### protocol runs


def test_dne_protocol_stops_at_the_function_head():
    run = MachineRun(T(DNE), F(DNE_TY))
    run.start()
    out = kam_run(run.pending)
    assert isinstance(out, Stopped) and out.head == "a1_1"
    fo, args, tail = split_stack(out.stack)
    assert fo == () and tail is None and len(args) == 1
    assert strip_annotations(args[0]) == T("lam a. [al1] a")
    run.p_reply()
    run.o_move(1)
    out2 = kam_run(run.pending)
    assert out2 == Stopped("a2_1", Stack((), "al1"))


def test_trace_rendering():
    run = MachineRun(T("lam a. a{c()}"), F("(forall x. X(x)) -> X(c())"))
    run.start()
    lines = [pp_state(s) for s in _trace(run.pending)]
    assert lines == [
        "lam a. a{c()} |> a1_1.al1",
        "a1_1{c()} |> al1",
        "a1_1 |> c().al1",
    ]
    assert pp_stack(Stack((T("lam a. a"), Var("b"), Fn("c", ())))) == "(lam a. a).b.c().eps"


def test_split_stack_rejects_interleavings():
    with pytest.raises(ValueError):
        split_stack(Stack((Var("b"), Fn("c", ()), Var("d"), Fn("c", ())), None))


def test_protocol_variables_are_fresh_per_trace():
    run = MachineRun(T(CLASSICAL), F(CLASSICAL_TY))
    run.start()
    seen = set()
    while True:
        names = {e.ref for e in run.pending.stack.entries if isinstance(e, Var)}
        if run.pending.stack.tail is not None:
            names.add(run.pending.stack.tail)
        assert not names & seen
        seen |= names
        run.p_reply()
        if run.o_options() == 0:
            break
        run.o_move(1)
    # round 1 ends in bot, so it grants no mu-name
    assert seen == {"a1_1", "a2_1", "al2", "a3_1", "al3"}


def test_machine_run_guards():
    run = MachineRun(T(DNE), F(DNE_TY))
    with pytest.raises(ValueError):
        run.o_move(1)
    with pytest.raises(ValueError):
        run.p_reply()
    run.start()
    with pytest.raises(ValueError):
        run.start()
    run.p_reply()
    with pytest.raises(ValueError):
        run.o_move(2)
    run.o_move(1)
    run.p_reply()
    assert run.status == "done"
    with pytest.raises(ValueError):
        run.o_move(1)


### play extraction


def test_extract_play_of_dne():
    v = extract_play(T(DNE), F(DNE_TY), [1])
    assert v == (
        MoveOcc(0, None, (None,), ()),
        MoveOcc(1, 0, (), ()),
        MoveOcc(2, 1, (), ()),
        MoveOcc(3, 2, ((0, 0),), ()),
    )
    sigma = denote(T(DNE), F(DNE_TY))
    assert v in sigma.maximal_views()


def test_extract_play_two_move_example():
    M, A = T("lam a. a{c()}"), F("(forall x. X(x)) -> X(c())")
    v = extract_play(M, A, [])
    assert v == (
        MoveOcc(0, None, (None,), ()),
        MoveOcc(1, 0, ((0, 0),), (Fn("c", ()),)),
    )
    assert v in denote(M, A).views


def test_extract_play_of_the_classical_term():
    M, A = T(CLASSICAL), F(CLASSICAL_TY)
    v = extract_play(M, A, [1, 1])
    o0, o1 = FoVar("O", "o0"), FoVar("O", "o1")
    assert v == (
        MoveOcc(0, None, (), ()),
        MoveOcc(1, 0, (), (FoVar("P", "x"),)),
        MoveOcc(2, 1, (None,), (o0,)),
        MoveOcc(1, 0, (), (o0,)),
        MoveOcc(2, 3, (None,), (o1,)),
        MoveOcc(3, 4, ((2, 0),), ()),
    )
    assert is_view(denote(M, A).arena, v)
    assert v in denote(M, A).maximal_views()


def test_extraction_matches_the_denotation_everywhere():
    for src, ty in MACHINE_CORPUS:
        sigma = denote(T(src), F(ty))
        branches = _branches(src, ty)
        closed = set()
        for v, run, choices in branches:
            assert is_view(run.arena, v)
            assert v in sigma.maximal_views()
            assert v == extract_play(T(src), F(ty), choices)
            closed |= {v[:i] for i in range(0, len(v) + 1, 2)}
        assert closed == sigma.views, (src, ty)


def test_extract_play_choice_validation():
    M, A = T(DNE), F(DNE_TY)
    assert extract_play(M, A, [(1, 0)]) == extract_play(M, A, [1])
    with pytest.raises(ValueError):
        extract_play(M, A, [(1, 2)])  # the move introduces no fresh variables
    with pytest.raises(ValueError):
        extract_play(M, A, [2])
    with pytest.raises(ValueError):
        extract_play(M, A, [1, 1])  # the play is over after the second stop


def test_extract_play_input_validation():
    with pytest.raises(ValueError):
        extract_play(T("lam a. a"), F("Y -> (Y /\\ Y)"), [])  # not canonical
    with pytest.raises(ValueError):
        extract_play(T("<lam a. a, lam a. a>"), F("(Y -> Y) /\\ (Y -> Y)"), [])
    with pytest.raises(ValueError):
        extract_play(T("lam a. p1 <a, a>"), F("Y -> Y"), [])  # out of the fragment
    with pytest.raises(TypingError):
        extract_play(T("lam a. b"), F("Y -> Y"), [])
    with pytest.raises(TypingError):
        extract_play(T(DNE), F("Y -> Y"), [])


def test_curry_erasure_runs_the_propositional_protocol():
    M, A = typecheck({}, T(CLASSICAL), {}, F(CLASSICAL_TY))[1], F(CLASSICAL_TY)
    M2, A2 = erase_first_order(M, A)
    assert strip_annotations(M2) == T(
        "lam f. (f) (lam d. mu al. (f) (lam a. mu de. [al] a))"
    )
    assert is_canonical(A2)
    v = extract_play(M2, A2, [1, 1])
    assert [m.node for m in v] == [0, 1, 2, 1, 2, 3]
    assert all(m.inst == () for m in v)
    sigma = denote(M2, A2)
    assert v in sigma.maximal_views()


### UVA positions and moves


def test_uva_initial_positions():
    A = F("((Y -> Z) -> Y) -> Y")
    p = uva_initial(A)
    assert p == UvaPosition(V=frozenset([A]))
    assert p.initial and not p.final
    q = uva_initial(F("Y -> (Z /\\ Y)"))
    assert q.V == {F("Y -> Z"), F("Y -> Y")}
    assert uva_initial(F("top")).final


def test_uva_transition_grant_and_spend():
    YY = F("Y -> Y")
    p0 = uva_initial(YY)
    p1 = uva_transition(p0, UvaMove("O", YY))
    assert p1 == UvaPosition(U=frozenset([F("Y")]), V=frozenset([YY]), A=frozenset([F("Y")]))
    p2 = uva_transition(p1, UvaMove("P", F("Y")))
    assert p2.final
    assert p2 == UvaPosition(U=p1.U, V=frozenset(), A=p1.A)


def test_uva_transition_first_order():
    A = F("forall x. (X(x) -> X(x))")
    p0 = uva_initial(A)
    t = Fn("c", ())
    p1 = uva_transition(p0, UvaMove("O", A, (t,)))
    assert p1.U == {F("X(c())")}
    assert p1.A == {F("X(c())")}
    p2 = uva_transition(p1, UvaMove("P", F("X(c())")))
    assert p2.final
    # the successor shape is a dead end: the granted atom can never be spent
    B = F("forall x. (X(x) -> X(h(x)))")
    q = uva_transition(uva_initial(B), UvaMove("O", B, (t,)))
    assert q.U == {F("X(c())")} and q.A == {F("X(h(c()))")}
    with pytest.raises(ValueError):
        uva_transition(q, UvaMove("P", F("X(c())")))


def test_uva_illegal_moves():
    YY = F("Y -> Y")
    p0 = uva_initial(YY)
    with pytest.raises(ValueError):
        uva_transition(p0, UvaMove("O", F("Z -> Z")))  # not a goal
    with pytest.raises(ValueError):
        uva_transition(p0, UvaMove("P", F("Y")))  # nothing granted yet
    p1 = uva_transition(p0, UvaMove("O", YY))
    with pytest.raises(ValueError):
        uva_transition(p1, UvaMove("P", F("Y -> Y")))  # not a hypothesis
    bad = UvaPosition(U=frozenset([F("Z")]), V=frozenset([YY]), A=frozenset([F("Y")]))
    with pytest.raises(ValueError):
        uva_transition(bad, UvaMove("P", F("Z")))  # final atom not granted
    with pytest.raises(ValueError):
        uva_transition(p0, UvaMove("O", YY, (Fn("c", ()),)))  # arity
    with pytest.raises(ValueError):
        uva_transition(p0, UvaMove("X", YY))


def test_bot_ended_moves_grant_nothing():
    A = F("(Y -> bot) -> bot")
    p1 = uva_transition(uva_initial(A), UvaMove("O", A))
    assert p1.A == frozenset()
    assert p1.U == {F("Y -> bot")}
    # Player may spend a bot-ended hypothesis without any grant
    p2 = uva_transition(p1, UvaMove("P", F("Y -> bot")))
    assert p2.V == {F("Y")}


def test_instantiate_prime():
    A = F("forall x. (X(x) -> (forall y. X(y)) -> X(h(x)))")
    prems, final = instantiate_prime(A, (Fn("c", ()),))
    assert prems == [F("X(c())"), F("forall y. X(y)")]
    assert final == F("X(h(c()))")
    with pytest.raises(ValueError):
        instantiate_prime(A, ())


### term-implemented winning strategies


def test_uva_trails_are_winning_across_the_corpus():
    for src, ty in MACHINE_CORPUS:
        for _v, run, _choices in _branches(src, ty):
            pos = uva_initial(F(ty))
            assert pos.initial
            for i, mv in enumerate(run.uva_moves):
                assert mv.player == ("O" if i % 2 == 0 else "P")
                pos = uva_transition(pos, mv)
            assert pos.final, (src, ty)


def test_uva_play_accepts_arbitrary_opponent_terms():
    run = MachineRun(T(CLASSICAL), F(CLASSICAL_TY))
    run.start()
    run.p_reply()
    run.o_move(1, terms=(Fn("h", (Fn("c", ()),)),))
    run.p_reply()
    while run.o_options():
        run.o_move(1)
        run.p_reply()
    assert not is_view(run.arena, tuple(run.play))  # not the canonical enumeration
    pos = uva_initial(F(CLASSICAL_TY))
    for mv in run.uva_moves:
        pos = uva_transition(pos, mv)
    assert pos.final


### machine totality on arbitrary code


def _codes():
    leaf = st.sampled_from([Var("a"), Var("b"), Star()])
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(lambda b: Lam("x", None, b), sub),
            st.builds(App, sub, sub),
            st.builds(lambda b: Mu("k", None, b), sub),
            st.builds(lambda b: Named("al", b), sub),
            st.builds(lambda l, r: Pair(l, r), sub, sub),
        ),
        max_leaves=12,
    )


@given(_codes(), st.integers(min_value=0, max_value=40))
@settings(max_examples=120, deadline=None)
def test_run_is_total_and_deterministic(code, fuel):
    s = KamState(code, Stack((Var("s0"),), "al"))
    try:
        first = kam_run(s, fuel=fuel)
    except KamStuck:
        first = "stuck"
    try:
        second = kam_run(s, fuel=fuel)
    except KamStuck:
        second = "stuck"
    assert first == second
