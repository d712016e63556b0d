"""Krivine abstract machine for lambda-mu terms and its game reading.

A state pairs a code term with a stack; the stack holds term and
first-order entries and ends in either the empty tail or a mu-variable.
Application and instantiation push, lambdas pop, a mu captures the whole
stack as a context substituted for its namings, and a naming on the empty
stack restores the named tail.  Execution stops on a head variable.

Running a closed term of canonical type against the protocol stack
t1...tn'.a1...an.alpha (the a's fresh variables standing for the premises,
alpha for the final atom, epsilon when it is bot) makes the machine an
engine for two games.  Each stop is a Player move: the head variable says
which arena node is played, the first-order entries give the
instantiation, the tail points back to the move that introduced it.  Each
restart, picking one of the term entries, is an Opponent move one node
down.  With Opponent instantiating by the enumeration (o_i) the recorded
sequence is a view, and the view set over all choices is the term's
denotation.  Reading formulas instead of nodes gives the UVA provability
game: positions are triples (U, V, A) of hypotheses, goals and granted
atoms, Opponent moves grant, Player moves spend.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import Arena, arena_of
from .canon import arrow_decompose, canonicalize, conjuncts, is_canonical
from .parser import pp_formula, pp_fo_term, pp_term
from .plays import MoveOcc, Play, is_view
from .syntax import (
    App,
    Bot,
    Fn,
    FoBound,
    FoLam,
    Formula,
    FoTerm,
    FoVar,
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
    Var,
    formula_open,
    gensym,
    mu_subst,
    open_fo,
    open_lam,
    open_mu,
    subterms,
)
from .typing import typecheck

FUEL = 20000

_FO = (FoBound, FoVar, Fn)


### states and steps


@dataclass(frozen=True)
class Stack:
    """pi ::= eps | alpha | M.pi | t.pi, as entries plus an optional tail."""

    entries: tuple[LmTerm | FoTerm, ...] = ()
    tail: str | None = None

    def push(self, e: LmTerm | FoTerm) -> "Stack":
        return Stack((e,) + self.entries, self.tail)

    def pop(self) -> "Stack":
        return Stack(self.entries[1:], self.tail)


@dataclass(frozen=True)
class KamState:
    code: LmTerm
    stack: Stack


@dataclass(frozen=True)
class Stopped:
    head: str
    stack: Stack


@dataclass(frozen=True)
class OutOfFuel:
    last: KamState


class KamStuck(ValueError):
    """No rule applies and the head is not a variable."""


def kam_step(s: KamState) -> KamState | None:
    """One machine step, or None when no rule applies."""
    pi = s.stack
    match s.code:
        case App(f, a):
            return KamState(f, pi.push(a))
        case Inst(b, t):
            return KamState(b, pi.push(t))
        case Lam(_, _, b) if pi.entries and not isinstance(pi.entries[0], _FO):
            return KamState(open_lam(b, pi.entries[0]), pi.pop())
        case FoLam(_, b) if pi.entries and isinstance(pi.entries[0], _FO):
            return KamState(open_fo(b, pi.entries[0]), pi.pop())
        case Mu(_, _, b):
            al = gensym("_kam")
            items = tuple(
                ("inst", e) if isinstance(e, _FO) else ("app", e) for e in pi.entries
            )
            return KamState(mu_subst(open_mu(b, al), MuCtx(items, pi.tail), al), Stack())
        case Named(ref, b) if isinstance(ref, str) and pi == Stack():
            return KamState(b, Stack((), ref))
    return None


def kam_run(s: KamState, fuel: int = FUEL) -> Stopped | OutOfFuel:
    """Iterate kam_step to a head variable; raises KamStuck off the rules."""
    cur = s
    left = fuel
    while True:
        nxt = kam_step(cur)
        if nxt is None:
            match cur.code:
                case Var(ref) if isinstance(ref, str):
                    return Stopped(ref, cur.stack)
            raise KamStuck(
                f"machine stuck at a non-variable head: {pp_term(cur.code, annotations=False)}"
            )
        if left <= 0:
            return OutOfFuel(cur)
        left -= 1
        cur = nxt


def state_to_term(s: KamState) -> LmTerm:
    """Lambda-mu reading of a state: M |> M1...Mk.al is [al](M)M1...Mk."""
    out = s.code
    for e in s.stack.entries:
        out = Inst(out, e) if isinstance(e, _FO) else App(out, e)
    if s.stack.tail is not None:
        out = Named(s.stack.tail, out)
    return out


def split_stack(pi: Stack) -> tuple[tuple[FoTerm, ...], tuple[LmTerm, ...], str | None]:
    """Leading first-order entries, term entries, tail; rejects interleavings."""
    k = 0
    while k < len(pi.entries) and isinstance(pi.entries[k], _FO):
        k += 1
    rest = pi.entries[k:]
    if any(isinstance(e, _FO) for e in rest):
        raise ValueError("first-order stack entries interleaved with term entries")
    return pi.entries[:k], rest, pi.tail  # type: ignore[return-value]


def pp_stack(pi: Stack) -> str:
    parts = []
    for e in pi.entries:
        if isinstance(e, _FO):
            parts.append(pp_fo_term(e))
        else:
            s = pp_term(e, annotations=False)
            parts.append(f"({s})" if " " in s else s)
    parts.append("eps" if pi.tail is None else pi.tail)
    return ".".join(parts)


def pp_state(s: KamState) -> str:
    return f"{pp_term(s.code, annotations=False)} |> {pp_stack(s.stack)}"


### canonical components


def instantiate_prime(Q: Formula, ts: tuple[FoTerm, ...]) -> tuple[list[Formula], Formula]:
    """Premises and final of a canonical component under an instantiation."""
    hints, _, _ = arrow_decompose(Q)
    if len(ts) != len(hints):
        raise ValueError(f"the formula takes {len(hints)} first-order terms, got {len(ts)}")
    B = Q
    for t in ts:
        B = formula_open(B.body, t)  # type: ignore[union-attr]
    prems: list[Formula] = []
    while isinstance(B, Imp):
        prems.append(B.left)
        B = B.right
    return prems, B


### UVA provability game


@dataclass(frozen=True)
class UvaPosition:
    """(U, V, A): Player hypotheses, Opponent goals, granted atoms."""

    U: frozenset[Formula] = frozenset()
    V: frozenset[Formula] = frozenset()
    A: frozenset[Formula] = frozenset()

    @property
    def initial(self) -> bool:
        return not self.U and not self.A

    @property
    def final(self) -> bool:
        return not self.V


@dataclass(frozen=True)
class UvaMove:
    player: str  # "O" | "P"
    formula: Formula
    inst: tuple[FoTerm, ...] = ()


def uva_initial(A: Formula) -> UvaPosition:
    """Initial position of a formula: its canonical components as goals."""
    cf, _ = canonicalize(A)
    return UvaPosition(V=frozenset(conjuncts(cf)))


def uva_transition(p: UvaPosition, move: UvaMove) -> UvaPosition:
    """Successor position; raises ValueError on an illegal move.

    Opponent picks a goal and grants its premises and final atom; Player
    picks a hypothesis whose instantiated final is bot or already granted,
    and its premises replace the goals.
    """
    if move.player == "O":
        if move.formula not in p.V:
            raise ValueError("Opponent must choose a formula of V")
        prems, final = instantiate_prime(move.formula, move.inst)
        atoms = p.A if isinstance(final, Bot) else p.A | {final}
        return UvaPosition(p.U | frozenset(prems), p.V, atoms)
    if move.player == "P":
        if move.formula not in p.U:
            raise ValueError("Player must choose a formula of U")
        prems, final = instantiate_prime(move.formula, move.inst)
        if not isinstance(final, Bot) and final not in p.A:
            raise ValueError(f"final atom {pp_formula(final)} is not in A")
        return UvaPosition(p.U, frozenset(prems), p.A)
    raise ValueError(f"unknown player {move.player!r}")


### protocol runs


class MachineRun:
    """Drives the protocol executions of a closed term of canonical type.

    ``start`` plays the arena root and builds the first state, ``p_reply``
    runs the machine to its stop and records the Player move, ``o_move``
    restarts on one of the stopped arguments one node down.  Default
    Opponent instantiations follow the enumeration (o_i), making ``play`` a
    view on the arena of the type; arbitrary Opponent terms are accepted
    for provability play, where only ``uva_moves`` stays meaningful.
    """

    def __init__(self, M: LmTerm, A: Formula, fuel: int = FUEL):
        if not is_canonical(A):
            raise ValueError("the protocol needs a canonical type")
        comps = conjuncts(A)
        if len(comps) != 1:
            raise ValueError("the protocol needs a single canonical component")
        if any(isinstance(sub, (Pair, Proj, Star)) for sub in subterms(M)):
            raise ValueError("the machine protocol covers the arrow-forall fragment only")
        _, el = typecheck({}, M, {}, A)
        self.formula = A
        self.arena: Arena = arena_of(A)
        self.fuel = fuel
        self.play: list[MoveOcc] = []
        self.uva_moves: list[UvaMove] = []
        self.pending: KamState | None = None
        self._code = el
        self._var: dict[str, tuple[int, int]] = {}  # a-name -> (move, arg position)
        self._mu: dict[str, int] = {}  # alpha-name -> move
        self._var_formula: dict[str, Formula] = {}
        self._args: tuple[LmTerm, ...] = ()
        self._prems: tuple[Formula, ...] = ()
        self._ocount = 0
        self._round = 0
        self._state = "start"  # "start" | "p" | "o" | "done"

    @property
    def status(self) -> str:
        return self._state

    def o_options(self) -> int:
        """How many arguments the last stop offers to Opponent."""
        return len(self._args) if self._state == "o" else 0

    def o_index_of(self, C: Formula) -> int:
        """First argument index (1-based) whose premise formula is C."""
        for j, prem in enumerate(self._prems):
            if prem == C:
                return j + 1
        raise ValueError("no argument carries that formula")

    def start(self, terms: tuple[FoTerm, ...] | None = None) -> MoveOcc:
        if self._state != "start":
            raise ValueError("the run has already started")
        assert len(self.arena.roots) == 1
        return self._launch(self._code, self.arena.roots[0], None, self.formula, terms)

    def o_move(self, j: int, terms: tuple[FoTerm, ...] | None = None) -> MoveOcc:
        if self._state != "o":
            raise ValueError("no Opponent move available")
        if not 1 <= j <= len(self._args):
            raise ValueError(f"argument index {j} out of range 1..{len(self._args)}")
        last = len(self.play) - 1
        node = self.arena.children[self.play[last].node][j - 1]
        return self._launch(self._args[j - 1], node, last, self._prems[j - 1], terms)

    def _launch(
        self,
        code: LmTerm,
        node: int,
        justifier: int | None,
        Q: Formula,
        terms: tuple[FoTerm, ...] | None,
    ) -> MoveOcc:
        fo = self.arena.nodes[node].fo
        if terms is None:
            terms = tuple(FoVar("O", f"o{self._ocount + i}") for i in range(len(fo)))
            self._ocount += len(fo)
        if len(terms) != len(fo):
            raise ValueError(f"the move takes {len(fo)} first-order terms, got {len(terms)}")
        prems, final = instantiate_prime(Q, terms)
        assert len(prems) == len(self.arena.children[node])
        assert len(self.arena.nodes[node].at) == (0 if isinstance(final, Bot) else 1)
        self._round += 1
        names = [f"a{self._round}_{i + 1}" for i in range(len(prems))]
        tail = None if isinstance(final, Bot) else f"al{self._round}"
        move = len(self.play)
        for i, nm in enumerate(names):
            assert nm not in self._var  # freshness of the protocol variables
            self._var[nm] = (move, i)
            self._var_formula[nm] = prems[i]
        if tail is not None:
            assert tail not in self._mu
            self._mu[tail] = move
        occ = MoveOcc(node, justifier, (None,) * len(self.arena.nodes[node].at), terms)
        self.play.append(occ)
        self.uva_moves.append(UvaMove("O", Q, terms))
        entries = terms + tuple(Var(nm) for nm in names)
        self.pending = KamState(code, Stack(entries, tail))
        self._state = "p"
        return occ

    def p_reply(self) -> MoveOcc:
        """Run the machine to its next stop and record the Player move."""
        if self._state != "p" or self.pending is None:
            raise ValueError("no execution is pending")
        out = kam_run(self.pending, self.fuel)
        if isinstance(out, OutOfFuel):
            raise RuntimeError(f"machine ran out of fuel at {pp_state(out.last)}")
        if out.head not in self._var:
            raise ValueError(f"unknown head variable {out.head}")
        fo_args, args, tail = split_stack(out.stack)
        m, i = self._var[out.head]
        node = self.arena.children[self.play[m].node][i]
        prems, final = instantiate_prime(self._var_formula[out.head], fo_args)
        assert len(fo_args) == len(self.arena.nodes[node].fo)
        assert len(args) == len(self.arena.children[node]) == len(prems)
        assert (tail is None) == isinstance(final, Bot)
        if tail is None:
            mu: tuple[tuple[int, int], ...] = ()
        else:
            assert tail in self._mu
            mu = ((self._mu[tail], 0),)
        assert len(mu) == len(self.arena.nodes[node].at)
        occ = MoveOcc(node, m, mu, fo_args)
        self.play.append(occ)
        self.uva_moves.append(UvaMove("P", self._var_formula[out.head], fo_args))
        self._args = args
        self._prems = tuple(prems)
        self.pending = None
        self._state = "o" if args else "done"
        return occ


def extract_play(
    M: LmTerm,
    A: Formula,
    o_choices: list[int | tuple[int, int]] | None = None,
    fuel: int = FUEL,
) -> Play:
    """The view rebuilt from protocol executions under the given choices.

    Each choice is an argument index (1-based), optionally paired with the
    number of fresh variables the Opponent move is expected to introduce.
    """
    run = MachineRun(M, A, fuel=fuel)
    run.start()
    run.p_reply()
    for ch in o_choices or []:
        j, want = ch if isinstance(ch, tuple) else (ch, None)
        mv = run.o_move(j)
        if want is not None and want != len(mv.inst):
            raise ValueError(
                f"choice expected {want} fresh variables, the move introduces {len(mv.inst)}"
            )
        run.p_reply()
    s = tuple(run.play)
    assert is_view(run.arena, s)
    return s
