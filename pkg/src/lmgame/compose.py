"""Composition of innocent strategies by directed interaction.

The composite of sigma on A->B and tau on B->C collects the views of the
A->C projections of interaction sequences whose A->B and B->C projections
stay inside the two strategies.  Determinism plus the zipping property make
the search directed: an Opponent extension of an A->C view pins down the
whole interaction continuation, so one machine run per extension suffices.

The machine keeps the interaction sequence u together with incremental
projections onto the two strategy boards and onto A->C.  Every occurrence
lives on exactly two of the three: A-moves on A->B and A->C, B-moves on the
two boards, C-moves on B->C and A->C.  B-moves relay between the
strategies; the producing side supplies the P-instantiation and the machine
invents fresh O-variables b0, b1, ... for the receiving side.  Hiding a
move into A->C re-justifies initial A-moves to the unique initial C-move of
the interaction, chases mu-pointer paths through B labels, and closes
P-instantiations under the substitution that pairs each B-move's
O-instantiation with its P-instantiation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .arena import Arena, a_graft
from .plays import MoveOcc, Play, apply_ovar_map
from .strategy import ViewFunction, respond_in_play, view_o_extensions
from .syntax import FoTerm, FoVar


@dataclass(frozen=True)
class UOcc:
    """Interaction occurrence in component coordinates.

    comp names the component arena, cnode the node there, jus the index of
    the justifying occurrence in u.  mu holds the producer's links (u
    coordinates); environment moves have none.  broot is the B-root node of
    the enclosing B-thread (A-moves only) and croot the root node of the
    enclosing C-tree; both locate the right grafted copy when translating.
    """

    comp: str
    cnode: int
    jus: int | None
    mu: tuple[tuple[int, int] | None, ...]
    o_inst: tuple[FoTerm, ...] | None
    p_inst: tuple[FoTerm, ...] | None
    broot: int | None
    croot: int | None


class _State:
    __slots__ = (
        "u",
        "sAB", "uAB", "posAB",
        "sBC", "uBC", "posBC",
        "sAC", "uAC", "posAC",
        "theta", "nb",
    )

    def __init__(self) -> None:
        self.u: list[UOcc] = []
        self.sAB: list[MoveOcc] = []
        self.uAB: list[int] = []
        self.posAB: dict[int, int] = {}
        self.sBC: list[MoveOcc] = []
        self.uBC: list[int] = []
        self.posBC: dict[int, int] = {}
        self.sAC: list[MoveOcc] = []
        self.uAC: list[int] = []
        self.posAC: dict[int, int] = {}
        self.theta: dict[str, FoTerm] = {}
        self.nb = 0

    def clone(self) -> "_State":
        st = _State.__new__(_State)
        st.u = list(self.u)
        st.sAB = list(self.sAB)
        st.uAB = list(self.uAB)
        st.posAB = dict(self.posAB)
        st.sBC = list(self.sBC)
        st.uBC = list(self.uBC)
        st.posBC = dict(self.posBC)
        st.sAC = list(self.sAC)
        st.uAC = list(self.uAC)
        st.posAC = dict(self.posAC)
        st.theta = dict(self.theta)
        st.nb = self.nb
        return st


def compose(
    Aa: Arena,
    Ba: Arena,
    Ca: Arena,
    sigma: ViewFunction,
    tau: ViewFunction,
    fuel: int = 10_000,
) -> ViewFunction:
    """View function of sigma;tau on A -> C."""
    AB, fmapAB, tmapAB = a_graft(Aa, Ba)
    BC, fmapBC, tmapBC = a_graft(Ba, Ca)
    AC, fmapAC, tmapAC = a_graft(Aa, Ca)
    if sigma.arena != AB:
        raise ValueError("sigma must be a view function on A -> B")
    if tau.arena != BC:
        raise ValueError("tau must be a view function on B -> C")

    revAB: dict[int, tuple] = {v: ("B", k) for k, v in tmapAB.items()}
    revAB.update({v: ("A", a, r) for (a, r), v in fmapAB.items()})
    revBC: dict[int, tuple] = {v: ("C", k) for k, v in tmapBC.items()}
    revBC.update({v: ("B", b, r) for (b, r), v in fmapBC.items()})
    revAC: dict[int, tuple] = {v: ("C", k) for k, v in tmapAC.items()}
    revAC.update({v: ("A", a, r) for (a, r), v in fmapAC.items()})

    def push_u(st: _State, occ: UOcc) -> int:
        st.u.append(occ)
        return len(st.u) - 1

    def on_ab(st: _State, i: int, move: MoveOcc) -> None:
        st.posAB[i] = len(st.sAB)
        st.uAB.append(i)
        st.sAB.append(move)

    def on_bc(st: _State, i: int, move: MoveOcc) -> None:
        st.posBC[i] = len(st.sBC)
        st.uBC.append(i)
        st.sBC.append(move)

    def on_ac(st: _State, i: int, move: MoveOcc) -> None:
        st.posAC[i] = len(st.sAC)
        st.uAC.append(i)
        st.sAC.append(move)

    def feed_sigma(st: _State, i: int) -> None:
        """Deliver occurrence i to sigma's board as an Opponent move."""
        o = st.u[i]
        if o.comp == "B":
            node = tmapAB[o.cnode]
            jus = None if Ba.nodes[o.cnode].parent is None else st.posAB[o.jus]
        else:
            node = fmapAB[(o.cnode, o.broot)]
            jus = st.posAB[o.jus]
        at = len(AB.nodes[node].at)
        on_ab(st, i, MoveOcc(node, jus, (None,) * at, o.o_inst))

    def feed_tau(st: _State, i: int) -> None:
        o = st.u[i]
        if o.comp == "C":
            node = tmapBC[o.cnode]
            jus = None if Ca.nodes[o.cnode].parent is None else st.posBC[o.jus]
        else:
            node = fmapBC[(o.cnode, o.croot)]
            jus = st.posBC[o.jus]
        at = len(BC.nodes[node].at)
        on_bc(st, i, MoveOcc(node, jus, (None,) * at, o.o_inst))

    def sigma_occ(st: _State, r: MoveOcc) -> UOcc:
        """Translate sigma's board response into interaction coordinates."""
        kind = revAB[r.node]
        mu = tuple((st.uAB[j], slot) for j, slot in r.mu)
        if kind[0] == "B":
            b = kind[1]
            if Ba.nodes[b].parent is None:
                jus = st.uAC[0]  # opening a B-thread under the initial C-move
            else:
                jus = st.uAB[r.justifier]
            return UOcc("B", b, jus, mu, None, r.inst, None, st.u[jus].croot)
        jus = st.uAB[r.justifier]
        return UOcc("A", kind[1], jus, mu, None, r.inst, kind[2], st.u[jus].croot)

    def tau_occ(st: _State, r: MoveOcc) -> UOcc:
        kind = revBC[r.node]
        mu = tuple((st.uBC[j], slot) for j, slot in r.mu)
        jus = st.uBC[r.justifier]  # tau never plays an initial move of B -> C
        if kind[0] == "C":
            return UOcc("C", kind[1], jus, mu, None, r.inst, None, st.u[jus].croot)
        return UOcc("B", kind[1], jus, mu, None, r.inst, None, kind[2])

    def relay(st: _State, occ: UOcc) -> UOcc:
        """Fresh O-variables for a B-move; extend theta with its pairing."""
        closed = tuple(apply_ovar_map(t, st.theta) for t in occ.p_inst)
        fresh = tuple(FoVar("O", f"b{st.nb + i}") for i in range(len(closed)))
        st.nb += len(closed)
        for v, t in zip(fresh, closed):
            st.theta[v.name] = t
        return replace(occ, o_inst=fresh, p_inst=closed)

    def hide(st: _State, i: int) -> MoveOcc:
        """A->C form of an external occurrence."""
        o = st.u[i]
        if o.comp == "C":
            node = tmapAC[o.cnode]
            jus = None if Ca.nodes[o.cnode].parent is None else st.posAC[o.jus]
        else:
            node = fmapAC[(o.cnode, o.croot)]
            if Aa.nodes[o.cnode].parent is None:
                jus = st.posAC[st.u[o.jus].jus]  # B-root's justifier is initial in C
            else:
                jus = st.posAC[o.jus]
        if o.p_inst is None:
            return MoveOcc(node, jus, (None,) * len(o.mu), o.o_inst)
        mu = []
        for link in o.mu:
            t, slot = link
            while st.u[t].comp == "B":
                t, slot = st.u[t].mu[slot]
            mu.append((st.posAC[t], slot))
        inst = tuple(apply_ovar_map(t, st.theta) for t in o.p_inst)
        return MoveOcc(node, jus, tuple(mu), inst)

    def run(st: _State, m: MoveOcc) -> _State | None:
        """Extend the interaction by the Opponent move m on A->C and relay
        until a strategy answers externally.  None when a strategy is silent.
        """
        kind = revAC[m.node]
        blank = (None,) * len(m.mu)
        if kind[0] == "C":
            jus = None if m.justifier is None else st.uAC[m.justifier]
            croot = kind[1] if jus is None else st.u[jus].croot
            i = push_u(st, UOcc("C", kind[1], jus, blank, m.inst, None, None, croot))
            on_ac(st, i, m)
            feed_tau(st, i)
            turn = "tau"
        else:
            jus = st.uAC[m.justifier]
            parent = st.u[jus]  # an A-occurrence: env never opens an A-thread
            i = push_u(st, UOcc("A", kind[1], jus, blank, m.inst, None, parent.broot, parent.croot))
            on_ac(st, i, m)
            feed_sigma(st, i)
            turn = "sigma"
        for _ in range(fuel):
            if turn == "sigma":
                r = respond_in_play(sigma, tuple(st.sAB[:-1]), st.sAB[-1])
                if r is None:
                    return None
                occ = sigma_occ(st, r)
                if occ.comp == "B":
                    occ = relay(st, occ)
                    i = push_u(st, occ)
                    on_ab(st, i, r)
                    feed_tau(st, i)
                    turn = "tau"
                else:
                    i = push_u(st, occ)
                    on_ab(st, i, r)
                    on_ac(st, i, hide(st, i))
                    return st
            else:
                r = respond_in_play(tau, tuple(st.sBC[:-1]), st.sBC[-1])
                if r is None:
                    return None
                occ = tau_occ(st, r)
                if occ.comp == "B":
                    occ = relay(st, occ)
                    i = push_u(st, occ)
                    on_bc(st, i, r)
                    feed_sigma(st, i)
                    turn = "sigma"
                else:
                    i = push_u(st, occ)
                    on_bc(st, i, r)
                    on_ac(st, i, hide(st, i))
                    return st
        raise RuntimeError("interaction fuel exhausted")

    views: list[Play] = []

    def grow(st: _State) -> None:
        v = tuple(st.sAC)
        views.append(v)
        for m in view_o_extensions(AC, v):
            st2 = run(st.clone(), m)
            if st2 is not None:
                grow(st2)

    grow(_State())
    return ViewFunction(AC, views)
