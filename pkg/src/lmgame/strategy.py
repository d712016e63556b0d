"""Innocent strategies presented by their view functions.

A view function is a non-empty, even-prefix-closed, deterministic set of
even-length views.  It is stored as the set of views plus a response table
keyed by odd-length views.  Because an O-move in a view is always justified
by the preceding move, the depth of successive O-moves strictly increases,
so every view function on a finite arena is a finite tree: strategies can be
materialized exhaustively from a response function.

O-instantiations inside views follow the canonical enumeration o0, o1, ...;
arbitrary plays are reduced to views (and back) through the canonical
renaming, which is how the view closure and all play-level interaction is
computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .arena import Arena, a_graft, gr
from .plays import (
    MoveOcc,
    Play,
    apply_ovar_map,
    gr_erase_play,
    is_view,
    o_vars_played,
    view_with_map,
)
from .syntax import FoVar, ovar


def view_o_extensions(A: Arena, v: Play) -> list[MoveOcc]:
    """Legal O-extensions of an even view, with canonical instantiations."""
    if not v:
        nodes = list(A.roots)
        jus = None
    else:
        nodes = list(A.children[v[-1].node])
        jus = len(v) - 1
    k = len(o_vars_played(v, A))
    out = []
    for n in nodes:
        node = A.nodes[n]
        inst = tuple(ovar(k + i) for i in range(len(node.fo)))
        out.append(MoveOcc(n, jus, (None,) * len(node.at), inst))
    return out


class ViewFunction:
    """Finite innocent strategy: set of views + response table."""

    def __init__(self, arena: Arena, views: Iterable[Play], validate: bool = True):
        self.arena = arena
        evens: set[Play] = {()}
        for v in views:
            if len(v) % 2:
                raise ValueError("view function elements must have even length")
            for i in range(2, len(v) + 1, 2):
                evens.add(v[:i])
        self.views: frozenset[Play] = frozenset(evens)
        self.resp: dict[Play, MoveOcc] = {}
        for v in self.views:
            if not v:
                continue
            odd = v[:-1]
            prev = self.resp.get(odd)
            if prev is not None and prev != v[-1]:
                raise ValueError("view function is not deterministic")
            self.resp[odd] = v[-1]
        if validate:
            for v in self.views:
                if not is_view(arena, v):
                    raise ValueError(f"not a view: {v}")

    def respond(self, odd: Play) -> MoveOcc | None:
        return self.resp.get(odd)

    def size(self) -> int:
        return sum(len(v) for v in self.views)

    def maximal_views(self) -> list[Play]:
        out = []
        for v in self.views:
            if not any(w != v and w[: len(v)] == v for w in self.views):
                out.append(v)
        return sorted(out, key=lambda v: (len(v), [m.node for m in v]))

    def __eq__(self, other) -> bool:
        return isinstance(other, ViewFunction) and self.views == other.views

    def __hash__(self) -> int:
        return hash(self.views)

    def __repr__(self) -> str:
        return f"ViewFunction({len(self.views)} views on {len(self.arena)} nodes)"


Respond = Callable[[Play, MoveOcc], "MoveOcc | None"]


def materialize(A: Arena, respond: Respond, validate: bool = True) -> ViewFunction:
    """Grow the full (finite) view tree of a response function."""
    views: list[Play] = []

    def grow(v: Play) -> None:
        views.append(v)
        for m in view_o_extensions(A, v):
            r = respond(v, m)
            if r is None:
                continue
            grow(v + (m, r))

    grow(())
    return ViewFunction(A, views, validate=validate)


def respond_in_play(sigma: ViewFunction, s: Play, m: MoveOcc) -> MoveOcc | None:
    """The strategy's response after the play s·m, in play coordinates.

    Computes the view of s·m, consults the response table, then transports
    the response back through the view's index map and O-renaming.
    """
    v, kept, ren = view_with_map(sigma.arena, s + (m,))
    r = sigma.resp.get(v)
    if r is None:
        return None
    inv = {new: FoVar("O", old) for old, new in ren.items()}
    inst = tuple(apply_ovar_map(t, inv) for t in r.inst)
    mu = tuple(None if link is None else (kept[link[0]], link[1]) for link in r.mu)
    jus = None if r.justifier is None else kept[r.justifier]
    return MoveOcc(r.node, jus, mu, inst)


### copycats


def copycat(A: Arena, partner_of: Callable[[Play, int], int]) -> ViewFunction:
    """Generic linked copycat: respond to m with its partner node, copying
    justification (one step up the pairing), mu-links to the previous move's
    corresponding slots, and the instantiation verbatim.

    partner_of receives the current view (for thread context) and the node.
    """

    def respond(v: Play, m: MoveOcc) -> MoveOcc | None:
        p = partner_of(v + (m,), m.node)
        if p is None:
            return None
        node = A.nodes[p]
        jus = len(v) if m.justifier is None else m.justifier - 1
        mu = tuple((len(v), k) for k in range(len(node.at)))
        if len(node.at) != len(A.nodes[m.node].at) or len(node.fo) != len(A.nodes[m.node].fo):
            raise ValueError("copycat partners must have equal label lengths")
        return MoveOcc(p, jus, mu, m.inst)

    return materialize(A, respond)


def identity(A: Arena) -> ViewFunction:
    """Copycat on A -> A (empty strategy on the empty arena)."""
    arrow, fmap, tmap = a_graft(A, A)
    cod_of = {v: k for k, v in tmap.items()}
    dom_of = {v: k for k, v in fmap.items()}

    def partner(v: Play, node: int) -> int | None:
        if node in cod_of:
            n = cod_of[node]
            root = cod_of[v[0].node]  # thread fixed by the initial move
            return fmap[(n, root)]
        n, _root = dom_of[node]
        return tmap[n]

    return copycat(arrow, partner)


def identity_arrow(A: Arena) -> Arena:
    return a_graft(A, A)[0]


def copycat_iso(A: Arena, B: Arena, iso: dict[int, int]) -> ViewFunction:
    """Linked copycat along an arena isomorphism iso: A -> B."""
    arrow, fmap, tmap = a_graft(A, B)
    cod_of = {v: k for k, v in tmap.items()}
    dom_of = {v: k for k, v in fmap.items()}
    inv = {v: k for k, v in iso.items()}

    def partner(v: Play, node: int) -> int | None:
        if node in cod_of:
            b = cod_of[node]
            root = cod_of[v[0].node]
            return fmap[(inv[b], root)]
        a, _root = dom_of[node]
        return tmap[iso[a]]

    return copycat(arrow, partner)


### classification


@dataclass(frozen=True)
class StrategyInfo:
    mu_rigid: bool
    total: bool
    linear_central: bool | None
    size: int


def is_mu_rigid(sigma: ViewFunction) -> bool:
    A = sigma.arena
    for v in sigma.views:
        for i in range(1, len(v), 2):
            m, prev = v[i], v[i - 1]
            if len(A.nodes[m.node].at) != len(A.nodes[prev.node].at):
                return False
            if m.mu != tuple((i - 1, k) for k in range(len(m.mu))):
                return False
            if m.inst != prev.inst:
                return False
    return True


def is_total(sigma: ViewFunction) -> bool:
    for v in sigma.views:
        for m in view_o_extensions(sigma.arena, v):
            if sigma.resp.get(v + (m,)) is None:
                return False
    return True


def is_linear(sigma: ViewFunction, domain: frozenset[int]) -> bool:
    """Linearity on an arrow arena whose domain-side nodes are given."""
    A = sigma.arena
    for m in view_o_extensions(A, ()):
        r = sigma.resp.get(((m,)))
        if r is None or r.node not in domain:
            return False
    for v in sigma.views:
        for i, m in enumerate(v):
            if i > 1 and m.node in domain and m.justifier == 0:
                return False
    return True


def classify(sigma: ViewFunction, domain: frozenset[int] | None = None) -> StrategyInfo:
    return StrategyInfo(
        mu_rigid=is_mu_rigid(sigma),
        total=is_total(sigma),
        linear_central=None if domain is None else is_linear(sigma, domain),
        size=sigma.size(),
    )


### view closure


def view_closure(sigma: ViewFunction, bound: int = 12) -> set[Play]:
    """Plays of vc(sigma) up to the length bound, O-instantiations canonical."""
    A = sigma.arena
    out: set[Play] = {()}
    frontier: list[Play] = [()]
    while frontier:
        s = frontier.pop()
        if len(s) >= bound:
            continue
        for m in play_o_extensions(A, s):
            r = respond_in_play(sigma, s, m)
            if r is None:
                continue
            t = s + (m, r)
            if t not in out:
                out.add(t)
                frontier.append(t)
    return out


def play_o_extensions(A: Arena, s: Play) -> list[MoveOcc]:
    """Legal O-extensions of an even play (canonical fresh O-variables)."""
    k = len(o_vars_played(s, A))
    out = []
    for n in range(len(A)):
        if A.polarity(n) != 0:
            continue
        node = A.nodes[n]
        inst = tuple(ovar(k + i) for i in range(len(node.fo)))
        blank = (None,) * len(node.at)
        if node.parent is None:
            out.append(MoveOcc(n, None, blank, inst))
        else:
            for j, occ in enumerate(s):
                if occ.node == node.parent:
                    out.append(MoveOcc(n, j, blank, inst))
    return out


def gr_erase_vf(sigma: ViewFunction) -> ViewFunction:
    return ViewFunction(gr(sigma.arena), [gr_erase_play(v) for v in sigma.views])
