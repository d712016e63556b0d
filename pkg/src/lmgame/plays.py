"""Justified, instantiated sequences and plays on an arena.

A move occurrence records its arena node, an optional justification pointer
(index of an earlier occurrence), one optional mu-pointer per element of the
node's atomic label, and an instantiation list aligned with the node's
first-order label.  Opponent moves instantiate with fresh O-class variables,
Player moves with arbitrary OP-terms over previously introduced O-variables.

Plays satisfy five conditions: alternation, no mu-pointers from O-moves,
exactly one mu-pointer per atomic-label element of each P-move, matching of
the linked atoms under the accumulated substitutions, and O-variables in
P-instantiations introduced beforehand.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import Arena
from .syntax import Atom, FoTerm, FoVar, fo_map


@dataclass(frozen=True)
class MoveOcc:
    node: int
    justifier: int | None
    mu: tuple[tuple[int, int] | None, ...]
    inst: tuple[FoTerm, ...]


Play = tuple[MoveOcc, ...]


def term_ovars(t: FoTerm) -> list[str]:
    out: list[str] = []

    def go(leaf, _d):
        if isinstance(leaf, FoVar) and leaf.cls == "O":
            out.append(leaf.name)
        return leaf

    fo_map(t, go)
    return out


def term_has_avars(t: FoTerm) -> bool:
    found = []

    def go(leaf, _d):
        if isinstance(leaf, FoVar) and leaf.cls == "A":
            found.append(leaf.name)
        return leaf

    fo_map(t, go)
    return bool(found)


def apply_ovar_map(t: FoTerm, mapping: dict[str, FoTerm]) -> FoTerm:
    def go(leaf, _d):
        if isinstance(leaf, FoVar) and leaf.cls == "O" and leaf.name in mapping:
            return mapping[leaf.name]
        return leaf

    return fo_map(t, go)


def o_vars_played(s: Play, A: Arena) -> list[str]:
    """O-variables in O-instantiations, in order of appearance."""
    out: list[str] = []
    for m in s:
        if A.polarity(m.node) == 0:
            for t in m.inst:
                out.extend(term_ovars(t))
    return out


@dataclass(frozen=True)
class Verdict:
    kind: str  # "Play" | "JustifiedOnly" | "Illegal"
    reason: str | None = None
    index: int | None = None

    def __bool__(self) -> bool:
        return self.kind == "Play"


def _check_justified(A: Arena, s: Play) -> tuple[str, int] | None:
    for i, m in enumerate(s):
        if not (0 <= m.node < len(A)):
            return (f"unknown node {m.node}", i)
        node = A.nodes[m.node]
        if node.parent is None:
            if m.justifier is not None:
                return ("initial move with justifier", i)
        else:
            if m.justifier is None:
                return ("non-initial move without justifier", i)
            if not (0 <= m.justifier < i):
                return ("justifier must point strictly earlier", i)
            if s[m.justifier].node != node.parent:
                return ("justifier does not enable the move", i)
        if len(m.mu) != len(node.at):
            return ("mu-pointer list length differs from atomic label", i)
        for k, link in enumerate(m.mu):
            if link is None:
                continue
            j, slot = link
            if not (0 <= j < i):
                return (f"mu-pointer {k} must point strictly earlier", i)
            tgt = A.nodes[s[j].node]
            if not (0 <= slot < len(tgt.at)):
                return (f"mu-pointer {k} targets a bad label slot", i)
            if A.polarity(s[j].node) == A.polarity(m.node):
                return (f"mu-pointer {k} targets the same polarity", i)
    return None


def _check_instantiated(A: Arena, s: Play) -> tuple[str, int] | None:
    seen: set[str] = set()
    for i, m in enumerate(s):
        node = A.nodes[m.node]
        if len(m.inst) != len(node.fo):
            return ("instantiation length differs from first-order label", i)
        for t in m.inst:
            if term_has_avars(t):
                return ("instantiation mentions an arena variable", i)
        if A.polarity(m.node) == 0:
            for t in m.inst:
                if not (isinstance(t, FoVar) and t.cls == "O"):
                    return ("O-instantiation entry is not an O-variable", i)
                if t.name in seen:
                    return (f"O-variable {t.name} reused", i)
                seen.add(t.name)
    return None


def theta(A: Arena, s: Play, i: int) -> dict[str, FoTerm]:
    """Accumulated substitution of label variables along the justification chain."""
    m = s[i]
    node = A.nodes[m.node]
    base: dict[str, FoTerm] = {}
    if m.justifier is not None:
        base = theta(A, s, m.justifier)
    out = dict(base)
    for x, t in zip(node.fo, m.inst):
        out[x] = t
    return out


def _subst_avars(t: FoTerm, th: dict[str, FoTerm]) -> FoTerm:
    def go(leaf, _d):
        if isinstance(leaf, FoVar) and leaf.cls == "A" and leaf.name in th:
            return th[leaf.name]
        return leaf

    return fo_map(t, go)


def check_play(A: Arena, s: Play) -> Verdict:
    bad = _check_justified(A, s)
    if bad is not None:
        return Verdict("Illegal", *bad)
    bad = _check_instantiated(A, s)
    if bad is not None:
        return Verdict("Illegal", *bad)
    # five play conditions
    for i in range(1, len(s)):
        if A.polarity(s[i].node) == A.polarity(s[i - 1].node):
            return Verdict("JustifiedOnly", "polarities not alternating", i)
    if s and A.polarity(s[0].node) != 0:
        return Verdict("JustifiedOnly", "play must open with an Opponent move", 0)
    intro: set[str] = set()
    for i, m in enumerate(s):
        pol = A.polarity(m.node)
        if pol == 0:
            if any(link is not None for link in m.mu):
                return Verdict("JustifiedOnly", "mu-pointer from an Opponent move", i)
            for t in m.inst:
                intro.add(t.name)  # type: ignore[union-attr]
            continue
        if any(link is None for link in m.mu):
            return Verdict(
                "JustifiedOnly", "Player move missing a mu-pointer on some label element", i
            )
        th_m = theta(A, s, i)
        for k, link in enumerate(m.mu):
            j, slot = link  # type: ignore[misc]
            src: Atom = A.nodes[m.node].at[k]
            tgt: Atom = A.nodes[s[j].node].at[slot]
            if src.rel != tgt.rel or len(src.args) != len(tgt.args):
                return Verdict("JustifiedOnly", f"mu-pointer {k} links distinct relations", i)
            th_n = theta(A, s, j)
            for a, b in zip(src.args, tgt.args):
                if _subst_avars(a, th_m) != _subst_avars(b, th_n):
                    return Verdict(
                        "JustifiedOnly", f"mu-pointer {k} arguments differ under theta", i
                    )
        for t in m.inst:
            for o in term_ovars(t):
                if o not in intro:
                    return Verdict("JustifiedOnly", f"O-variable {o} not yet introduced", i)
    return Verdict("Play")


def is_view(A: Arena, s: Play) -> bool:
    if not check_play(A, s):
        return False
    for i, m in enumerate(s):
        if A.polarity(m.node) == 0 and i > 0 and m.justifier != i - 1:
            return False
    played = o_vars_played(s, A)
    return played == [f"o{i}" for i in range(len(played))]


def _view_indices(A: Arena, s: Play) -> list[int]:
    idx: list[int] = []
    i = len(s) - 1
    while i >= 0:
        m = s[i]
        idx.append(i)
        if A.polarity(m.node) == 1:
            i -= 1
        elif m.justifier is None:
            break
        else:
            i = m.justifier
    idx.reverse()
    return idx


def view_with_map(A: Arena, s: Play) -> tuple[Play, list[int], dict[str, str]]:
    """(view, kept original indices, O-renaming old name -> canonical name)."""
    kept = _view_indices(A, s)
    pos = {j: k for k, j in enumerate(kept)}
    pre: list[MoveOcc] = []
    for j in kept:
        m = s[j]
        jus = None if m.justifier is None else pos.get(m.justifier)
        if m.justifier is not None and jus is None:
            raise ValueError("view: justification pointer leaves the view")
        mu = []
        for link in m.mu:
            if link is None:
                mu.append(None)
                continue
            tj, slot = link
            if tj not in pos:
                raise ValueError("view: mu-pointer leaves the view")
            mu.append((pos[tj], slot))
        pre.append(MoveOcc(m.node, jus, tuple(mu), m.inst))
    ren: dict[str, str] = {}
    for m in pre:
        if A.polarity(m.node) == 0:
            for t in m.inst:
                ren[t.name] = f"o{len(ren)}"  # type: ignore[union-attr]
    mapping = {old: FoVar("O", new) for old, new in ren.items()}
    out = tuple(
        MoveOcc(m.node, m.justifier, m.mu, tuple(apply_ovar_map(t, mapping) for t in m.inst))
        for m in pre
    )
    return out, kept, ren


def view_of(A: Arena, s: Play) -> Play:
    return view_with_map(A, s)[0]


def o_rename(s: Play, mapping: dict[str, str]) -> Play:
    if len(set(mapping.values())) != len(mapping):
        raise ValueError("O-renaming must be injective")
    m2 = {old: FoVar("O", new) for old, new in mapping.items()}
    return tuple(
        MoveOcc(m.node, m.justifier, m.mu, tuple(apply_ovar_map(t, m2) for t in m.inst))
        for m in s
    )


def gr_erase_play(s: Play) -> Play:
    """The same sequence over the label-erased arena: decorations dropped."""
    return tuple(MoveOcc(m.node, m.justifier, (), ()) for m in s)
