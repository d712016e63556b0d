"""Arenas: ordered forests with first-order and atomic labels.

Nodes carry a list of A-class variables (the first-order label) and a list
of atoms over AP-terms (the atomic label).  Polarity is depth parity: roots
are O-positions.  Constructions:

* concatenation (sum) juxtaposes forests,
* graft prepends a forest to the children of every root (arrow arenas),
* merge is the product: one root per combination of factor roots, labels
  concatenated, taken in left-major order,
* push adds a quantifier variable to the first-order label of each root.

Every constructor renames A-variables apart ("x0", "x1", ... in slot
order), so structural equality of arenas is meaningful and first-order
labels stay globally distinct.

A formula denotes an arena: top the empty forest, bot a bare node, an atom
a single labelled node, an implication a graft, a conjunction a
concatenation, a quantifier a push.  Judgment arenas package a whole
sequent as sum(Gamma) -> product(A, Delta) and expose the address book
used by the strategy constructors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .canon import canonicalize, is_canonical
from .parser import parse_fo_term, pp_fo_term
from .syntax import (
    And,
    Atom,
    Bot,
    FoTerm,
    FoVar,
    Fn,
    Formula,
    Forall,
    Imp,
    NameSupply,
    Top,
    fo_map,
    formula_open,
)


@dataclass(frozen=True)
class ANode:
    id: int
    parent: int | None
    fo: tuple[str, ...]
    at: tuple[Atom, ...]


@dataclass(frozen=True)
class Arena:
    nodes: tuple[ANode, ...]  # index = id, preorder
    roots: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def depth(self, i: int) -> int:
        d = 0
        p = self.nodes[i].parent
        while p is not None:
            d += 1
            p = self.nodes[p].parent
        return d

    def polarity(self, i: int) -> int:
        """0 for O-positions (even depth), 1 for P-positions."""
        return self.depth(i) % 2

    def subtree(self, i: int) -> list[int]:
        out = [i]
        for c in self.children[i]:
            out.extend(self.subtree(c))
        return out

    def root_of(self, i: int) -> int:
        p = self.nodes[i].parent
        while p is not None:
            i, p = p, self.nodes[p].parent
        return i

    def fo_scope(self, i: int) -> list[str]:
        """A-variables visible at node i (its own and its ancestors' fo labels)."""
        chain: list[int] = []
        j: int | None = i
        while j is not None:
            chain.append(j)
            j = self.nodes[j].parent
        out: list[str] = []
        for j in reversed(chain):
            out.extend(self.nodes[j].fo)
        return out


def _build(parents: list[int | None], fos: list[tuple[str, ...]], ats: list[tuple[Atom, ...]]) -> Arena:
    n = len(parents)
    children: list[list[int]] = [[] for _ in range(n)]
    roots = [i for i, p in enumerate(parents) if p is None]
    for i, p in enumerate(parents):
        if p is not None:
            children[p].append(i)
    nodes = tuple(ANode(i, parents[i], fos[i], ats[i]) for i in range(n))
    return Arena(nodes, tuple(roots), tuple(tuple(c) for c in children))


def _freshen(arena: Arena) -> Arena:
    """Rename A-variables to x0, x1, ... in slot order (preorder).

    Renaming is path-local: one quantifier may label several roots (a push
    over a multi-root forest), and atoms only ever reference variables on
    their own ancestor path, so each tree renames its copy independently.
    """
    n = len(arena.nodes)
    fos: list[tuple[str, ...]] = [()] * n
    ats: list[tuple[Atom, ...]] = [()] * n
    k = 0

    def walk(i: int, scope: dict[str, str]) -> None:
        nonlocal k
        sc = dict(scope)
        newfo = []
        for v in arena.nodes[i].fo:
            nv = f"x{k}"
            k += 1
            sc[v] = nv
            newfo.append(nv)
        fos[i] = tuple(newfo)

        def sub(t: FoTerm) -> FoTerm:
            def go(leaf, _d):
                if isinstance(leaf, FoVar) and leaf.cls == "A":
                    return FoVar("A", sc.get(leaf.name, leaf.name))
                return leaf

            return fo_map(t, go)

        ats[i] = tuple(
            Atom(a.rel, tuple(sub(x) for x in a.args)) for a in arena.nodes[i].at
        )
        for c in arena.children[i]:
            walk(c, sc)

    for r in arena.roots:
        walk(r, {})
    return _build([n_.parent for n_ in arena.nodes], fos, ats)


### constructions (each returns node maps from inputs to output)


def a_empty() -> Arena:
    return _build([], [], [])


def a_unit(at: tuple[Atom, ...] = (), fo: tuple[str, ...] = ()) -> Arena:
    return _build([None], [fo], [at])


def _prefixed(part: Arena, pref: str) -> Arena:
    """Rename the part's own label variables apart; free A-vars untouched."""
    bound = {v for n in part.nodes for v in n.fo}

    def ren_atom(a: Atom) -> Atom:
        def go(leaf, _d):
            if isinstance(leaf, FoVar) and leaf.cls == "A" and leaf.name in bound:
                return FoVar("A", pref + leaf.name)
            return leaf

        return Atom(a.rel, tuple(fo_map(x, go) for x in a.args))

    fos = [tuple(pref + v for v in n.fo) for n in part.nodes]
    ats = [tuple(ren_atom(a) for a in n.at) for n in part.nodes]
    return _build([n.parent for n in part.nodes], fos, ats)


def a_concat(parts: list[Arena]) -> tuple[Arena, list[dict[int, int]]]:
    parents: list[int | None] = []
    fos: list[tuple[str, ...]] = []
    ats: list[tuple[Atom, ...]] = []
    maps: list[dict[int, int]] = []
    # preorder per part, parts in order; label vars renamed apart
    for pi, raw_part in enumerate(parts):
        part = _prefixed(raw_part, f"c{pi}_")
        m: dict[int, int] = {}

        def walk(i: int, parent: int | None) -> None:
            nid = len(parents)
            m[i] = nid
            parents.append(parent)
            fos.append(part.nodes[i].fo)
            ats.append(part.nodes[i].at)
            for c in part.children[i]:
                walk(c, nid)

        for r in part.roots:
            walk(r, None)
        maps.append(m)
    raw = _build(parents, fos, ats)
    out = _freshen(raw)
    return out, maps


def a_graft(F: Arena, T: Arena) -> tuple[Arena, dict[tuple[int, int], int], dict[int, int]]:
    """Graft F on T: F's trees become the leftmost children of every T root.

    Returns (arena, fmap, tmap) with fmap[(f_node, t_root)] the copy of an
    F node under the given T root.
    """
    parents: list[int | None] = []
    fos: list[tuple[str, ...]] = []
    ats: list[tuple[Atom, ...]] = []
    fmap: dict[tuple[int, int], int] = {}
    tmap: dict[int, int] = {}
    Tp = _prefixed(T, "t_")
    Fcopies = {r: _prefixed(F, f"f{r}_") for r in T.roots}

    def walk_t(i: int, parent: int | None) -> None:
        nid = len(parents)
        tmap[i] = nid
        parents.append(parent)
        fos.append(Tp.nodes[i].fo)
        ats.append(Tp.nodes[i].at)
        # graft point: a root of T receives F's trees first
        if T.nodes[i].parent is None:
            for fr in F.roots:
                walk_f(fr, nid, i)
        for c in T.children[i]:
            walk_t(c, nid)

    def walk_f(j: int, parent: int, troot: int) -> None:
        nid = len(parents)
        fmap[(j, troot)] = nid
        Fp = Fcopies[troot]
        parents.append(parent)
        fos.append(Fp.nodes[j].fo)
        ats.append(Fp.nodes[j].at)
        for c in F.children[j]:
            walk_f(c, nid, troot)

    for r in T.roots:
        walk_t(r, None)
    raw = _build(parents, fos, ats)
    out = _freshen(raw)
    return out, fmap, tmap


def a_merge(parts: list[Arena]) -> tuple[Arena, dict[tuple[int, int, tuple[int, ...]], int], list[tuple[int, ...]]]:
    """Product of the parts: one root per combination of factor roots.

    Returns (arena, nmap, combos): ``nmap[(k, node, combo)]`` locates the
    copy of factor k's node under a given root combination (for root nodes
    the map lands on the merged root); ``combos`` lists the root
    combinations in left-major order, matching the output root order.
    """
    if any(not p.roots for p in parts):
        return a_empty(), {}, []
    combos = list(itertools.product(*[p.roots for p in parts]))
    parents: list[int | None] = []
    fos: list[tuple[str, ...]] = []
    ats: list[tuple[Atom, ...]] = []
    nmap: dict[tuple[int, int, tuple[int, ...]], int] = {}
    # a factor tree is copied under every combo its root joins: rename per copy
    copies = {
        (pi, ci): _prefixed(p, f"m{pi}c{ci}_")
        for pi, p in enumerate(parts)
        for ci in range(len(combos))
    }

    def walk(pi: int, ci: int, j: int, parent: int, combo: tuple[int, ...]) -> None:
        part = copies[(pi, ci)]
        nid = len(parents)
        nmap[(pi, j, combo)] = nid
        parents.append(parent)
        fos.append(part.nodes[j].fo)
        ats.append(part.nodes[j].at)
        for c in part.children[j]:
            walk(pi, ci, c, nid, combo)

    for ci, combo in enumerate(combos):
        rid = len(parents)
        parents.append(None)
        fo: list[str] = []
        at: list[Atom] = []
        for pi, r in enumerate(combo):
            nmap[(pi, r, combo)] = rid
            fo.extend(copies[(pi, ci)].nodes[r].fo)
            at.extend(copies[(pi, ci)].nodes[r].at)
        fos.append(tuple(fo))
        ats.append(tuple(at))
        for pi, r in enumerate(combo):
            for c in parts[pi].children[r]:
                walk(pi, ci, c, rid, combo)
    raw = _build(parents, fos, ats)
    out = _freshen(raw)
    return out, nmap, combos


def a_push(A: Arena, var: str) -> tuple[Arena, dict[int, int]]:
    """Push a fresh A-variable onto the first-order label of each root."""
    fos = [n.fo for n in A.nodes]
    for r in A.roots:
        fos[r] = (var,) + fos[r]
    raw = _build([n.parent for n in A.nodes], fos, [n.at for n in A.nodes])
    return _freshen(raw), {i: i for i in range(len(A))}


### formula interpretation


def interp_arena(A: Formula, supply: NameSupply | None = None) -> Arena:
    """Arena of a formula; total (no canonicality requirement)."""
    supply = supply or NameSupply()

    def go(B: Formula) -> Arena:
        match B:
            case Top():
                return a_empty()
            case Bot():
                return a_unit()
            case Atom(_, _):
                return a_unit(at=(B,))
            case Imp(l, r):
                return a_graft(go(l), go(r))[0]
            case And(l, r):
                return a_concat([go(l), go(r)])[0]
            case Forall(_, _):
                y = supply.fresh("q")
                inner = go(formula_open(B.body, FoVar("A", y)))
                return a_push(inner, y)[0]
        raise TypeError(B)

    return _freshen(go(A))


def arena_of(A: Formula) -> Arena:
    """Arena of a canonical formula (the paper's operator reading)."""
    if not is_canonical(A):
        raise ValueError("arena_of expects a canonical formula; run canonicalize first")
    return interp_arena(A)


def gr(A: Arena) -> Arena:
    """Erase all labels."""
    return _build([n.parent for n in A.nodes], [() for _ in A.nodes], [() for _ in A.nodes])


### isomorphism


def _atom_key(a: Atom) -> tuple:
    # shape key ignoring A-var identities
    def term_key(t: FoTerm) -> tuple:
        match t:
            case FoVar("A", _):
                return ("A",)
            case FoVar(cls, name):
                return ("v", cls, name)
            case Fn(name, args):
                return ("f", name, tuple(term_key(x) for x in args))
        return ("b",)

    return (a.rel, tuple(term_key(t) for t in a.args))


def find_arena_iso(A: Arena, B: Arena) -> dict[int, int] | None:
    """Order-respecting bijection (searching sibling permutations) or None.

    First-order labels must have equal lengths pointwise; atomic labels must
    agree under the A-variable correspondence induced by the matched
    first-order labels.
    """
    if len(A) != len(B):
        return None

    def size(arena: Arena, i: int) -> int:
        return 1 + sum(size(arena, c) for c in arena.children[i])

    sizeA = {i: size(A, i) for i in range(len(A))}
    sizeB = {i: size(B, i) for i in range(len(B))}

    def terms_match(t: FoTerm, u: FoTerm, amap: dict[str, str]) -> bool:
        match t, u:
            case FoVar("A", n1), FoVar("A", n2):
                return amap.get(n1) == n2
            case FoVar(c1, n1), FoVar(c2, n2):
                return c1 == c2 and n1 == n2
            case Fn(f1, a1), Fn(f2, a2):
                return f1 == f2 and len(a1) == len(a2) and all(
                    terms_match(x, y, amap) for x, y in zip(a1, a2)
                )
        return False

    def match_lists(xs: list[int], ys: list[int], amap: dict[str, str], acc: dict[int, int]):
        """Match xs against some permutation of ys, extending amap and acc."""
        if not xs:
            yield amap, acc
            return
        x, rest = xs[0], xs[1:]
        nx = A.nodes[x]
        for k, y in enumerate(ys):
            ny = B.nodes[y]
            if sizeA[x] != sizeB[y] or len(nx.fo) != len(ny.fo) or len(nx.at) != len(ny.at):
                continue
            amap2 = dict(amap)
            ok = True
            for v, w in zip(nx.fo, ny.fo):
                if v in amap2 and amap2[v] != w:
                    ok = False
                    break
                amap2[v] = w
            if not ok:
                continue
            if not all(
                a.rel == b.rel and len(a.args) == len(b.args) and all(
                    terms_match(t, u, amap2) for t, u in zip(a.args, b.args)
                )
                for a, b in zip(nx.at, ny.at)
            ):
                continue
            acc2 = dict(acc)
            acc2[x] = y
            for amap3, acc3 in match_lists(
                list(A.children[x]), list(B.children[y]), amap2, acc2
            ):
                for amap4, acc4 in match_lists(rest, ys[:k] + ys[k + 1:], amap3, acc3):
                    yield amap4, acc4
            # children matched inside; continue the loop to try other y on failure

    for _amap, acc in match_lists(list(A.roots), list(B.roots), {}, {}):
        return acc
    return None


def types_isomorphic(A: Formula, B: Formula) -> bool:
    A0, _ = canonicalize(A)
    B0, _ = canonicalize(B)
    return find_arena_iso(interp_arena(A0), interp_arena(B0)) is not None


### JSON


def arena_to_json(A: Arena) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "parent": n.parent,
                "foLabel": list(n.fo),
                "atomicLabel": [
                    {"rel": a.rel, "args": [pp_fo_term(t) for t in a.args]} for a in n.at
                ],
            }
            for n in A.nodes
        ]
    }


def arena_from_json(data: dict) -> Arena:
    nodes = sorted(data["nodes"], key=lambda n: n["id"])
    if [n["id"] for n in nodes] != list(range(len(nodes))):
        raise ValueError("arena node ids must be 0..n-1")
    fo_names = {v for n in nodes for v in n["foLabel"]}
    parents: list[int | None] = []
    fos, ats = [], []
    for n in nodes:
        parents.append(n["parent"])
        fos.append(tuple(n["foLabel"]))
        atoms = []
        for a in n.get("atomicLabel", []):
            args = []
            for s in a.get("args", []):
                t = parse_fo_term(s, allow_ovars=True)

                def fix(leaf, _d):
                    if isinstance(leaf, FoVar) and leaf.cls == "P" and leaf.name in fo_names:
                        return FoVar("A", leaf.name)
                    return leaf

                args.append(fo_map(t, fix))
            atoms.append(Atom(a["rel"], tuple(args)))
        ats.append(tuple(atoms))
    return _build(parents, fos, ats)


### judgment arenas


@dataclass
class JArena:
    """Arena of a sequent sum(Gamma) -> (A x product(Delta)) with addressing.

    Conclusion factors are [A] + Delta (Delta sorted by name); hypotheses are
    grafted under every conclusion root, one copy per root combination.
    """

    arena: Arena
    gamma: list[tuple[str, Formula]]
    concl: Formula
    delta: list[tuple[str, Formula]]
    factor_arenas: list[Arena]  # arena of A, then of each Delta entry
    gamma_arenas: list[Arena]
    combos: list[tuple[int, ...]]
    croot_ids: list[int]  # arena node id per combo
    _concl_map: dict[tuple[int, tuple[int, ...], int], int] = field(default_factory=dict)
    _hyp_map: dict[tuple[int, int, int], int] = field(default_factory=dict)
    _rev: dict[int, tuple] = field(default_factory=dict)

    def croot(self, combo: tuple[int, ...]) -> int:
        return self.croot_ids[self.combos.index(combo)]

    def concl_node(self, combo: tuple[int, ...], k: int, node: int) -> int:
        return self._concl_map[(k, combo, node)]

    def hyp_node(self, croot_id: int, var_idx: int, node: int) -> int:
        return self._hyp_map[(croot_id, var_idx, node)]

    def classify(self, i: int) -> tuple:
        """("croot", combo) | ("concl", combo, k, node) | ("hyp", croot_id, var_idx, node)."""
        return self._rev[i]

    def fo_offset(self, combo: tuple[int, ...], k: int) -> int:
        off = 0
        for j in range(k):
            off += len(self.factor_arenas[j].nodes[combo[j]].fo)
        return off

    def at_offset(self, combo: tuple[int, ...], k: int) -> int:
        off = 0
        for j in range(k):
            off += len(self.factor_arenas[j].nodes[combo[j]].at)
        return off


def build_judgment(
    gamma: list[tuple[str, Formula]],
    A: Formula,
    delta: list[tuple[str, Formula]],
    supply: NameSupply | None = None,
) -> JArena:
    supply = supply or NameSupply()
    gamma = sorted(gamma, key=lambda kv: kv[0])
    delta = sorted(delta, key=lambda kv: kv[0])
    gamma_arenas = [interp_arena(F, supply) for _, F in gamma]
    factor_arenas = [interp_arena(A, supply)] + [interp_arena(F, supply) for _, F in delta]
    prod, nmap, combos = a_merge(factor_arenas)
    gsum, gmaps = a_concat(gamma_arenas)
    whole, fmap, tmap = a_graft(gsum, prod)

    j = JArena(
        arena=whole,
        gamma=gamma,
        concl=A,
        delta=delta,
        factor_arenas=factor_arenas,
        gamma_arenas=gamma_arenas,
        combos=combos,
        croot_ids=[],
    )
    for combo in combos:
        rid = tmap[nmap[(0, combo[0], combo)]]
        j.croot_ids.append(rid)
        j._rev[rid] = ("croot", combo)
    for k, fa in enumerate(factor_arenas):
        for node in range(len(fa)):
            for combo in combos:
                if fa.root_of(node) != combo[k]:
                    continue
                wid = tmap[nmap[(k, node, combo)]]
                j._concl_map[(k, combo, node)] = wid
                if wid not in j._rev:
                    j._rev[wid] = ("concl", combo, k, node)
    for ci, combo in enumerate(combos):
        rid = j.croot_ids[ci]
        prod_root = nmap[(0, combo[0], combo)]
        for vi in range(len(gamma)):
            ga = gamma_arenas[vi]
            gmap = gmaps[vi]
            for node in range(len(ga)):
                wid = fmap[(gmap[node], prod_root)]
                j._hyp_map[(rid, vi, node)] = wid
                j._rev[wid] = ("hyp", rid, vi, node)
    return j
