"""Lambda-mu forests: the tree syntax between canonical terms and strategies.

A forest is an ordered tree family in which even-depth nodes have exactly
one son.  Odd nodes may carry a lambda-edge (to an even strict ancestor,
labelled with a 1-based premise index) and a mu-edge (to an even strict
ancestor); odd nodes without an edge carry the corresponding free variable
name instead.  Even nodes list the O-variables their component introduces,
odd nodes list the instantiation terms of their head.

Canonical terms translate to typed forests and back, and the branches of a
closed typed forest are exactly the views of the denotation.  The readback
of a total strategy is the composite strategy -> forest -> term, which is
kept strictly separate from the combinator route in ``denote``: the two
paths are compared, never merged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .arena import Arena, interp_arena
from .canon import conjuncts, is_canonical
from .plays import MoveOcc, Play, term_ovars
from .strategy import ViewFunction, is_total
from .syntax import (
    App,
    Bot,
    Forall,
    Formula,
    FoLam,
    FoTerm,
    FoVar,
    Imp,
    Inst,
    Lam,
    LmTerm,
    Mu,
    Named,
    Pair,
    Star,
    Var,
    formula_open,
    close_fo,
    close_lam,
    close_mu,
    gensym,
    open_fo,
    open_lam,
    open_mu,
    ovar,
)


@dataclass(frozen=True)
class FNode:
    id: int
    parent: int | None
    terms: tuple[FoTerm, ...]
    lam: tuple[int, int] | None = None  # (target node, premise label >= 1)
    mu: int | None = None  # target node
    lam_var: str | None = None
    mu_var: str | None = None
    formula: Formula | None = None


@dataclass(frozen=True)
class LmForest:
    nodes: tuple[FNode, ...]  # index = id, preorder
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
        """0 on even depth (component roots), 1 on odd depth (heads)."""
        return self.depth(i) % 2

    def ancestors(self, i: int) -> list[int]:
        out = []
        p = self.nodes[i].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def is_closed(self) -> bool:
        return all(n.lam_var is None and n.mu_var is None for n in self.nodes)

    def is_typed(self) -> bool:
        return all(n.formula is not None for n in self.nodes)


def erase_types(F: LmForest) -> LmForest:
    nodes = tuple(replace(n, formula=None) for n in F.nodes)
    return LmForest(nodes, F.roots, F.children)


def _build(nodes: list[dict]) -> LmForest:
    n = len(nodes)
    children: list[list[int]] = [[] for _ in range(n)]
    roots = [d["id"] for d in nodes if d["parent"] is None]
    for d in nodes:
        if d["parent"] is not None:
            children[d["parent"]].append(d["id"])
    packed = tuple(
        FNode(
            d["id"],
            d["parent"],
            tuple(d["terms"]),
            d.get("lam"),
            d.get("mu"),
            d.get("lam_var"),
            d.get("mu_var"),
            d.get("formula"),
        )
        for d in nodes
    )
    return LmForest(packed, tuple(roots), tuple(tuple(c) for c in children))


### well-formedness


def _open_all(A: Formula, args: tuple[FoTerm, ...]) -> tuple[list[str], list[Formula], Formula]:
    """Split forall x1..xk (B1 -> ... -> Bn -> R) and substitute args for the xs."""
    hints: list[str] = []
    k = 0
    while isinstance(A, Forall):
        if k >= len(args):
            raise ValueError("term list shorter than the quantifier prefix")
        hints.append(A.hint)
        A = formula_open(A.body, args[k])
        k += 1
    if k != len(args):
        raise ValueError("term list longer than the quantifier prefix")
    prems: list[Formula] = []
    while isinstance(A, Imp):
        prems.append(A.left)
        A = A.right
    return hints, prems, A


def check_forest(F: LmForest) -> None:
    """Raise ValueError unless F is a lambda-mu forest (typed checks only
    when every node carries a formula)."""
    for i, n in enumerate(F.nodes):
        if n.id != i:
            raise ValueError("node ids must be positional")
        pol = F.polarity(i)
        if pol == 0:
            if len(F.children[i]) != 1:
                raise ValueError(f"even node {i} must have exactly one son")
            if n.lam or n.mu is not None or n.lam_var or n.mu_var:
                raise ValueError(f"even node {i} cannot carry edges or labels")
            for t in n.terms:
                if not (isinstance(t, FoVar) and t.cls == "O"):
                    raise ValueError(f"even node {i} lists a non-O-variable")
        else:
            above = set(F.ancestors(i))
            for tgt in (n.lam[0] if n.lam else None, n.mu):
                if tgt is not None and (tgt not in above or F.polarity(tgt) != 0):
                    raise ValueError(f"edge from {i} must target an even ancestor")
            if n.lam and n.lam[1] < 1:
                raise ValueError("lambda-edge labels start at 1")
            if (n.lam is None) == (n.lam_var is None):
                raise ValueError(f"odd node {i} needs a lambda-edge or a lambda-variable")
            if n.mu is not None and n.mu_var is not None:
                raise ValueError(f"odd node {i} has both a mu-edge and a mu-variable")
            intro: list[str] = []
            for a in reversed(F.ancestors(i)):
                if F.polarity(a) == 0:
                    intro.extend(t.name for t in F.nodes[a].terms)  # type: ignore[union-attr]
            for t in n.terms:
                for o in term_ovars(t):
                    if o not in intro:
                        raise ValueError(f"odd node {i} uses O-variable {o} before introduction")

    def branch_ovars(i: int, seen: list[str]) -> None:
        here = list(seen)
        if F.polarity(i) == 0:
            here.extend(t.name for t in F.nodes[i].terms)  # type: ignore[union-attr]
            if here != [f"o{k}" for k in range(len(here))]:
                raise ValueError(f"branch O-variables at node {i} break the enumeration")
        for c in F.children[i]:
            branch_ovars(c, here)

    for r in F.roots:
        branch_ovars(r, [])
    if F.is_typed():
        _check_typed(F)


def _check_typed(F: LmForest) -> None:
    for i, n in enumerate(F.nodes):
        if not is_canonical(n.formula):
            raise ValueError(f"node {i} formula is not canonical")
        if F.polarity(i) == 0:
            _open_all(n.formula, n.terms)
        else:
            _, _, R = _open_all(n.formula, n.terms)
            named = n.mu is not None or n.mu_var is not None
            if (R == Bot()) == named:
                raise ValueError(f"node {i} final atom disagrees with its mu decoration")
            if n.lam:
                tgt = F.nodes[n.lam[0]]
                _, prems, _ = _open_all(tgt.formula, tgt.terms)
                if n.lam[1] > len(prems):
                    raise ValueError(f"lambda-edge label out of range at node {i}")
                if prems[n.lam[1] - 1] != n.formula:
                    raise ValueError(f"lambda-edge at node {i} breaks the premise formula")
            if n.mu is not None:
                tgt = F.nodes[n.mu]
                _, _, S = _open_all(tgt.formula, tgt.terms)
                if R != S:
                    raise ValueError(f"mu-edge at node {i} links distinct final atoms")
            _, prems, _ = _open_all(n.formula, n.terms)
            if len(F.children[i]) != len(prems):
                raise ValueError(f"node {i} has {len(F.children[i])} sons for {len(prems)} premises")
            for j, c in zip(range(len(prems)), F.children[i]):
                if F.nodes[c].formula != prems[j]:
                    raise ValueError(f"son {c} of node {i} breaks the premise formula")


### canonical term -> forest


def _peel_components(M: LmTerm) -> list[LmTerm]:
    if isinstance(M, Star):
        return []
    out: list[LmTerm] = []
    while isinstance(M, Pair):
        out.append(M.right)
        M = M.left
    out.append(M)
    out.reverse()
    return out


def forest_of_term(M: LmTerm, A: Formula | None = None) -> LmForest:
    """Forest of a term in canonical normal form, typed when A is given.

    The translation is purely structural; when A is supplied (canonical) the
    nodes are decorated with the formulas the typing discipline assigns, and
    any mismatch between the term shape and the type raises.
    """
    if A is not None and not is_canonical(A):
        raise ValueError("forest_of_term wants a canonical type")
    comps = _peel_components(M)
    types: list[Formula | None] = [None] * len(comps)
    if A is not None:
        cs = conjuncts(A)
        if len(cs) != len(comps):
            raise ValueError("component count differs from the conjunct count")
        types = list(cs)
    nodes: list[dict] = []

    def new_node(parent: int | None, terms: tuple[FoTerm, ...], formula: Formula | None) -> dict:
        d = {"id": len(nodes), "parent": parent, "terms": terms, "formula": formula}
        nodes.append(d)
        return d

    def component(M: LmTerm, A: Formula | None, parent: int | None, odepth: int,
                  lam_env: dict, mu_env: dict) -> None:
        ovars: list[FoVar] = []
        while isinstance(M, FoLam):
            v = ovar(odepth + len(ovars))
            ovars.append(v)
            M = open_fo(M.body, v)
        prems: list[Formula] | None = None
        R: Formula | None = None
        if A is not None:
            hints, prems, R = _open_all(A, tuple(ovars))
        r = new_node(parent, tuple(ovars), A)
        lam_env = dict(lam_env)
        k = 0
        while isinstance(M, Lam):
            k += 1
            name = gensym("_fa")
            prem = prems[k - 1] if prems is not None and k <= len(prems) else None
            lam_env[name] = (r["id"], k, prem)
            M = open_lam(M.body, Var(name))
        if prems is not None and k != len(prems):
            raise ValueError("lambda prefix shorter than the premises: not canonical")
        mu_env = dict(mu_env)
        if isinstance(M, Mu):
            aname = gensym("_fm")
            mu_env[aname] = r["id"]
            M = open_mu(M.body, aname)
            if R is not None and R == Bot():
                raise ValueError("mu binder on a bottom-ended component")
        elif R is not None and R != Bot():
            raise ValueError("missing mu binder: not canonical")
        beta: str | None = None
        if isinstance(M, Named):
            if not isinstance(M.ref, str):
                raise ValueError("mu reference escapes its binder")
            beta = M.ref
            M = M.body
        args: list[LmTerm] = []
        while isinstance(M, App):
            args.append(M.arg)
            M = M.fn
        args.reverse()
        insts: list[FoTerm] = []
        while isinstance(M, Inst):
            insts.append(M.arg)
            M = M.body
        insts.reverse()
        if not (isinstance(M, Var) and isinstance(M.ref, str)):
            raise ValueError("head is not a variable: not canonical")
        n = new_node(r["id"], tuple(insts), None)
        B: Formula | None = None
        if M.ref in lam_env:
            tgt, label, B = lam_env[M.ref]
            n["lam"] = (tgt, label)
        else:
            n["lam_var"] = M.ref
        if beta is not None:
            if beta in mu_env:
                n["mu"] = mu_env[beta]
            else:
                n["mu_var"] = beta
        son_types: list[Formula | None] = [None] * len(args)
        if B is not None:
            _, bprems, S = _open_all(B, tuple(insts))
            if len(bprems) != len(args):
                raise ValueError("head not fully applied: not canonical")
            if (S == Bot()) == (beta is not None):
                raise ValueError("naming disagrees with the head's final atom")
            n["formula"] = B
            son_types = list(bprems)
        for arg, ty in zip(args, son_types):
            component(arg, ty, n["id"], odepth + len(ovars), lam_env, mu_env)

    for comp, ty in zip(comps, types):
        component(comp, ty, None, 0, {}, {})
    F = _build(nodes)
    check_forest(F)
    return F


### typed forest -> canonical term


def term_of_forest(F: LmForest) -> LmTerm:
    """The unique canonical term of a typed forest (free names from labels)."""
    if not F.is_typed():
        raise ValueError("term_of_forest needs a typed forest")
    check_forest(F)

    def component(r: int, lam_names: dict, mu_names: dict) -> LmTerm:
        node = F.nodes[r]
        hints, prems, R = _open_all(node.formula, node.terms)
        anames = [gensym("_a") for _ in prems]
        alpha = gensym("_m")
        lam_names = dict(lam_names)
        lam_names[r] = anames
        mu_names = dict(mu_names)
        mu_names[r] = alpha
        n = F.nodes[F.children[r][0]]
        if n.lam:
            head = lam_names[n.lam[0]][n.lam[1] - 1]
        else:
            head = n.lam_var
        beta = mu_names[n.mu] if n.mu is not None else n.mu_var
        body: LmTerm = Var(head)
        for t in n.terms:
            body = Inst(body, t)
        for c in F.children[n.id]:
            body = App(body, component(c, lam_names, mu_names))
        if beta is not None:
            body = Named(beta, body)
        if R != Bot():
            body = Mu("al", None, close_mu(body, alpha))
        for name in reversed(anames):
            body = Lam("a", None, close_lam(body, name))
        for hint, v in reversed(list(zip(hints, node.terms))):
            body = FoLam(hint, close_fo(body, "O", v.name))  # type: ignore[union-attr]
        return body

    parts = [component(r, {}, {}) for r in F.roots]
    if not parts:
        return Star()
    out = parts[0]
    for p in parts[1:]:
        out = Pair(out, p)
    return out


### forest -> strategy


def _arena_map(F: LmForest, arena: Arena) -> dict[int, int]:
    """Forest nodes to arena nodes, per root index, lambda-edges and son ranks."""
    if len(F.roots) != len(arena.roots):
        raise ValueError("root count differs from the arena")
    amap: dict[int, int] = {}

    def place(i: int, move: int) -> None:
        node = F.nodes[i]
        an = arena.nodes[move]
        if len(node.terms) != len(an.fo) and F.polarity(i) == 0:
            raise ValueError(f"node {i} term list differs from the first-order label")
        amap[i] = move
        for rank, c in enumerate(F.children[i]):
            child = F.nodes[c]
            if F.polarity(c) == 1:
                if child.lam is None:
                    raise ValueError("strategies need a closed forest")
                tgt, label = child.lam
                enabled = arena.children[amap[tgt]]
                if label > len(enabled):
                    raise ValueError(f"lambda-edge label {label} exceeds the arena")
                place(c, enabled[label - 1])
            else:
                enabled = arena.children[move]
                if rank >= len(enabled):
                    raise ValueError(f"node {c} has no counterpart under the arena move")
                place(c, enabled[rank])

    for i, r in enumerate(F.roots):
        place(r, arena.roots[i])
    return amap


def strategy_of_forest(F: LmForest, A: Formula) -> ViewFunction:
    """Branches of a closed forest, read as views on the arena of A."""
    if not F.is_closed():
        raise ValueError("strategy_of_forest needs a closed forest")
    check_forest(F)
    if not is_canonical(A):
        raise ValueError("strategy_of_forest wants a canonical type")
    arena = interp_arena(A)
    amap = _arena_map(F, arena)

    views: list[Play] = []

    def walk(i: int, branch: list[int], pos: dict[int, int], moves: list[MoveOcc]) -> None:
        node = F.nodes[i]
        pos = dict(pos)
        pos[i] = len(branch)
        an = arena.nodes[amap[i]]
        if F.polarity(i) == 0:
            jus = None if not branch else len(branch) - 1
            m = MoveOcc(amap[i], jus, (None,) * len(an.at), node.terms)
        else:
            if (node.mu is not None) != (len(an.at) == 1):
                raise ValueError(f"mu-edge at node {i} disagrees with the atomic label")
            mu = ((pos[node.mu], 0),) if node.mu is not None else ()
            m = MoveOcc(amap[i], pos[node.lam[0]], mu, node.terms)
        moves = moves + [m]
        branch = branch + [i]
        if not F.children[i]:
            views.append(tuple(moves))
        for c in F.children[i]:
            walk(c, branch, pos, moves)

    for r in F.roots:
        walk(r, [], {}, [])
    return ViewFunction(arena, views)


### strategy -> forest


def forest_of_strategy(sigma: ViewFunction, A: Formula) -> LmForest:
    """View tree of a total strategy as a closed typed forest.

    Prefixes of views are the nodes; mu-pointers become mu-edges, so every
    atomic label in sight must be a singleton (the one-move restriction).
    """
    if not is_canonical(A):
        raise ValueError("forest_of_strategy wants a canonical type")
    arena = interp_arena(A)
    if sigma.arena != arena:
        raise ValueError("strategy does not live on the arena of the type")
    if any(len(n.at) > 1 for n in arena.nodes):
        raise ValueError("atomic labels must be singletons for forest readback")
    if not is_total(sigma):
        raise ValueError("only total strategies read back to closed forests")

    prefixes = {v[:i] for v in sigma.views for i in range(1, len(v) + 1)}
    nodes: list[dict] = []
    ids: dict[Play, int] = {}
    croots = conjuncts(A)

    def visit(p: Play, parent: int | None, formula: Formula) -> None:
        m = p[-1]
        d = {"id": len(nodes), "parent": parent, "terms": m.inst, "formula": formula}
        nodes.append(d)
        ids[p] = d["id"]
        if len(p) % 2 == 0:
            jus = p[: m.justifier + 1]
            label = arena.children[jus[-1].node].index(m.node) + 1
            d["lam"] = (ids[jus], label)
            if m.mu:
                (j, slot), = m.mu
                if slot != 0 or j % 2:
                    raise ValueError("mu-pointer outside the forest fragment")
                d["mu"] = ids[p[: j + 1]]
            _, prems, _ = _open_all(formula, m.inst)
            ranked = sorted(
                (q for q in prefixes if len(q) == len(p) + 1 and q[: len(p)] == p),
                key=lambda q: arena.children[m.node].index(q[-1].node),
            )
            if len(ranked) != len(prems):
                raise ValueError("view tree is narrower than the arena")
            for rank, q in enumerate(ranked):
                visit(q, d["id"], prems[rank])
        else:
            q = next(q for q in prefixes if len(q) == len(p) + 1 and q[: len(p)] == p)
            r = q[-1]
            tgt = nodes[ids[q[: r.justifier + 1]]]
            _, prems, _ = _open_all(tgt["formula"], tgt["terms"])
            label = arena.children[q[r.justifier].node].index(r.node) + 1
            visit(q, d["id"], prems[label - 1])

    heads = sorted((p for p in prefixes if len(p) == 1), key=lambda p: p[0].node)
    for p in heads:
        visit(p, None, croots[arena.roots.index(p[0].node)])
    F = _build(nodes)
    check_forest(F)
    return F


def readback(sigma: ViewFunction, A: Formula) -> LmTerm:
    """Canonical term of a total strategy on the arena of A."""
    return term_of_forest(forest_of_strategy(sigma, A))


### linearity over the tree of views


@dataclass(frozen=True)
class LinearityFlags:
    lambda_strategy: bool
    lambda_linear: bool
    mu_linear: bool
    mu_affine: bool


def classify_linearity(sigma: ViewFunction) -> LinearityFlags:
    """Pointer discipline of a view function, read off its tree of views.

    A lambda-strategy keeps every mu-pointer on the previous move and its
    atomic labels aligned with it; lambda-linearity asks for exactly one
    occurrence of each enabled Player move pointing at each Opponent
    occurrence; mu-linearity (affinity) for exactly (at most) one mu-pointer
    into each atomic label slot of each Opponent occurrence.
    """
    A = sigma.arena
    pviews = [v for v in sigma.views if v]
    lam_strat = all(
        len(A.nodes[v[-1].node].at) == len(A.nodes[v[-2].node].at)
        and all(link[0] == len(v) - 2 for link in v[-1].mu)
        for v in pviews
    )
    oocc = {v[:i] for v in sigma.views for i in range(1, len(v) + 1, 2)}
    lam_lin = True
    mu_lin = True
    mu_aff = True
    for p in oocc:
        m = p[-1]
        for c in A.children[m.node]:
            hits = sum(
                1
                for q in pviews
                if q[: len(p)] == p and q[-1].node == c and q[-1].justifier == len(p) - 1
            )
            lam_lin = lam_lin and hits == 1
        for k in range(len(A.nodes[m.node].at)):
            hits = sum(
                sum(1 for link in q[-1].mu if link == (len(p) - 1, k))
                for q in pviews
                if q[: len(p)] == p
            )
            mu_lin = mu_lin and hits == 1
            mu_aff = mu_aff and hits <= 1
    return LinearityFlags(lam_strat, lam_lin, mu_lin, mu_aff)
