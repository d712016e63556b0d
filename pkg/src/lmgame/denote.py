"""Interpretation of typed lambda-mu terms as innocent strategies.

A judgment ``Gamma |- M : A | Delta`` denotes a view function on the arena
``sum(Gamma) -> A x prod(Delta)``.  The interpreter is compositional in the
typing derivation:

* variables are linked copycats from the conclusion into the hypothesis;
* lambda, mu, pairing, projection and first-order abstraction are
  re-addressings of the premise's judgment arena (the arenas involved are
  equal on the nose up to node numbering and root label bookkeeping);
* application, naming ``[alpha]M`` and instantiation ``M{t}`` compose the
  premise against a fixed mediator copycat through the interaction machine.

Mediators exploit that in a view every O-move is justified by the preceding
move, so the copycat pairing can be read off locally: the answer to an
O-move sits under the partner of its parent occurrence, and only moves
entering a product directly under a root need explicit slot routing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import (
    Arena,
    JArena,
    a_concat,
    a_graft,
    a_merge,
    build_judgment,
    interp_arena,
)
from .compose import compose
from .plays import MoveOcc, Play, view_of
from .strategy import ViewFunction, copycat, materialize
from .syntax import (
    And,
    App,
    FoLam,
    FoTerm,
    FoVar,
    Formula,
    Forall,
    Imp,
    Inst,
    Lam,
    LmTerm,
    Mu,
    Named,
    Pair,
    Proj,
    Star,
    Top,
    Bot,
    Var,
    fo_map,
    formula_open,
    gensym,
    open_fo,
    open_lam,
    open_mu,
)
from .typing import typecheck

__all__ = ["denote"]


### product addressing


@dataclass
class _Prod:
    arena: Arena
    facts: list[Arena]
    nmap: dict
    combos: list[tuple[int, ...]]
    root_combo: dict[int, tuple[int, ...]]
    nonroot: dict[int, tuple[int, int, tuple[int, ...]]]
    root_id: dict[tuple[int, ...], int]

    def fo_off(self, combo: tuple[int, ...], k: int) -> int:
        return sum(len(self.facts[j].nodes[combo[j]].fo) for j in range(k))

    def at_off(self, combo: tuple[int, ...], k: int) -> int:
        return sum(len(self.facts[j].nodes[combo[j]].at) for j in range(k))


def _prod(facts: list[Arena]) -> _Prod:
    arena, nmap, combos = a_merge(facts)
    root_combo: dict[int, tuple[int, ...]] = {}
    nonroot: dict[int, tuple[int, int, tuple[int, ...]]] = {}
    root_id: dict[tuple[int, ...], int] = {}
    for (pi, j, combo), nid in nmap.items():
        if facts[pi].nodes[j].parent is None:
            root_combo[nid] = combo
            root_id[combo] = nid
        else:
            nonroot[nid] = (pi, j, combo)
    return _Prod(arena, facts, nmap, combos, root_combo, nonroot, root_id)


def _cc_mu(board: Arena, node: int, pos: int) -> tuple:
    return tuple((pos, k) for k in range(len(board.nodes[node].at)))


### mediators


def _prod_mediator(
    packD: _Prod,
    packC: _Prod,
    pick: list[int],
    prep0: tuple[FoTerm, ...] = (),
) -> ViewFunction:
    """Copycat ``merge(factsD) -> merge(factsC)``.

    ``pick[i]`` names the codomain factor whose root choice and root label
    slots feed domain factor ``i`` (duplicated factors implement
    contraction); ``prep0`` holds literal terms for extra leading slots of
    domain factor 0 (the instantiation mediator pushes the witness there).
    Factor arenas routed onto each other must share node numbering.
    """
    board, fE, tE = a_graft(packD.arena, packC.arena)
    revT = {v: k for k, v in tE.items()}
    revF = {v: k for k, v in fE.items()}

    def respond(v: Play, m: MoveOcc) -> MoveOcc:
        if not v:
            cc = packC.root_combo[revT[m.node]]
            dcombo = tuple(cc[pick[i]] for i in range(len(packD.facts)))
            inst: list[FoTerm] = []
            mu: list[tuple[int, int]] = []
            for i, df in enumerate(packD.facts):
                nfo = len(df.nodes[dcombo[i]].fo)
                nat = len(df.nodes[dcombo[i]].at)
                if i == 0:
                    inst.extend(prep0)
                    nfo -= len(prep0)
                off = packC.fo_off(cc, pick[i])
                inst.extend(m.inst[off + l] for l in range(nfo))
                offa = packC.at_off(cc, pick[i])
                mu.extend((0, offa + l) for l in range(nat))
            node = fE[(packD.root_id[dcombo], revT[m.node])]
            return MoveOcc(node, 0, tuple(mu), tuple(inst))
        p = v[m.justifier]
        if m.node in revF:
            dnode, _ = revF[m.node]
            if packD.arena.nodes[dnode].parent in packD.root_combo:
                pi, fnode, _dc = packD.nonroot[dnode]
                cc = packC.root_combo[revT[v[0].node]]
                node = tE[packC.nmap[(pick[pi], fnode, cc)]]
                return MoveOcc(node, 0, _cc_mu(board, node, len(v)), m.inst)
        q = v[m.justifier - 1]
        node = board.children[q.node][board.children[p.node].index(m.node)]
        return MoveOcc(node, m.justifier - 1, _cc_mu(board, node, len(v)), m.inst)

    return materialize(board, respond)


def _eval_mediator(iA: Arena, iB: Arena, deltas: list[Arena]):
    """The application mediator ``(A->B) x P + A x P -> B x P``.

    Answers a question on B inside the function premise, routes the
    function's probes of A to a fresh argument thread, and fuses both
    premises' context components onto the codomain's (contraction on P).
    """
    AB, fi, ti = a_graft(iA, iB)
    p1 = _prod([AB] + deltas)
    p2 = _prod([iA] + deltas)
    pc = _prod([iB] + deltas)
    DD, dparts = a_concat([p1.arena, p2.arena])
    board, fE, tE = a_graft(DD, pc.arena)
    revT = {v: k for k, v in tE.items()}
    revF = {v: k for k, v in fE.items()}
    invd0 = {v: k for k, v in dparts[0].items()}
    invd1 = {v: k for k, v in dparts[1].items()}
    rev_ti = {v: k for k, v in ti.items()}
    rev_fi = {v: k for k, v in fi.items()}

    def respond(v: Play, m: MoveOcc) -> MoveOcc:
        if not v:
            cc = pc.root_combo[revT[m.node]]
            c1 = (ti[cc[0]],) + tuple(cc[1:])
            node = fE[(dparts[0][p1.root_id[c1]], revT[m.node])]
            return MoveOcc(node, 0, _cc_mu(board, node, 0), m.inst)
        p = v[m.justifier]
        if m.node in revF:
            dd, _ = revF[m.node]
            part, pnode = (0, invd0[dd]) if dd in invd0 else (1, invd1[dd])
            pk = p1 if part == 0 else p2
            if pk.arena.nodes[pnode].parent in pk.root_combo:
                pi, fnode, _dc = pk.nonroot[pnode]
                cc = pc.root_combo[revT[v[0].node]]
                if part == 0 and pi == 0:
                    bnode = rev_ti.get(fnode)
                    if bnode is not None:
                        node = tE[pc.nmap[(0, bnode, cc)]]
                        return MoveOcc(node, 0, _cc_mu(board, node, len(v)), m.inst)
                    anode, _b0 = rev_fi[fnode]
                    # the function probes its argument: open a fresh thread
                    c2 = (anode,) + tuple(cc[1:])
                    node = fE[(dparts[1][p2.root_id[c2]], revT[v[0].node])]
                    inst = list(m.inst)
                    mu = [(len(v), k) for k in range(len(iA.nodes[anode].at))]
                    for k in range(1, len(pc.facts)):
                        off = pc.fo_off(cc, k)
                        nfo = len(pc.facts[k].nodes[cc[k]].fo)
                        inst.extend(v[0].inst[off + l] for l in range(nfo))
                        offa = pc.at_off(cc, k)
                        nat = len(pc.facts[k].nodes[cc[k]].at)
                        mu.extend((0, offa + l) for l in range(nat))
                    return MoveOcc(node, 0, tuple(mu), tuple(inst))
                if part == 1 and pi == 0:
                    # argument answers sit under the probing occurrence
                    q = v[m.justifier - 1]
                    node = board.children[q.node][board.children[p.node].index(m.node)]
                    return MoveOcc(node, m.justifier - 1, _cc_mu(board, node, len(v)), m.inst)
                node = tE[pc.nmap[(pi, fnode, cc)]]
                return MoveOcc(node, 0, _cc_mu(board, node, len(v)), m.inst)
        q = v[m.justifier - 1]
        node = board.children[q.node][board.children[p.node].index(m.node)]
        return MoveOcc(node, m.justifier - 1, _cc_mu(board, node, len(v)), m.inst)

    return materialize(board, respond), p1.arena, p2.arena, pc.arena, DD


### structural combinators


def _var_vf(ja: JArena, name: str) -> ViewFunction:
    """Copycat between the conclusion component and one hypothesis copy."""
    vi = [nm for nm, _ in ja.gamma].index(name)
    fa = ja.factor_arenas[0]
    board = ja.arena

    def respond(v: Play, m: MoveOcc) -> MoveOcc:
        if not v:
            combo = ja.classify(m.node)[1]
            aroot = combo[0]
            node = ja.hyp_node(m.node, vi, aroot)
            nfo = len(fa.nodes[aroot].fo)
            nat = len(fa.nodes[aroot].at)
            return MoveOcc(node, 0, tuple((0, k) for k in range(nat)), m.inst[:nfo])
        p = v[m.justifier]
        kp = ja.classify(p.node)
        if kp[0] == "hyp" and fa.nodes[kp[3]].parent is None:
            # under the hypothesis root: answer in the conclusion component
            combo = ja.classify(kp[1])[1]
            node = ja.concl_node(combo, 0, ja.classify(m.node)[3])
            return MoveOcc(node, 0, _cc_mu(board, node, len(v)), m.inst)
        q = v[m.justifier - 1]
        node = board.children[q.node][board.children[p.node].index(m.node)]
        return MoveOcc(node, m.justifier - 1, _cc_mu(board, node, len(v)), m.inst)

    return materialize(board, respond)


def _diag(SG: Arena) -> tuple[ViewFunction, Arena]:
    """Diagonal copycat ``SG -> SG + SG``."""
    DD, parts = a_concat([SG, SG])
    arrow, fmap, tmap = a_graft(SG, DD)
    cod_of = {v: k for k, v in tmap.items()}
    dom_of = {v: k for k, v in fmap.items()}
    inv0 = {v: k for k, v in parts[0].items()}
    inv1 = {v: k for k, v in parts[1].items()}

    def partner(vm: Play, node: int) -> int:
        troot = cod_of[vm[0].node]
        if node in cod_of:
            dd = cod_of[node]
            g = inv0[dd] if dd in inv0 else inv1[dd]
            return fmap[(g, troot)]
        g, _ = dom_of[node]
        dd = parts[0][g] if troot in inv0 else parts[1][g]
        return tmap[dd]

    return copycat(arrow, partner), DD


def _sum_embed(
    sM: ViewFunction, sN: ViewFunction, SG: Arena, P1: Arena, P2: Arena
) -> tuple[ViewFunction, Arena]:
    """``sM + sN`` on ``SG + SG -> P1 + P2``, by re-numbering views."""
    DD, dparts = a_concat([SG, SG])
    CC, cparts = a_concat([P1, P2])
    arrow, fmapB, tmapB = a_graft(DD, CC)
    views: list[Play] = []
    for sig, Pi, di, ci in ((sM, P1, 0, 0), (sN, P2, 1, 1)):
        arr, fmap, tmap = a_graft(SG, Pi)
        if sig.arena != arr:
            raise ValueError("premise strategy is not on its judgment arena")
        nmap = {v: tmapB[cparts[ci][p]] for p, v in tmap.items()}
        nmap.update(
            {v: fmapB[(dparts[di][g], cparts[ci][r])] for (g, r), v in fmap.items()}
        )
        for w in sig.views:
            views.append(
                tuple(MoveOcc(nmap[m.node], m.justifier, m.mu, m.inst) for m in w)
            )
    return ViewFunction(arrow, views), CC


def _mapped(sigma: ViewFunction, target: Arena, fmove) -> ViewFunction:
    """Transport a view function along a per-move re-addressing."""
    views = []
    for w in sigma.views:
        moves = tuple(fmove(w, i, m) for i, m in enumerate(w))
        views.append(view_of(target, moves))
    return ViewFunction(target, views)


def _subst_pvar(t: FoTerm, name: str, repl: FoTerm) -> FoTerm:
    def go(leaf, _d):
        if isinstance(leaf, FoVar) and leaf.cls == "P" and leaf.name == name:
            return repl
        return leaf

    return fo_map(t, go)


### the interpreter


class _Denote:
    def __init__(self) -> None:
        self.ja_cache: dict = {}

    def judgment(self, g: dict[str, Formula], A: Formula, d: dict[str, Formula]) -> JArena:
        key = (tuple(sorted(g.items())), A, tuple(sorted(d.items())))
        if key not in self.ja_cache:
            self.ja_cache[key] = build_judgment(list(g.items()), A, list(d.items()))
        return self.ja_cache[key]

    def go(self, g: dict[str, Formula], d: dict[str, Formula], M: LmTerm, A: Formula) -> ViewFunction:
        ja = self.judgment(g, A, d)
        out = self._go(ja, g, d, M, A)
        if out.arena != ja.arena:
            raise AssertionError("denotation landed on the wrong judgment arena")
        return out

    def _go(self, ja: JArena, g, d, M: LmTerm, A: Formula) -> ViewFunction:
        match M:
            case Var(str() as nm):
                return _var_vf(ja, nm)
            case Star():
                return ViewFunction(ja.arena, [()])
            case Lam(_, _, body) if isinstance(A, Imp):
                a = gensym("_a")
                sub = self.go(g | {a: A.left}, d, open_lam(body, Var(a)), A.right)
                return self._lam(sub, g, d, a, A)
            case Pair(l, r) if isinstance(A, And):
                sl = self.go(g, d, l, A.left)
                sr = self.go(g, d, r, A.right)
                return self._pair(sl, sr, g, d, A)
            case Proj(i, body):
                ts = self.synth(g, d, body)
                sub = self.go(g, d, body, ts)
                return self._proj(sub, g, d, ts, i)
            case Named(str() as al, body):
                sub = self.go(g, d, body, d[al])
                return self._named(sub, g, d, al)
            case Mu(_, _, body) :
                al = gensym("_mu")
                sub = self.go(g, d | {al: A}, open_mu(body, al), Bot())
                return self._mu(sub, g, d, al, A)
            case FoLam(_, body) if isinstance(A, Forall):
                y = gensym("_y")
                opened = formula_open(A.body, FoVar("P", y))
                sub = self.go(g, d, open_fo(body, FoVar("P", y)), opened)
                return self._folam(sub, g, d, y, A, opened)
            case Inst(body, t):
                ts = self.synth(g, d, body)
                sub = self.go(g, d, body, ts)
                return self._inst(sub, g, d, ts, t)
            case App(fn, arg):
                tf = self.synth(g, d, fn)
                sf = self.go(g, d, fn, tf)
                sx = self.go(g, d, arg, tf.left)
                return self._app(sf, sx, g, d, tf)
        raise TypeError(f"no denotation rule for {M!r} at {A!r}")

    def synth(self, g, d, M: LmTerm) -> Formula:
        return typecheck(g, M, d)[0]

    # rule bodies

    def _gsum(self, g: dict[str, Formula]) -> Arena:
        return a_concat([interp_arena(F) for _, F in sorted(g.items())])[0]

    def _deltas(self, d: dict[str, Formula]) -> list[Arena]:
        return [interp_arena(F) for _, F in sorted(d.items())]

    def _lam(self, sub: ViewFunction, g, d, a: str, A: Imp) -> ViewFunction:
        cja = self.judgment(g | {a: A.left}, A.right, d)
        pja = self.judgment(g, A, d)
        _, fi, ti = a_graft(interp_arena(A.left), interp_arena(A.right))
        gn_c = [nm for nm, _ in cja.gamma]
        gn_p = [nm for nm, _ in pja.gamma]
        vi_a = gn_c.index(a)
        nmap: dict[int, int] = {}
        for nid, kind in cja._rev.items():
            match kind:
                case ("croot", cc):
                    nmap[nid] = pja.croot((ti[cc[0]],) + tuple(cc[1:]))
                case ("concl", cc, 0, fnode):
                    nmap[nid] = pja.concl_node((ti[cc[0]],) + tuple(cc[1:]), 0, ti[fnode])
                case ("concl", cc, k, fnode):
                    nmap[nid] = pja.concl_node((ti[cc[0]],) + tuple(cc[1:]), k, fnode)
                case ("hyp", crid, vi, fnode):
                    cc = cja.classify(crid)[1]
                    pc = (ti[cc[0]],) + tuple(cc[1:])
                    if vi == vi_a:
                        nmap[nid] = pja.concl_node(pc, 0, fi[(fnode, cc[0])])
                    else:
                        nmap[nid] = pja.hyp_node(pja.croot(pc), gn_p.index(gn_c[vi]), fnode)
        return _mapped(
            sub, pja.arena, lambda w, i, m: MoveOcc(nmap[m.node], m.justifier, m.mu, m.inst)
        )

    def _pair(self, sl: ViewFunction, sr: ViewFunction, g, d, A: And) -> ViewFunction:
        pja = self.judgment(g, A, d)
        big, parts = a_concat([sl.arena, sr.arena])
        if big != pja.arena:
            raise AssertionError("conjunction judgment arena is not the concatenation")
        views: list[Play] = []
        for sig, pm in ((sl, parts[0]), (sr, parts[1])):
            for w in sig.views:
                views.append(
                    tuple(MoveOcc(pm[m.node], m.justifier, m.mu, m.inst) for m in w)
                )
        return ViewFunction(pja.arena, views)

    def _proj(self, sub: ViewFunction, g, d, ts: And, i: int) -> ViewFunction:
        side = ts.left if i == 1 else ts.right
        pja = self.judgment(g, side, d)
        oja = self.judgment(g, ts.left, d)
        rja = self.judgment(g, ts.right, d)
        big, parts = a_concat([oja.arena, rja.arena])
        if big != sub.arena:
            raise AssertionError("conjunction judgment arena is not the concatenation")
        inv = {v: k for k, v in parts[i - 1].items()}
        views = [
            tuple(MoveOcc(inv[m.node], m.justifier, m.mu, m.inst) for m in w)
            for w in sub.views
            if not w or w[0].node in inv
        ]
        return ViewFunction(pja.arena, views)

    def _named(self, sub: ViewFunction, g, d, al: str) -> ViewFunction:
        A = d[al]
        names = [nm for nm, _ in sorted(d.items())]
        deltas = self._deltas(d)
        pos = 1 + names.index(al)
        packD = _prod([interp_arena(A)] + deltas)
        packC = _prod([interp_arena(Bot())] + deltas)
        med = _prod_mediator(packD, packC, [pos] + list(range(1, len(deltas) + 1)))
        return compose(self._gsum(g), packD.arena, packC.arena, sub, med)

    def _mu(self, sub: ViewFunction, g, d, al: str, A: Formula) -> ViewFunction:
        cja = self.judgment(g, Bot(), d | {al: A})
        pja = self.judgment(g, A, d)
        cn = [nm for nm, _ in cja.delta]
        pn = [nm for nm, _ in pja.delta]
        kmap = {1 + j: (0 if nm == al else 1 + pn.index(nm)) for j, nm in enumerate(cn)}
        inv_k = {v: k for k, v in kmap.items()}
        inv_k.setdefault(0, 1 + cn.index(al))

        def combo_map(cc: tuple[int, ...]) -> tuple[int, ...]:
            pc = [0] * (1 + len(pn))
            for j in range(len(cn)):
                pc[kmap[1 + j]] = cc[1 + j]
            return tuple(pc)

        nmap: dict[int, int] = {}
        fo_src: dict[int, list[int]] = {}
        at_dst: dict[int, dict[int, int]] = {}
        for nid, kind in cja._rev.items():
            match kind:
                case ("croot", cc):
                    pc = combo_map(cc)
                    nmap[nid] = pja.croot(pc)
                    src, dst = [], {}
                    for kp in range(len(pja.factor_arenas)):
                        kc = inv_k[kp]
                        off = cja.fo_offset(cc, kc)
                        src += [off + l for l in range(len(pja.factor_arenas[kp].nodes[pc[kp]].fo))]
                        offa_c = cja.at_offset(cc, kc)
                        offa_p = pja.at_offset(pc, kp)
                        for l in range(len(pja.factor_arenas[kp].nodes[pc[kp]].at)):
                            dst[offa_c + l] = offa_p + l
                    fo_src[nid] = src
                    at_dst[nid] = dst
                case ("concl", cc, k, fnode):
                    nmap[nid] = pja.concl_node(combo_map(cc), kmap[k], fnode)
                case ("hyp", crid, vi, fnode):
                    cc = cja.classify(crid)[1]
                    nmap[nid] = pja.hyp_node(pja.croot(combo_map(cc)), vi, fnode)

        def fmove(w: Play, i: int, m: MoveOcc) -> MoveOcc:
            inst = m.inst
            if m.node in fo_src:
                inst = tuple(m.inst[s] for s in fo_src[m.node])
            # rebuild mu in the permuted slot order, remapping link targets
            perm = at_dst.get(m.node)
            n_at = len(m.mu)
            new_mu: list = [None] * n_at
            for k, link in enumerate(m.mu):
                slot = perm[k] if perm else k
                if link is None:
                    new_mu[slot] = None
                else:
                    t, s = link
                    tperm = at_dst.get(w[t].node)
                    new_mu[slot] = (t, tperm[s] if tperm else s)
            return MoveOcc(nmap[m.node], m.justifier, tuple(new_mu), inst)

        return _mapped(sub, pja.arena, fmove)

    def _folam(self, sub: ViewFunction, g, d, y: str, A: Forall, opened: Formula) -> ViewFunction:
        pja = self.judgment(g, A, d)
        cja = self.judgment(g, opened, d)
        if len(cja.arena) != len(pja.arena):
            raise AssertionError("quantifier judgment arenas disagree")
        marker = FoVar("O", "@q")
        views: list[Play] = []
        for w in sub.views:
            moves = []
            for i, m in enumerate(w):
                inst = tuple(_subst_pvar(t, y, marker) for t in m.inst)
                if i == 0:
                    inst = (marker,) + inst
                moves.append(MoveOcc(m.node, m.justifier, m.mu, inst))
            views.append(view_of(pja.arena, tuple(moves)))
        return ViewFunction(pja.arena, views)

    def _inst(self, sub: ViewFunction, g, d, ts: Forall, t: FoTerm) -> ViewFunction:
        deltas = self._deltas(d)
        packD = _prod([interp_arena(ts)] + deltas)
        packC = _prod([interp_arena(formula_open(ts.body, t))] + deltas)
        med = _prod_mediator(packD, packC, list(range(len(deltas) + 1)), prep0=(t,))
        return compose(self._gsum(g), packD.arena, packC.arena, sub, med)

    def _app(self, sf: ViewFunction, sx: ViewFunction, g, d, tf: Imp) -> ViewFunction:
        SG = self._gsum(g)
        deltas = self._deltas(d)
        iA = interp_arena(tf.left)
        iB = interp_arena(tf.right)
        med, P1, P2, C, DD = _eval_mediator(iA, iB, deltas)
        dd, DD2 = _diag(SG)
        summed, CC = _sum_embed(sf, sx, SG, P1, P2)
        step = compose(SG, DD2, CC, dd, summed)
        return compose(SG, CC, C, step, med)


def denote(
    M: LmTerm,
    goal: Formula | None = None,
    gamma: dict[str, Formula] | None = None,
    delta: dict[str, Formula] | None = None,
) -> ViewFunction:
    """The innocent strategy of a typed term on its judgment arena.

    The term is elaborated first; for closed terms the judgment arena is the
    arena of the (inferred or given) type itself.
    """
    g = dict(gamma or {})
    d = dict(delta or {})
    ty, el = typecheck(g, M, d, goal)
    return _Denote().go(g, d, el, ty)
