"""Question/answer presentation of propositional arenas and strategies.

A QA-arena is an arena without first-order labels whose labelled nodes are
*answers*: each carries exactly one atom and is a non-root leaf.  Unlabelled
nodes are *questions*.  Unfolding turns an ordinary propositional arena into
a QA-arena by pushing every atomic-label element onto a fresh answer leaf
below its node; on strategies, each mu-pointer becomes a pair of answer
moves appended to the view.  Folding inverts both constructions; on
strategies it is defined for total label-rigid view functions, where the
mu-pointers of a Player move are recovered by probing the strategy with the
answers below it.

The same unfolding acts on syntax as a translation from the lambda-mu
calculus to the pure lambda calculus: a mu-variable alpha of type
A1 -> ... -> An -> R becomes lambda-variables alpha_1 ... alpha_n (plus
alpha : R when R is an atom), namings become applications to them, and
mu-abstractions become lambda-abstractions over them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import ANode, Arena
from .plays import MoveOcc, Play
from .strategy import ViewFunction, is_total
from .syntax import (
    App,
    Atom,
    Bot,
    Formula,
    Imp,
    Lam,
    LmTerm,
    Mu,
    Named,
    Var,
    close_lam,
    gensym,
    open_lam,
    open_mu,
)
from .typing import typecheck

QAArena = Arena


### arenas


def is_answer(A: Arena, n: int) -> bool:
    return bool(A.nodes[n].at)


def is_qa_arena(A: Arena) -> bool:
    try:
        _require_qa(A)
    except ValueError:
        return False
    return True


def _require_qa(A: Arena) -> None:
    for n in A.nodes:
        if n.fo:
            raise ValueError(f"QA-arena has a first-order label at node {n.id}")
        if not n.at:
            continue
        if len(n.at) != 1:
            raise ValueError(f"QA-arena answer {n.id} must carry exactly one atom")
        if A.children[n.id]:
            raise ValueError(f"QA-arena answer {n.id} must be a leaf")
        if n.parent is None:
            raise ValueError(f"QA-arena answer {n.id} must not be a root")


def _mk(parents: list[int | None], ats: list[tuple[Atom, ...]]) -> Arena:
    children: list[list[int]] = [[] for _ in parents]
    for i, p in enumerate(parents):
        if p is not None:
            children[p].append(i)
    nodes = tuple(ANode(i, parents[i], (), ats[i]) for i in range(len(parents)))
    roots = tuple(i for i, p in enumerate(parents) if p is None)
    return Arena(nodes, roots, tuple(tuple(c) for c in children))


def _answer_ids(A: Arena) -> dict[tuple[int, int], int]:
    """Id of the answer leaf created for label slot (node, k) by unfolding."""
    out: dict[tuple[int, int], int] = {}
    nxt = len(A)
    for n in A.nodes:
        for k in range(len(n.at)):
            out[(n.id, k)] = nxt
            nxt += 1
    return out


def unfold_arena(A: Arena) -> QAArena:
    """Move every atomic-label element onto a fresh answer leaf.

    Questions keep their ids; the answer for slot k of node m gets id
    len(A) + rank of (m, k), so folding back is the identity on ids.
    """
    parents: list[int | None] = [n.parent for n in A.nodes]
    ats: list[tuple[Atom, ...]] = [() for _ in A.nodes]
    for n in A.nodes:
        if n.fo:
            raise ValueError(f"unfold_arena: first-order label at node {n.id}")
        for a in n.at:
            parents.append(n.id)
            ats.append((a,))
    return _mk(parents, ats)


def fold_arena(Q: QAArena) -> Arena:
    """Drop the answers, putting each label back on its father."""
    _require_qa(Q)
    questions = [n.id for n in Q.nodes if not n.at]
    qmap = {q: k for k, q in enumerate(questions)}
    parents: list[int | None] = []
    ats: list[tuple[Atom, ...]] = []
    for q in questions:
        node = Q.nodes[q]
        parents.append(None if node.parent is None else qmap[node.parent])
        ats.append(tuple(Q.nodes[c].at[0] for c in Q.children[q] if Q.nodes[c].at))
    return _mk(parents, ats)


### strategies


def _strip_mu(v: Play) -> Play:
    return tuple(MoveOcc(m.node, m.justifier, (), ()) for m in v)


def unfold_strategy(sigma: ViewFunction) -> ViewFunction:
    """The union of the unfoldings of the views of ``sigma``.

    Each even view contributes itself without mu-pointers, plus one
    answer-pair extension per mu-link of its final move: Opponent opens the
    answer below that move and Player replies with the answer below the
    link's target slot, justified by the target occurrence.
    """
    A = sigma.arena
    Q = unfold_arena(A)
    ans = _answer_ids(A)
    out: set[Play] = set()
    for v in sigma.views:
        base = _strip_mu(v)
        out.add(base)
        if not v:
            continue
        n = v[-1]
        i = len(v)
        for slot, link in enumerate(n.mu):
            j, tslot = link
            oa = MoveOcc(ans[(n.node, slot)], i - 1, (None,), ())
            pa = MoveOcc(ans[(v[j].node, tslot)], j, ((i, 0),), ())
            out.add(base + (oa, pa))
    return ViewFunction(Q, out)


def fold_strategy(tau: ViewFunction) -> ViewFunction:
    """Fold the question-ending views of a total label-rigid strategy.

    The mu-pointer of a Player move n for its label slot k is read off the
    unique answer pair of tau after n: the Player answer there points to the
    occurrence the slot is linked with.  Raises ValueError when tau is not
    label-rigid or not total.
    """
    Q = tau.arena
    _require_qa(Q)
    if not qa_classify(tau).label_rigid:
        raise ValueError("fold_strategy needs a label-rigid strategy")
    if not is_total(tau):
        raise ValueError("fold_strategy needs a total strategy")
    A = fold_arena(Q)
    qmap = {n.id: k for k, n in enumerate(nd for nd in Q.nodes if not nd.at)}
    below = {
        q.id: tuple(c for c in Q.children[q.id] if Q.nodes[c].at)
        for q in Q.nodes
        if not q.at
    }
    slot_of = {c: k for cs in below.values() for k, c in enumerate(cs)}
    out: list[Play] = []
    for v in tau.views:
        if any(is_answer(Q, m.node) for m in v):
            continue
        out.append(_fold_view(tau, qmap, below, slot_of, v))
    return ViewFunction(A, out)


def _fold_view(
    tau: ViewFunction,
    qmap: dict[int, int],
    below: dict[int, tuple[int, ...]],
    slot_of: dict[int, int],
    v: Play,
) -> Play:
    out: list[MoveOcc] = []
    for i in range(0, len(v), 2):
        m, n = v[i], v[i + 1]
        out.append(MoveOcc(qmap[m.node], m.justifier, (None,) * len(below[m.node]), ()))
        links: list[tuple[int, int]] = []
        for a in below[n.node]:
            probe = v[: i + 2] + (MoveOcc(a, i + 1, (None,), ()),)
            r = tau.respond(probe)
            if r is None:
                raise ValueError("fold_strategy needs a total strategy")
            links.append((r.justifier, slot_of[r.node]))
        out.append(MoveOcc(qmap[n.node], n.justifier, tuple(links), ()))
    return tuple(out)


### classification


@dataclass(frozen=True)
class QaFlags:
    rigid: bool
    label_rigid: bool
    well_bracketed: bool


def qa_classify(tau: ViewFunction) -> QaFlags:
    """Rigidity and bracketing of a view function on a QA-arena.

    A view is rigid when each Player move answers iff the Opponent move
    before it does, label-rigid when the two labels agree, and well
    bracketed when every Player answer is justified by the last Opponent
    question.
    """
    A = tau.arena
    rigid = labels = bracketed = True
    for v in tau.views:
        last_oq = None
        for i, m in enumerate(v):
            if i % 2 == 0:
                if not A.nodes[m.node].at:
                    last_oq = i
                continue
            pa, na = A.nodes[v[i - 1].node].at, A.nodes[m.node].at
            if bool(pa) != bool(na):
                rigid = False
            if pa != na:
                labels = False
            if na and m.justifier != last_oq:
                bracketed = False
    return QaFlags(rigid=rigid, label_rigid=rigid and labels, well_bracketed=bracketed)


### term translation


def _spine(A: Formula) -> tuple[list[Formula], Formula]:
    args: list[Formula] = []
    while isinstance(A, Imp):
        args.append(A.left)
        A = A.right
    return args, A


def _ttype(A: Formula) -> Formula:
    match A:
        case Bot():
            return A
        case Atom(rel, args):
            if args:
                raise ValueError(f"atom {rel} carries first-order arguments")
            return Imp(A, Bot())
        case Imp(left, right):
            return Imp(_ttype(left), _ttype(right))
        case _:
            raise ValueError("translation is restricted to atoms, bot and ->")


def _companions(D: Formula) -> tuple[list[Formula], Formula | None]:
    """Companion types for a mu-variable of type A1 -> ... -> An -> R."""
    args, r = _spine(D)
    match r:
        case Bot():
            return args, None
        case Atom(_, ()):
            return args, r
        case _:
            raise ValueError("translation is restricted to atoms, bot and ->")


def translate_lm_to_lambda(
    M: LmTerm,
    A: Formula,
    gamma: dict[str, Formula] | None = None,
    delta: dict[str, Formula] | None = None,
) -> tuple[LmTerm, Formula, dict[str, Formula]]:
    """Translate a simply typed lambda-mu term into a pure lambda term.

    Types map by X -> (X -> bot); a mu-variable alpha : A1 -> ... -> An -> R
    turns into lambda-variables alpha1 ... alphan (and alpha : R when R is
    an atom), so namings become applications and mu-binders lambdas.
    Returns the translated term, its type and the translated context, with
    the mu-context expanded into the lambda one.  Raises ValueError outside
    the propositional arrow fragment.
    """
    g = dict(gamma or {})
    d = dict(delta or {})
    _, el = typecheck(g, M, d, goal=A)
    ctx = {a: _ttype(G) for a, G in g.items()}
    env: dict[str, tuple[list[str], str | None]] = {}
    for al, D in d.items():
        args, r = _companions(D)
        names = [f"{al}{i + 1}" for i in range(len(args))]
        for nm, G in zip(names, args):
            if nm in ctx:
                raise ValueError(f"translated name {nm} clashes with the context")
            ctx[nm] = _ttype(G)
        if r is not None:
            if al in ctx:
                raise ValueError(f"translated name {al} clashes with the context")
            ctx[al] = r
        env[al] = (names, al if r is not None else None)
    return _trans(el, env), _ttype(A), ctx


def _trans(M: LmTerm, env: dict[str, tuple[list[str], str | None]]) -> LmTerm:
    match M:
        case Var(_):
            return M
        case Lam(h, ann, b):
            x = gensym("_qa")
            return Lam(h, _ttype(ann), close_lam(_trans(open_lam(b, Var(x)), env), x))
        case App(f, a):
            return App(_trans(f, env), _trans(a, env))
        case Named(ref, b):
            names, final = env[ref]
            out = _trans(b, env)
            for nm in names:
                out = App(out, Var(nm))
            if final is not None:
                out = App(out, Var(final))
            return out
        case Mu(h, ann, b):
            al = gensym("_qm")
            args, r = _companions(ann)
            names = [gensym("_qk") for _ in args]
            final = gensym("_qk") if r is not None else None
            out = _trans(open_mu(b, al), {**env, al: (names, final)})
            if final is not None:
                out = Lam(h, r, close_lam(out, final))
            for i in reversed(range(len(args))):
                out = Lam(f"{h}{i + 1}", _ttype(args[i]), close_lam(out, names[i]))
            return out
        case _:
            raise ValueError("translation is restricted to the lambda-mu fragment")
