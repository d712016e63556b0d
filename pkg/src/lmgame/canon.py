"""Canonical forms for formulas.

Ten oriented rewrite rules eliminate top and distribute arrows and
quantifiers over conjunction; the two commutation equations (commutativity
of /\\ and of adjacent foralls) are deliberately not oriented, so syntactic
canonical forms are unique only up to those, and cross-formula comparison
goes through arena isomorphism.

Termination is witnessed by the pair of measures (phi, psi), strictly
lexicographically decreasing on every step; this is asserted at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import And, Atom, Bot, Formula, Forall, Imp, Top, formula_map_fo, FoBound


# The termination measures are towers of exponentials; past this cap they
# saturate (descent is still guaranteed by the structure of the rules, the
# runtime assertion just stops checking to avoid astronomically large ints).
_CAP = 1 << 4096


def _spow(b: int, e: int) -> int:
    if b <= 1:
        return b
    if e * b.bit_length() > 4096:
        return _CAP
    return min(b**e, _CAP)


@dataclass(frozen=True)
class Measure:
    phi: int
    psi: int

    def key(self) -> tuple[int, int]:
        return (self.phi, self.psi)

    def exact(self) -> bool:
        return self.phi < _CAP and self.psi < _CAP


def measure(A: Formula) -> Measure:
    match A:
        case Top() | Bot() | Atom(_, _):
            return Measure(2, 2)
        case And(l, r):
            ml, mr = measure(l), measure(r)
            return Measure(
                min(2 * (ml.phi + 1) * mr.phi, _CAP), min(2 * (ml.psi + 1) * mr.psi, _CAP)
            )
        case Imp(l, r):
            ml, mr = measure(l), measure(r)
            return Measure(_spow(mr.phi, ml.phi), _spow(mr.psi, ml.psi))
        case Forall(_, b):
            m = measure(b)
            return Measure(_spow(m.phi, 2), min(2 * m.psi, _CAP))
    raise TypeError(A)


def _shift_free(A: Formula, by: int) -> Formula:
    """Shift indices pointing outside A (scope adjustment for rule 10)."""

    def go(leaf, d):
        if isinstance(leaf, FoBound) and leaf.k >= d:
            return FoBound(leaf.k + by)
        return leaf

    return formula_map_fo(A, go)


# rules return the rewritten formula or None; order matters (first match wins)


def _r1(A):  # A /\ (B /\ C) -> (A /\ B) /\ C
    if isinstance(A, And) and isinstance(A.right, And):
        return And(And(A.left, A.right.left), A.right.right)


def _r2(A):  # A /\ top -> A
    if isinstance(A, And) and isinstance(A.right, Top):
        return A.left


def _r3(A):  # top /\ A -> A
    if isinstance(A, And) and isinstance(A.left, Top):
        return A.right


def _r4(A):  # (A /\ B) -> C  =>  A -> (B -> C)
    if isinstance(A, Imp) and isinstance(A.left, And):
        return Imp(A.left.left, Imp(A.left.right, A.right))


def _r5(A):  # top -> A  =>  A
    if isinstance(A, Imp) and isinstance(A.left, Top):
        return A.right


def _r6(A):  # A -> (B /\ C)  =>  (A -> B) /\ (A -> C)
    if isinstance(A, Imp) and isinstance(A.right, And):
        return And(Imp(A.left, A.right.left), Imp(A.left, A.right.right))


def _r7(A):  # A -> top  =>  top
    if isinstance(A, Imp) and isinstance(A.right, Top):
        return Top()


def _r8(A):  # forall x (A /\ B)  =>  forall x A /\ forall x B
    if isinstance(A, Forall) and isinstance(A.body, And):
        return And(Forall(A.hint, A.body.left), Forall(A.hint, A.body.right))


def _r9(A):  # forall x top  =>  top
    if isinstance(A, Forall) and isinstance(A.body, Top):
        return Top()


def _r10(A):  # A -> forall x B  =>  forall x (A -> B)   (x not free in A)
    if isinstance(A, Imp) and isinstance(A.right, Forall):
        return Forall(A.right.hint, Imp(_shift_free(A.left, 1), A.right.body))


RULES = [
    ("and-assoc", _r1),
    ("and-top-r", _r2),
    ("and-top-l", _r3),
    ("curry", _r4),
    ("imp-top-l", _r5),
    ("imp-and", _r6),
    ("imp-top-r", _r7),
    ("forall-and", _r8),
    ("forall-top", _r9),
    ("imp-forall", _r10),
]


@dataclass(frozen=True)
class RewriteStep:
    rule: str
    path: tuple[int, ...]  # 0 = left/body, 1 = right
    before: Formula
    after: Formula


def _subformula(A: Formula, path: tuple[int, ...]) -> Formula:
    for i in path:
        match A:
            case Imp(l, r) | And(l, r):
                A = l if i == 0 else r
            case Forall(_, b):
                A = b
            case _:
                raise IndexError(path)
    return A


def _replace(A: Formula, path: tuple[int, ...], B: Formula) -> Formula:
    if not path:
        return B
    i, rest = path[0], path[1:]
    match A:
        case Imp(l, r):
            return Imp(_replace(l, rest, B), r) if i == 0 else Imp(l, _replace(r, rest, B))
        case And(l, r):
            return And(_replace(l, rest, B), r) if i == 0 else And(l, _replace(r, rest, B))
        case Forall(h, b):
            return Forall(h, _replace(b, rest, B))
    raise IndexError(path)


def _find_redex(A: Formula, path: tuple[int, ...] = ()) -> tuple[tuple[int, ...], str, Formula] | None:
    # innermost first: children before the root
    match A:
        case Imp(l, r) | And(l, r):
            hit = _find_redex(l, path + (0,))
            if hit:
                return hit
            hit = _find_redex(r, path + (1,))
            if hit:
                return hit
        case Forall(_, b):
            hit = _find_redex(b, path + (0,))
            if hit:
                return hit
    for name, rule in RULES:
        out = rule(A)
        if out is not None:
            return path, name, out
    return None


def canonicalize(A: Formula) -> tuple[Formula, list[RewriteStep]]:
    trace: list[RewriteStep] = []
    cur = A
    m = measure(cur)
    while True:
        hit = _find_redex(cur)
        if hit is None:
            break
        path, name, local_after = hit
        before_local = _subformula(cur, path)
        nxt = _replace(cur, path, local_after)
        m2 = measure(nxt)
        if m.exact() and m2.exact():
            assert m2.key() < m.key(), f"measure did not decrease on {name}"
        trace.append(RewriteStep(name, path, before_local, local_after))
        cur, m = nxt, m2
    assert is_canonical(cur)
    return cur, trace


### Table 4 grammar membership
#
#   R ::= X t...  |  bot
#   A ::= R  |  Q -> A
#   Q ::= A  |  forall x. Q
#   B ::= Q  |  B /\ Q
#   C ::= B  |  top


def _is_R(A: Formula) -> bool:
    return isinstance(A, (Atom, Bot))


def _is_A(A: Formula) -> bool:
    if _is_R(A):
        return True
    return isinstance(A, Imp) and _is_Q(A.left) and _is_A(A.right)


def _is_Q(A: Formula) -> bool:
    while isinstance(A, Forall):
        A = A.body
    return _is_A(A)


def _is_B(A: Formula) -> bool:
    if isinstance(A, And):
        return _is_B(A.left) and _is_Q(A.right)
    return _is_Q(A)


def is_canonical(A: Formula) -> bool:
    return isinstance(A, Top) or _is_B(A)


def conjuncts(A: Formula) -> list[Formula]:
    """Components of a canonical formula: [] for top, left-nested otherwise."""
    if isinstance(A, Top):
        return []
    out: list[Formula] = []
    while isinstance(A, And):
        out.append(A.right)
        A = A.left
    out.append(A)
    out.reverse()
    return out


def big_and(parts: list[Formula]) -> Formula:
    """Left-nested conjunction of the parts; top for the empty list."""
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def arrow_decompose(Q: Formula) -> tuple[list[str], list[Formula], Formula]:
    """Split a canonical component forall x.. (Q1 -> ... -> Qk -> R).

    Returns binder hints, premises (with bound indices intact relative to the
    binders), and the final R.
    """
    hints: list[str] = []
    while isinstance(Q, Forall):
        hints.append(Q.hint)
        Q = Q.body
    prems: list[Formula] = []
    while isinstance(Q, Imp):
        prems.append(Q.left)
        Q = Q.right
    return hints, prems, Q
