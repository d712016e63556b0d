"""JSON encodings shared by the command line and the HTTP service.

Formulas and first-order terms travel as concrete syntax strings (the
printer and the parser are mutually inverse), arenas via arena_to_json,
moves as {node, justifier, mu, inst} with mu-links as [target, slot]
pairs.  A view function is its arena plus its maximal views; rebuilding
prefix-closes them again.
"""

from .arena import arena_from_json, arena_to_json
from .kam import UvaMove, UvaPosition
from .parser import parse_fo_term, pp_formula, pp_fo_term
from .plays import MoveOcc, Play
from .strategy import ViewFunction


def move_to_json(m: MoveOcc) -> dict:
    return {
        "node": m.node,
        "justifier": m.justifier,
        "mu": [None if link is None else [link[0], link[1]] for link in m.mu],
        "inst": [pp_fo_term(t) for t in m.inst],
    }


def move_from_json(d: dict) -> MoveOcc:
    jus = d.get("justifier")
    mu = tuple(None if link is None else (int(link[0]), int(link[1])) for link in d.get("mu", []))
    inst = tuple(parse_fo_term(s) for s in d.get("inst", []))
    return MoveOcc(int(d["node"]), None if jus is None else int(jus), mu, inst)


def play_to_json(s: Play) -> list[dict]:
    return [move_to_json(m) for m in s]


def play_from_json(items: list[dict]) -> Play:
    return tuple(move_from_json(d) for d in items)


def vf_to_json(sigma: ViewFunction) -> dict:
    return {
        "arena": arena_to_json(sigma.arena),
        "views": [play_to_json(v) for v in sigma.maximal_views()],
    }


def vf_from_json(d: dict) -> ViewFunction:
    arena = arena_from_json(d["arena"])
    return ViewFunction(arena, [play_from_json(v) for v in d["views"]])


def uva_position_to_json(p: UvaPosition) -> dict:
    return {
        "U": sorted(pp_formula(f) for f in p.U),
        "V": sorted(pp_formula(f) for f in p.V),
        "A": sorted(pp_formula(f) for f in p.A),
    }


def uva_move_to_json(mv: UvaMove) -> dict:
    return {
        "player": mv.player,
        "formula": pp_formula(mv.formula),
        "inst": [pp_fo_term(t) for t in mv.inst],
    }
