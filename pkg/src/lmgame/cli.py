"""Command line front end for the toolkit.

Every subcommand accepts terms and formulas either inline or as a path to
a file (detected by existence; ``#`` comments are stripped from files and
text alike).  ``--json`` switches any command to machine output.  Exit
codes: 0 success, 1 domain failure (parse, typing, illegal input), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .arena import Arena, arena_of, arena_to_json, interp_arena, types_isomorphic
from .canon import canonicalize
from .compose import compose
from .denote import denote
from .forest import readback
from .jsonio import play_to_json, vf_from_json, vf_to_json
from .kam import FUEL, MachineRun, pp_state
from .normal import canonical_normal_form
from .parser import (
    ParseError,
    parse_formula_file,
    parse_term_file,
    pp_formula,
    pp_fo_term,
    pp_term,
)
from .plays import MoveOcc, Play
from .qa import fold_arena, fold_strategy, translate_lm_to_lambda, unfold_arena, unfold_strategy
from .strategy import ViewFunction
from .syntax import Imp
from .typing import TypingError, typecheck


def _read(arg: str) -> str:
    p = Path(arg)
    if p.is_file():
        return p.read_text()
    return arg


def _term(arg: str):
    return parse_term_file(_read(arg))


def _formula(arg: str):
    return parse_formula_file(_read(arg))


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        print(text)


### rendering


def _render_move(m: MoveOcc) -> str:
    out = str(m.node)
    if m.justifier is not None:
        out += f"@{m.justifier}"
    if any(link is not None for link in m.mu):
        out += "~" + ",".join(
            "-" if link is None else f"{link[0]}.{link[1]}" for link in m.mu
        )
    if m.inst:
        out += "{" + ",".join(pp_fo_term(t) for t in m.inst) + "}"
    return out


def _render_play(s: Play) -> str:
    return " ".join(_render_move(m) for m in s) if s else "(empty)"


def _render_arena(A: Arena) -> str:
    lines = []

    def go(n: int, depth: int) -> None:
        node = A.nodes[n]
        pol = "O" if A.polarity(n) == 0 else "P"
        label = f"{n} [{pol}]"
        if node.fo:
            label += " forall " + ",".join(node.fo) + "."
        if node.at:
            label += " " + "; ".join(pp_formula(a) for a in node.at)
        lines.append("  " * depth + label)
        for c in A.children[n]:
            go(c, depth + 1)

    for r in A.roots:
        go(r, 0)
    return "\n".join(lines) if lines else "(empty arena)"


def _render_vf(sigma: ViewFunction) -> str:
    maxi = sigma.maximal_views()
    head = f"{len(sigma.views)} views, {len(maxi)} maximal:"
    return "\n".join([head] + ["  " + _render_play(v) for v in maxi])


### subcommands


def cmd_typecheck(args) -> None:
    M = _term(args.term)
    goal = _formula(args.type) if args.type else None
    ty, el = typecheck({}, M, {}, goal)
    _emit(args, {"type": pp_formula(ty), "elaborated": pp_term(el)}, pp_formula(ty))


def cmd_canon(args) -> None:
    A = _formula(args.formula)
    cf, steps = canonicalize(A)
    if args.trace and not args.json:
        for st in steps:
            print(f"{st.rule:>12}  {pp_formula(st.before)}  =>  {pp_formula(st.after)}")
    data = {
        "input": pp_formula(A),
        "canonical": pp_formula(cf),
        "steps": [
            {
                "rule": st.rule,
                "path": list(st.path),
                "before": pp_formula(st.before),
                "after": pp_formula(st.after),
            }
            for st in steps
        ],
    }
    _emit(args, data, pp_formula(cf))


def cmd_cnf(args) -> None:
    M = _term(args.term)
    A = _formula(args.type)
    N, A0 = canonical_normal_form(M, A)
    _emit(args, {"term": pp_term(N), "type": pp_formula(A0)}, pp_term(N))


def cmd_arena(args) -> None:
    A = _formula(args.formula)
    cf, _ = canonicalize(A)
    ar = arena_of(cf)
    if args.qa:
        ar = unfold_arena(ar)
    data = arena_to_json(ar)
    data["canonical"] = pp_formula(cf)
    _emit(args, data, _render_arena(ar))


def cmd_iso(args) -> None:
    A, B = _formula(args.left), _formula(args.right)
    ok = types_isomorphic(A, B)
    _emit(args, {"isomorphic": ok}, "isomorphic" if ok else "not isomorphic")


def cmd_denote(args) -> None:
    sigma = denote(_term(args.term), _formula(args.type))
    _emit(args, vf_to_json(sigma), _render_vf(sigma))


def cmd_readback(args) -> None:
    A = _formula(args.type)
    cf, _ = canonicalize(A)
    N = readback(denote(_term(args.term), A), cf)
    _emit(args, {"term": pp_term(N), "type": pp_formula(cf)}, pp_term(N))


def cmd_compose(args) -> None:
    A, B, C = (canonicalize(_formula(t))[0] for t in args.types)
    sigma = denote(_term(args.left), Imp(A, B))
    tau = denote(_term(args.right), Imp(B, C))
    out = compose(interp_arena(A), interp_arena(B), interp_arena(C), sigma, tau)
    data = vf_to_json(out)
    text = _render_vf(out)
    if args.readback:
        cf, _ = canonicalize(Imp(A, C))
        N = readback(out, cf)
        data["readback"] = pp_term(N)
        text += "\nreadback: " + pp_term(N)
    _emit(args, data, text)


def cmd_unfold(args) -> None:
    A = _formula(args.formula)
    cf, _ = canonicalize(A)
    if args.term:
        tau = unfold_strategy(denote(_term(args.term), A))
        _emit(args, vf_to_json(tau), _render_vf(tau))
    else:
        Q = unfold_arena(arena_of(cf))
        _emit(args, arena_to_json(Q), _render_arena(Q))


def cmd_fold(args) -> None:
    data = json.loads(_read(args.input))
    if "views" in data:
        sigma = fold_strategy(vf_from_json(data))
        _emit(args, vf_to_json(sigma), _render_vf(sigma))
    else:
        from .arena import arena_from_json

        A = fold_arena(arena_from_json(data))
        _emit(args, arena_to_json(A), _render_arena(A))


def cmd_tolambda(args) -> None:
    N, ty, ctx = translate_lm_to_lambda(_term(args.term), _formula(args.type))
    ctx_s = ", ".join(f"{x}: {pp_formula(G)}" for x, G in sorted(ctx.items()))
    data = {
        "term": pp_term(N, annotations=False),
        "type": pp_formula(ty),
        "context": {x: pp_formula(G) for x, G in ctx.items()},
    }
    _emit(args, data, f"{ctx_s} |- {pp_term(N, annotations=False)} : {pp_formula(ty)}")


def _parse_choices(text: str) -> list[int]:
    if not text.strip():
        return []
    return [int(part) for part in text.split(";")]


def cmd_kam_run(args) -> None:
    M = _term(args.file)
    A = _formula(args.type)
    choices = _parse_choices(args.choices)
    run = MachineRun(M, A, fuel=args.fuel)
    trace_lines: list[str] = []

    def drain() -> None:
        if args.trace:
            from .kam import kam_step

            s = run.pending
            while s is not None:
                trace_lines.append(pp_state(s))
                if not args.json:
                    print(pp_state(s))
                s = kam_step(s)
        run.p_reply()

    run.start()
    drain()
    for j in choices:
        run.o_move(j)
        drain()
    if run.status == "o":
        left = ", ".join(str(i + 1) for i in range(run.o_options()))
        raise ValueError(f"run is not finished: Opponent still has arguments {left}")
    from .plays import is_view

    data = {
        "play": play_to_json(tuple(run.play)),
        "isView": is_view(run.arena, tuple(run.play)),
        "uva": [
            {"player": mv.player, "formula": pp_formula(mv.formula)} for mv in run.uva_moves
        ],
        "status": run.status,
    }
    if args.trace:
        data["trace"] = trace_lines
    _emit(args, data, "play: " + _render_play(tuple(run.play)))


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)


### wiring


def _add_json(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="lmgame", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("typecheck", help="infer or check the type of a term")
    p.add_argument("term", help="term text or file")
    p.add_argument("--type", help="goal formula to check against")
    _add_json(p)
    p.set_defaults(fn=cmd_typecheck)

    p = sub.add_parser("canon", help="canonical form of a formula")
    p.add_argument("formula")
    p.add_argument("--trace", action="store_true", help="print each rewrite step")
    _add_json(p)
    p.set_defaults(fn=cmd_canon)

    p = sub.add_parser("cnf", help="canonical normal form of a typed term")
    p.add_argument("term")
    p.add_argument("--type", required=True)
    _add_json(p)
    p.set_defaults(fn=cmd_cnf)

    p = sub.add_parser("arena", help="arena of a formula (canonicalized first)")
    p.add_argument("formula")
    p.add_argument("--qa", action="store_true", help="unfold to the question/answer arena")
    _add_json(p)
    p.set_defaults(fn=cmd_arena)

    p = sub.add_parser("iso", help="decide isomorphism of two types")
    p.add_argument("left")
    p.add_argument("right")
    _add_json(p)
    p.set_defaults(fn=cmd_iso)

    p = sub.add_parser("denote", help="view function of a typed term")
    p.add_argument("term")
    p.add_argument("--type", required=True)
    _add_json(p)
    p.set_defaults(fn=cmd_denote)

    p = sub.add_parser("readback", help="term read back from the denotation")
    p.add_argument("term")
    p.add_argument("--type", required=True)
    _add_json(p)
    p.set_defaults(fn=cmd_readback)

    p = sub.add_parser("compose", help="compose the strategies of two terms")
    p.add_argument("left", help="term of type A -> B")
    p.add_argument("right", help="term of type B -> C")
    p.add_argument("--types", nargs=3, required=True, metavar=("A", "B", "C"))
    p.add_argument("--readback", action="store_true", help="also read back the composite")
    _add_json(p)
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("unfold", help="two-move unfolding of an arena or a strategy")
    p.add_argument("formula")
    p.add_argument("--term", help="unfold this term's strategy instead of the arena")
    _add_json(p)
    p.set_defaults(fn=cmd_unfold)

    p = sub.add_parser("fold", help="fold a QA arena or strategy JSON back")
    p.add_argument("input", help="JSON file or text as produced by unfold --json")
    _add_json(p)
    p.set_defaults(fn=cmd_fold)

    p = sub.add_parser("tolambda", help="simply typed lambda translation of a term")
    p.add_argument("term")
    p.add_argument("--type", required=True)
    _add_json(p)
    p.set_defaults(fn=cmd_tolambda)

    p = sub.add_parser("kam", help="Krivine machine")
    ksub = p.add_subparsers(dest="kam_command", required=True)
    k = ksub.add_parser("run", help="run a term through the game protocol")
    k.add_argument("file", help="lambda-mu term text or .lmt file")
    k.add_argument("--type", required=True, help="formula text or .fof file")
    k.add_argument("--choices", default="", help='Opponent argument indices, e.g. "1;1"')
    k.add_argument("--trace", action="store_true", help="print every machine state")
    k.add_argument("--fuel", type=int, default=FUEL)
    _add_json(k)
    k.set_defaults(fn=cmd_kam_run)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    return top


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (ParseError, TypingError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
