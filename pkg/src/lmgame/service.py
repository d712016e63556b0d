"""HTTP+JSON session service: play Opponent live against a term.

Three modes.  In ``arena-play`` the engine denotes the term as an innocent
strategy and answers through its view function; ``qa-play`` is the same
game on the unfolded question/answer arena (propositional types only);
``uva-play`` runs the provability game, the engine choosing its moves by
executing the term on the Krivine machine.

Endpoints: ``POST /sessions`` creates a session from {mode, term, type},
``POST /sessions/{id}/moves`` submits one Opponent move and returns the
engine's reply, ``GET /sessions/{id}`` snapshots the transcript.  Sessions
live in memory only, at most CAPACITY (64) of them, least recently used
evicted first.  No authentication; the service is a local tool.

Legal-move enumeration is finite by design: in the arena modes Opponent
instantiations are exactly the fresh enumeration variables (the only
choice plays admit), and in uva-play each slot offers the next fresh
variable or any constant collected from the session's type and term.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .arena import Arena, arena_of, arena_to_json
from .canon import canonicalize
from .jsonio import (
    move_from_json,
    move_to_json,
    play_to_json,
    uva_move_to_json,
    uva_position_to_json,
)
from .kam import MachineRun, UvaPosition, uva_initial, uva_transition
from .parser import ParseError, parse_fo_term, parse_formula_file, parse_term_file, pp_formula
from .plays import MoveOcc, check_play
from .qa import unfold_arena, unfold_strategy
from .strategy import ViewFunction, play_o_extensions, respond_in_play
from .syntax import (
    And,
    Atom,
    Bot,
    Fn,
    Forall,
    Formula,
    FoTerm,
    Imp,
    Inst,
    LmTerm,
    Top,
    subterms,
)
from .typing import TypingError
from .denote import denote

CAPACITY = 64


def _constants(A: Formula, M: LmTerm) -> list[str]:
    """Nullary function symbols mentioned by the type or the term."""
    out: set[str] = set()

    def scan_t(t: FoTerm) -> None:
        stack = [t]
        while stack:
            u = stack.pop()
            if isinstance(u, Fn):
                if not u.args:
                    out.add(u.name)
                stack.extend(u.args)

    def scan_f(B: Formula) -> None:
        match B:
            case Atom(_, args):
                for t in args:
                    scan_t(t)
            case Imp(l, r) | And(l, r):
                scan_f(l)
                scan_f(r)
            case Forall(_, b):
                scan_f(b)
            case Top() | Bot():
                pass

    scan_f(A)
    for sub in subterms(M):
        if isinstance(sub, Inst):
            scan_t(sub.t)
    return sorted(out)


### sessions


@dataclass
class _ArenaSession:
    """arena-play and qa-play: the user is Opponent, the engine a strategy."""

    id: str
    mode: str
    arena: Arena
    sigma: ViewFunction
    play: list[MoveOcc] = field(default_factory=list)
    status: str = "open"
    lock: threading.Lock = field(default_factory=threading.Lock)

    def legal_moves(self) -> list[MoveOcc]:
        if self.status != "open":
            return []
        return play_o_extensions(self.arena, tuple(self.play))

    def refresh_status(self) -> None:
        if self.status == "open" and not play_o_extensions(self.arena, tuple(self.play)):
            self.status = "finished"

    def submit(self, m: MoveOcc) -> MoveOcc | None:
        if self.status != "open":
            raise HTTPException(400, f"session is {self.status}")
        if not (0 <= m.node < len(self.arena)) or self.arena.polarity(m.node) != 0:
            raise HTTPException(400, "submitted move is not an Opponent move")
        verdict = check_play(self.arena, tuple(self.play) + (m,))
        if not verdict:
            raise HTTPException(400, f"illegal move: {verdict.reason}")
        reply = respond_in_play(self.sigma, tuple(self.play), m)
        self.play.append(m)
        if reply is None:
            self.status = "dead-end"
            return None
        self.play.append(reply)
        assert check_play(self.arena, tuple(self.play))  # engine replies stay legal
        self.refresh_status()
        return reply

    def snapshot(self) -> dict:
        return {
            "sessionId": self.id,
            "mode": self.mode,
            "arena": arena_to_json(self.arena),
            "play": play_to_json(tuple(self.play)),
            "legalMoves": [move_to_json(m) for m in self.legal_moves()],
            "status": self.status,
            "turn": "P" if self.status == "dead-end" else "O",
        }


@dataclass
class _UvaSession:
    """uva-play: Opponent grants goals, the machine answers as Player."""

    id: str
    run: MachineRun
    constants: list[str]
    positions: list[UvaPosition] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self) -> str:
        return "finished" if self.run.status == "done" else "open"

    def _slot_options(self, nslots: int) -> list[list[str]]:
        base = self.run._ocount
        return [[f"o{base + i}"] + [f"{c}()" for c in self.constants] for i in range(nslots)]

    def legal_moves(self) -> list[dict]:
        if self.run.status == "start":
            root = self.run.arena.roots[0]
            return [
                {
                    "index": 0,
                    "formula": pp_formula(self.run.formula),
                    "slots": self._slot_options(len(self.run.arena.nodes[root].fo)),
                }
            ]
        if self.run.status != "o":
            return []
        out = []
        for j in range(1, self.run.o_options() + 1):
            prem = self.run._prems[j - 1]
            node = self.run.arena.children[self.run.play[-1].node][j - 1]
            out.append(
                {
                    "index": j,
                    "formula": pp_formula(prem),
                    "slots": self._slot_options(len(self.run.arena.nodes[node].fo)),
                }
            )
        return out

    def submit(self, index: int, terms: tuple | None) -> dict:
        try:
            if self.run.status == "start":
                if index != 0:
                    raise ValueError("the first move has index 0")
                self.run.start(terms)
            else:
                self.run.o_move(index, terms)
        except ValueError as e:
            raise HTTPException(400, f"illegal move: {e}")
        self._record()
        try:
            self.run.p_reply()
        except (ValueError, RuntimeError) as e:
            raise HTTPException(400, f"engine failed to reply: {e}")
        self._record()
        return self.transcript[-1]

    def _record(self) -> None:
        mv = self.run.uva_moves[len(self.transcript)]
        pos = uva_transition(self.positions[-1], mv)
        self.positions.append(pos)
        self.transcript.append(
            {"move": uva_move_to_json(mv), "position": uva_position_to_json(pos)}
        )

    def snapshot(self) -> dict:
        return {
            "sessionId": self.id,
            "mode": "uva-play",
            "type": pp_formula(self.run.formula),
            "arena": arena_to_json(self.run.arena),
            "position": uva_position_to_json(self.positions[-1]),
            "play": play_to_json(tuple(self.run.play)),
            "transcript": list(self.transcript),
            "legalMoves": self.legal_moves(),
            "status": self.status,
            "turn": "O",
        }


### the application


class StartBody(BaseModel):
    mode: str
    term: str
    type: str
    options: dict = {}


class MoveBody(BaseModel):
    move: dict | None = None  # arena modes: a full move occurrence
    index: int | None = None  # uva: which goal (0 = the initial grant)
    terms: list[str] | None = None  # uva: slot instantiations


def create_app(capacity: int = CAPACITY) -> FastAPI:
    app = FastAPI(title="lmgame session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: OrderedDict[str, _ArenaSession | _UvaSession] = OrderedDict()
    store_lock = threading.Lock()

    def remember(s) -> None:
        with store_lock:
            sessions[s.id] = s
            while len(sessions) > capacity:
                sessions.popitem(last=False)

    def fetch(sid: str):
        with store_lock:
            s = sessions.get(sid)
            if s is None:
                raise HTTPException(404, "unknown or evicted session")
            sessions.move_to_end(sid)
            return s

    @app.post("/sessions", status_code=201)
    def session_start(body: StartBody) -> dict:
        try:
            M = parse_term_file(body.term)
            A = parse_formula_file(body.type)
        except ParseError as e:
            raise HTTPException(400, f"parse error: {e}")
        sid = uuid.uuid4().hex[:12]
        try:
            if body.mode == "arena-play":
                sigma = denote(M, A)
                s = _ArenaSession(sid, body.mode, sigma.arena, sigma)
                s.refresh_status()
            elif body.mode == "qa-play":
                cf, _ = canonicalize(A)
                sigma = unfold_strategy(denote(M, A))
                s = _ArenaSession(sid, body.mode, unfold_arena(arena_of(cf)), sigma)
                s.refresh_status()
            elif body.mode == "uva-play":
                run = MachineRun(M, A)
                extra = [str(c) for c in body.options.get("constants", [])]
                s = _UvaSession(sid, run, sorted(set(_constants(A, M)) | set(extra)))
                s.positions.append(uva_initial(A))
            else:
                raise HTTPException(400, f"unknown mode {body.mode!r}")
        except (TypingError, ValueError) as e:
            raise HTTPException(400, str(e))
        remember(s)
        return s.snapshot()

    @app.post("/sessions/{sid}/moves")
    def session_move(sid: str, body: MoveBody) -> dict:
        s = fetch(sid)
        with s.lock:
            if isinstance(s, _UvaSession):
                if body.index is None:
                    raise HTTPException(400, "uva moves need an index")
                terms = None
                if body.terms is not None:
                    try:
                        terms = tuple(parse_fo_term(t) for t in body.terms)
                    except ParseError as e:
                        raise HTTPException(400, f"parse error: {e}")
                entry = s.submit(body.index, terms)
                return {
                    "engineReply": entry["move"],
                    "position": entry["position"],
                    "play": play_to_json(tuple(s.run.play)),
                    "transcript": list(s.transcript),
                    "legalMoves": s.legal_moves(),
                    "status": s.status,
                }
            if body.move is None:
                raise HTTPException(400, "arena moves need a move object")
            try:
                m = move_from_json(body.move)
            except (ParseError, KeyError, TypeError, ValueError) as e:
                raise HTTPException(400, f"bad move object: {e}")
            reply = s.submit(m)
            return {
                "engineReply": None if reply is None else move_to_json(reply),
                "play": play_to_json(tuple(s.play)),
                "legalMoves": [move_to_json(x) for x in s.legal_moves()],
                "status": s.status,
            }

    @app.get("/sessions/{sid}")
    def session_state(sid: str) -> dict:
        s = fetch(sid)
        with s.lock:
            return s.snapshot()

    return app


app = create_app()
